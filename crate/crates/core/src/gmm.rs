//! Generalized-method-of-moments inference for the shift: the `G²`
//! minimizer, the overidentification test against chi-squared on two degrees
//! of freedom, the difference test against one degree of freedom, and
//! confidence sets (which, unlike the rank sets, need not be intervals).

use crate::error::Error;
use crate::hypergeom::HypergeomModel;
use crate::rank::{
    merge_accepted_runs, ConfidenceSet, EstimateResult, EstimateRule, Interval, Reference,
    TestResult,
};
use crate::special::{chi_squared_sf, normal_quantile};
use crate::table::{trajectory, TwoSample};
use crate::Result;

/// GMM point estimate with its overidentification diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmResult {
    /// Midpoint of the selected minimizing segment.
    pub estimate: EstimateResult,
    /// Global minimum of `G²` over all shifts.
    pub min_g2: f64,
    /// Every half-open shift segment attaining the global minimum.
    pub minimizing_segments: Vec<Interval>,
    /// Overidentification test: `min G²` against chi-squared, 2 df. There is
    /// no exact null law for this statistic because it is evaluated at the
    /// data-chosen shift.
    pub overid: TestResult,
    /// True when the global minimum is attained on more than one disjoint
    /// segment, in which case the longest (then leftmost) bounded segment
    /// was selected.
    pub ambiguous: bool,
}

// Global-minimum ties: mathematically equal G2 values on mirror-image
// tables can differ by float noise.
fn min_tolerance(min: f64) -> f64 {
    1e-9 * (1.0 + min.abs())
}

/// Raw scan products shared by the estimate, the difference test and the
/// confidence sets. `g2[i]` must be the constant value of `G²` on segment
/// `i` of `breakpoints`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmScan {
    pub min_g2: f64,
    /// Half-open segments attaining the minimum, in shift order.
    pub minimizing: Vec<Interval>,
    /// The bounded minimizing segment chosen by the longest-then-leftmost
    /// rule; `None` when every minimizing segment is unbounded.
    pub selected: Option<Interval>,
}

/// Scans per-segment `G²` values for the global minimum and the segment
/// selection.
pub fn scan_segments(breakpoints: &[f64], g2: &[f64]) -> GmmScan {
    debug_assert_eq!(g2.len(), breakpoints.len() + 1);
    let k = breakpoints.len();
    let min_g2 = g2.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = min_tolerance(min_g2);

    let mut minimizing = Vec::new();
    let mut selected: Option<Interval> = None;
    let mut i = 0;
    while i <= k {
        if g2[i] <= min_g2 + tol {
            let start = i;
            while i + 1 <= k && g2[i + 1] <= min_g2 + tol {
                i += 1;
            }
            let lo = if start == 0 {
                f64::NEG_INFINITY
            } else {
                breakpoints[start - 1]
            };
            let hi = if i == k {
                f64::INFINITY
            } else {
                breakpoints[i]
            };
            let seg = Interval::new(lo, hi);
            if seg.is_bounded() {
                let better = match selected {
                    None => true,
                    Some(cur) => seg.length() > cur.length(),
                };
                if better {
                    selected = Some(seg);
                }
            }
            minimizing.push(seg);
        }
        i += 1;
    }
    GmmScan {
        min_g2,
        minimizing,
        selected,
    }
}

/// The GMM estimate: the shift minimizing `G²`, taken as the midpoint of the
/// minimizing segment.
///
/// When the minimum is attained only on an unbounded end segment no midpoint
/// exists and [`Error::UnboundedMinimizer`] is returned.
pub fn gmm_estimate(data: &TwoSample) -> Result<GmmResult> {
    let traj = trajectory(data);
    let model = HypergeomModel::new(*traj.design())?;
    let g2: Vec<f64> = traj.segments().iter().map(|a| model.g2(a)).collect();
    let scan = scan_segments(traj.breakpoints(), &g2);
    let selected = scan.selected.ok_or(Error::UnboundedMinimizer)?;
    let estimate = EstimateResult {
        estimate: selected.midpoint(),
        defining_interval: selected,
        rule: EstimateRule::IntervalMidpoint,
    };
    let overid = TestResult {
        statistic: scan.min_g2,
        exact_p: None,
        asymptotic_p: chi_squared_sf(scan.min_g2, 2),
        reference: Reference::ChiSquared { df: 2 },
        delta0: estimate.estimate,
    };
    Ok(GmmResult {
        estimate,
        min_g2: scan.min_g2,
        ambiguous: scan.minimizing.len() > 1,
        minimizing_segments: scan.minimizing,
        overid,
    })
}

/// Tests `H0: shift = delta0` by comparing `G²(delta0) - min G²` to
/// chi-squared on one degree of freedom. No exact null law exists for this
/// statistic.
pub fn gmm_difference_test(data: &TwoSample, delta0: f64) -> Result<TestResult> {
    let traj = trajectory(data);
    let model = HypergeomModel::new(*traj.design())?;
    let g2: Vec<f64> = traj.segments().iter().map(|a| model.g2(a)).collect();
    let min_g2 = g2.iter().copied().fold(f64::INFINITY, f64::min);
    let at = g2[traj.segment_index(delta0)];
    let statistic = at - min_g2;
    debug_assert!(statistic >= 0.0);
    Ok(TestResult {
        statistic,
        exact_p: None,
        asymptotic_p: chi_squared_sf(statistic, 1),
        reference: Reference::ChiSquared { df: 1 },
        delta0,
    })
}

/// Builds the confidence set from a finished scan: the closure of the union
/// of segments with `G² - min G²` inside the chi-squared(1) acceptance
/// region, merged into maximal disjoint closed intervals.
pub fn confidence_from_scan(
    breakpoints: &[f64],
    g2: &[f64],
    min_g2: f64,
    alpha: f64,
) -> ConfidenceSet {
    let z = normal_quantile(1.0 - 0.5 * alpha);
    let threshold = z * z;
    let accepted: Vec<bool> = g2.iter().map(|&v| v - min_g2 <= threshold).collect();
    let intervals = merge_accepted_runs(breakpoints, &accepted);
    ConfidenceSet {
        intervals,
        nominal_level: 1.0 - alpha,
        attained_level: None,
        unattainable: false,
    }
}

/// The set of shifts not rejected by [`gmm_difference_test`] at level
/// `alpha`. May be a union of several disjoint intervals.
pub fn gmm_confidence_set(data: &TwoSample, alpha: f64) -> Result<ConfidenceSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let traj = trajectory(data);
    let model = HypergeomModel::new(*traj.design())?;
    let g2: Vec<f64> = traj.segments().iter().map(|a| model.g2(a)).collect();
    let min_g2 = g2.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(confidence_from_scan(traj.breakpoints(), &g2, min_g2, alpha))
}
