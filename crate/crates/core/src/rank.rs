//! Fixed-score group-rank inference: the statistic `T = w'A`, exact and
//! large-sample tests of a hypothesized shift, the Hodges-Lehmann estimate,
//! and confidence intervals by test inversion.

use crate::error::Error;
use crate::hypergeom::{
    enumerate_support_budget, CellCounts, HypergeomModel, QuartileDesign,
    DEFAULT_ENUMERATION_BUDGET,
};
use crate::special::{chi_squared_sf, normal_quantile};
use crate::table::{build_table, representative_delta, sorted_breakpoints, trajectory, TwoSample};
use crate::Result;

/// Rank scores 0, 1, 2, 3.
pub const HL_WEIGHTS: [f64; 4] = [0.0, 1.0, 2.0, 3.0];
/// Median-test scores 0, 0, 1, 1.
pub const MOOD_WEIGHTS: [f64; 4] = [0.0, 0.0, 1.0, 1.0];
/// Maximin efficiency robust scores 0, 0.18, 0.82, 1.
pub const MERT_WEIGHTS: [f64; 4] = [0.0, 0.18, 0.82, 1.0];

/// Admissible group scores: `0 = w1 <= w2 < w3 <= w4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    w: [f64; 4],
}

impl WeightVector {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeights("weights must be finite".into()));
        }
        if w[0] != 0.0 {
            return Err(Error::InvalidWeights(format!(
                "first score must be 0, got {}",
                w[0]
            )));
        }
        if !(w[0] <= w[1] && w[1] < w[2] && w[2] <= w[3]) {
            return Err(Error::InvalidWeights(format!(
                "scores must satisfy 0 = w1 <= w2 < w3 <= w4, got {w:?}"
            )));
        }
        Ok(WeightVector { w })
    }

    pub fn weights(&self) -> [f64; 4] {
        self.w
    }

    pub fn dot(&self, v: [f64; 4]) -> f64 {
        self.w[0] * v[0] + self.w[1] * v[1] + self.w[2] * v[2] + self.w[3] * v[3]
    }

    pub fn dot_counts(&self, a: &CellCounts) -> f64 {
        self.dot(a.as_f64())
    }
}

/// Named score choices used throughout the simulations and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightPreset {
    HodgesLehmann,
    Mood,
    Mert,
    Custom(WeightVector),
}

impl WeightPreset {
    pub fn vector(&self) -> WeightVector {
        match self {
            WeightPreset::HodgesLehmann => WeightVector::new(HL_WEIGHTS).unwrap(),
            WeightPreset::Mood => WeightVector::new(MOOD_WEIGHTS).unwrap(),
            WeightPreset::Mert => WeightVector::new(MERT_WEIGHTS).unwrap(),
            WeightPreset::Custom(w) => *w,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightPreset::HodgesLehmann => "hl",
            WeightPreset::Mood => "mood",
            WeightPreset::Mert => "mert",
            WeightPreset::Custom(_) => "custom",
        }
    }
}

/// The group rank statistic `T = w'a`.
pub fn t_statistic(a: &CellCounts, w: &WeightVector) -> f64 {
    w.dot_counts(a)
}

/// How a test computes its p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    /// Enumerate the exact null law; error if over budget.
    Exact,
    /// Large-sample reference law only.
    Asymptotic,
    /// Exact when the budget allows, asymptotic otherwise.
    Auto,
}

/// Reference law for an asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    StandardNormal,
    ChiSquared { df: u32 },
}

impl Reference {
    pub fn label(&self) -> String {
        match self {
            Reference::StandardNormal => "normal".into(),
            Reference::ChiSquared { df } => format!("chisq{df}"),
        }
    }
}

/// Outcome of a single hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    /// Present iff the enumeration budget allowed the exact computation.
    pub exact_p: Option<f64>,
    pub asymptotic_p: f64,
    pub reference: Reference,
    pub delta0: f64,
}

/// A closed interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn whole_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Which Hodges-Lehmann rule produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateRule {
    /// The step function jumps past the target; the estimate is the unique
    /// crossing breakpoint.
    CrossingPoint,
    /// The target is attained on a shift interval; the estimate is its
    /// midpoint.
    IntervalMidpoint,
}

impl EstimateRule {
    pub fn label(&self) -> &'static str {
        match self {
            EstimateRule::CrossingPoint => "crossing-point",
            EstimateRule::IntervalMidpoint => "interval-midpoint",
        }
    }
}

/// A point estimate together with the interval that defines it.
///
/// For [`EstimateRule::IntervalMidpoint`] the defining interval is half-open
/// `[lo, hi)`; for [`EstimateRule::CrossingPoint`] it degenerates to the
/// crossing point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub defining_interval: Interval,
    pub rule: EstimateRule,
}

/// A finite union of disjoint closed intervals with its confidence levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    /// Sorted, pairwise disjoint closed intervals.
    pub intervals: Vec<Interval>,
    pub nominal_level: f64,
    /// The exactly achievable level, present in exact mode only.
    pub attained_level: Option<f64>,
    /// Set when the requested level was unattainable and the whole line was
    /// returned.
    pub unattainable: bool,
}

impl ConfidenceSet {
    pub fn is_interval(&self) -> bool {
        self.intervals.len() == 1
    }

    /// Shortest closed interval containing the set; `None` for an empty set.
    pub fn enclosing_interval(&self) -> Option<Interval> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => Some(Interval::new(first.lo, last.hi)),
            _ => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }
}

// Atom-merge tolerance: support values that agree to within float noise
// (for instance a table and its mirror under palindromic scores) must land
// in the same atom, while genuinely distinct atoms are many orders of
// magnitude further apart.
fn atom_tolerance(s: f64) -> f64 {
    1e-9 * (1.0 + s.abs())
}

/// Upper-tail table over the atoms of a discrete statistic.
#[derive(Debug, Clone, PartialEq)]
struct TailTable {
    /// Ascending atom values (group minima after merging).
    atoms: Vec<f64>,
    /// `tails[i] = Pr(statistic >= atoms[i])`.
    tails: Vec<f64>,
}

impl TailTable {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut atoms: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for (value, prob) in pairs {
            match atoms.last() {
                Some(&last) if value - last <= atom_tolerance(value) => {
                    *masses.last_mut().unwrap() += prob;
                }
                _ => {
                    atoms.push(value);
                    masses.push(prob);
                }
            }
        }
        let mut tails = vec![0.0; masses.len()];
        let mut acc = 0.0;
        for i in (0..masses.len()).rev() {
            acc += masses[i];
            // float accumulation can push the total a few ulp past 1
            tails[i] = acc.min(1.0);
        }
        TailTable { atoms, tails }
    }

    /// `Pr(statistic >= s)` with atom-merge tolerance.
    fn tail_at(&self, s: f64) -> f64 {
        let tol = atom_tolerance(s);
        let idx = self.atoms.partition_point(|&a| a < s - tol);
        if idx < self.tails.len() {
            self.tails[idx]
        } else {
            0.0
        }
    }

    /// Largest achievable tail probability `<= alpha`: the critical atom and
    /// its exact tail. `None` when even the most extreme atom exceeds
    /// `alpha`. A tail that equals `alpha` as an exact rational counts as
    /// attained despite float dust in the enumeration sums.
    fn critical(&self, alpha: f64) -> Option<(f64, f64)> {
        let threshold = alpha + 1e-9 * (1.0 + alpha);
        let idx = self.tails.partition_point(|&t| t > threshold);
        if idx < self.atoms.len() {
            Some((self.atoms[idx], self.tails[idx]))
        } else {
            None
        }
    }
}

/// Exact null law of `T = w'A` under the design's hypergeometric
/// distribution. The law does not depend on the hypothesized shift, so one
/// table serves every test on the same design and scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TNullDistribution {
    mean: f64,
    variance: f64,
    values: Vec<f64>,
    probs: Vec<f64>,
    squared_dev: TailTable,
}

impl TNullDistribution {
    pub fn new(design: &QuartileDesign, w: &WeightVector) -> Result<Self> {
        Self::with_budget(design, w, DEFAULT_ENUMERATION_BUDGET)
    }

    pub fn with_budget(design: &QuartileDesign, w: &WeightVector, budget: u64) -> Result<Self> {
        let model = HypergeomModel::new(*design)?;
        let mean = model.dot_expected(w.weights());
        let variance = model.quad_covariance(w.weights());

        let mut by_value: Vec<(f64, f64)> = Vec::new();
        for (a, p) in enumerate_support_budget(design, budget)? {
            by_value.push((w.dot_counts(&a), p));
        }
        by_value.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut values = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (t, p) in by_value {
            match values.last() {
                Some(&last) if t == last => *probs.last_mut().unwrap() += p,
                _ => {
                    values.push(t);
                    probs.push(p);
                }
            }
        }

        let squared_dev = TailTable::from_pairs(
            values
                .iter()
                .zip(&probs)
                .map(|(&t, &p)| ((t - mean) * (t - mean), p))
                .collect(),
        );

        Ok(TNullDistribution {
            mean,
            variance,
            values,
            probs,
            squared_dev,
        })
    }

    /// `w'E`, the null expectation of `T`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `w'Vw`, the null variance of `T`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Support values of `T` in ascending order with their probabilities.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// Exact two-sided p-value `Pr((T - w'E)^2 >= (t_obs - w'E)^2)`.
    pub fn two_sided_p(&self, t_obs: f64) -> f64 {
        let d = t_obs - self.mean;
        self.squared_dev.tail_at(d * d)
    }

    /// Largest achievable two-sided tail `<= alpha`.
    pub fn critical(&self, alpha: f64) -> Option<RankCritical> {
        self.squared_dev
            .critical(alpha)
            .map(|(atom, tail)| RankCritical {
                critical_squared_dev: atom,
                attained_tail: tail,
            })
    }
}

/// Critical point of the exact two-sided rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCritical {
    /// Smallest squared deviation `(T - w'E)^2` that is rejected.
    pub critical_squared_dev: f64,
    /// Exact rejection probability at that critical point.
    pub attained_tail: f64,
}

/// Exact null law of the fit statistic `G²` for a design.
#[derive(Debug, Clone, PartialEq)]
pub struct G2NullDistribution {
    table: TailTable,
}

impl G2NullDistribution {
    pub fn new(design: &QuartileDesign) -> Result<Self> {
        Self::with_budget(design, DEFAULT_ENUMERATION_BUDGET)
    }

    pub fn with_budget(design: &QuartileDesign, budget: u64) -> Result<Self> {
        let model = HypergeomModel::new(*design)?;
        let pairs = enumerate_support_budget(design, budget)?
            .map(|(a, p)| (model.g2(&a), p))
            .collect();
        Ok(G2NullDistribution {
            table: TailTable::from_pairs(pairs),
        })
    }

    /// Exact `Pr(G² >= g_obs)`.
    pub fn upper_tail_p(&self, g_obs: f64) -> f64 {
        self.table.tail_at(g_obs)
    }
}

/// Tests `H0: shift = delta0` with the squared deviate
/// `D² = {w'(A - E)}² / (w'Vw)`, referenced to chi-squared on one degree of
/// freedom (equivalently a two-sided standard Normal test of `D`).
pub fn deviate_test(
    data: &TwoSample,
    delta0: f64,
    w: &WeightVector,
    mode: TestMode,
) -> Result<TestResult> {
    let design = data.design();
    let model = HypergeomModel::new(design)?;
    let a = build_table(data, delta0);
    let t = w.dot_counts(&a);
    let mean = model.dot_expected(w.weights());
    let variance = model.quad_covariance(w.weights());
    let d2 = (t - mean) * (t - mean) / variance;
    let exact_p = match mode {
        TestMode::Asymptotic => None,
        TestMode::Exact => Some(TNullDistribution::new(&design, w)?.two_sided_p(t)),
        TestMode::Auto => match TNullDistribution::new(&design, w) {
            Ok(dist) => Some(dist.two_sided_p(t)),
            Err(e) if e.is_budget() => None,
            Err(e) => return Err(e),
        },
    };
    Ok(TestResult {
        statistic: d2,
        exact_p,
        asymptotic_p: chi_squared_sf(d2, 1),
        reference: Reference::ChiSquared { df: 1 },
        delta0,
    })
}

/// Tests the fit of the shift model at `delta0` with
/// `G² = (A - E)' V⁻ (A - E)`, referenced to chi-squared on three degrees of
/// freedom.
pub fn fit_test(data: &TwoSample, delta0: f64, mode: TestMode) -> Result<TestResult> {
    let design = data.design();
    let model = HypergeomModel::new(design)?;
    let g2 = model.g2(&build_table(data, delta0));
    let exact_p = match mode {
        TestMode::Asymptotic => None,
        TestMode::Exact => Some(G2NullDistribution::new(&design)?.upper_tail_p(g2)),
        TestMode::Auto => match G2NullDistribution::new(&design) {
            Ok(dist) => Some(dist.upper_tail_p(g2)),
            Err(e) if e.is_budget() => None,
            Err(e) => return Err(e),
        },
    };
    Ok(TestResult {
        statistic: g2,
        exact_p,
        asymptotic_p: chi_squared_sf(g2, 3),
        reference: Reference::ChiSquared { df: 3 },
        delta0,
    })
}

// Comparison tolerance against the estimating-equation target: segments
// whose T is mathematically equal to w'E can differ from it by float noise
// when the scores are fractional.
fn target_tolerance(tau: f64) -> f64 {
    1e-9 * (1.0 + tau.abs())
}

/// Smallest index in `lo..=hi` where `pred` is true, assuming `pred` is
/// monotone (false then true). Returns `hi + 1` when never true.
fn first_true(lo: usize, hi: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    let mut lo = lo;
    let mut hi = hi + 1;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Locates the Hodges-Lehmann estimate on a nonincreasing step function.
///
/// `t_of(i)` must return the constant value of `T` on segment `i` of the
/// breakpoint list (`0..=breakpoints.len()`). Shared by the by-probe path
/// ([`hl_estimate`]) and array-backed callers such as the simulation engine.
pub fn hl_locate(
    breakpoints: &[f64],
    tau: f64,
    mut t_of: impl FnMut(usize) -> f64,
) -> Result<EstimateResult> {
    if breakpoints.is_empty() {
        return Err(Error::Internal("no breakpoints in step function".into()));
    }
    let k = breakpoints.len();
    let tol = target_tolerance(tau);
    let first_below = first_true(0, k, |i| t_of(i) < tau - tol);
    if first_below > k {
        return Err(Error::Internal(
            "step function never drops below its null expectation".into(),
        ));
    }
    if first_below == 0 {
        return Err(Error::Internal(
            "step function starts below its null expectation".into(),
        ));
    }
    let first_at_or_below = first_true(0, first_below, |i| t_of(i) <= tau + tol);
    if first_at_or_below == first_below {
        // rule (i): equality never attained, the estimate is the unique
        // breakpoint where T passes w'E
        let cross = breakpoints[first_below - 1];
        Ok(EstimateResult {
            estimate: cross,
            defining_interval: Interval::point(cross),
            rule: EstimateRule::CrossingPoint,
        })
    } else {
        if first_at_or_below == 0 {
            return Err(Error::Internal(
                "estimating equation attained on an unbounded segment".into(),
            ));
        }
        // rule (ii): equality holds on [lo, hi); the estimate is the midpoint
        let lo = breakpoints[first_at_or_below - 1];
        let hi = breakpoints[first_below - 1];
        Ok(EstimateResult {
            estimate: 0.5 * (lo + hi),
            defining_interval: Interval::new(lo, hi),
            rule: EstimateRule::IntervalMidpoint,
        })
    }
}

/// The Hodges-Lehmann estimate for the scores `w`: the shift solving
/// `w'A = w'E`, by the crossing-point / interval-midpoint rules.
pub fn hl_estimate(data: &TwoSample, w: &WeightVector) -> Result<EstimateResult> {
    let model = HypergeomModel::new(data.design())?;
    let tau = model.dot_expected(w.weights());
    let bps = sorted_breakpoints(data);
    hl_locate(&bps, tau, |i| {
        w.dot_counts(&build_table(data, representative_delta(&bps, i)))
    })
}

/// Contiguous run of accepted segments around the crossing of `tau`,
/// located with O(log) probes of `t_of`. Returns `None` if no segment is
/// accepted (possible only with heavily tied data).
pub fn accepted_interval(
    breakpoints: &[f64],
    tau: f64,
    mut t_of: impl FnMut(usize) -> f64,
    mut accept: impl FnMut(f64) -> bool,
) -> Option<Interval> {
    let k = breakpoints.len();
    let tol = target_tolerance(tau);
    let first_below = first_true(0, k, |i| t_of(i) < tau - tol);
    // candidate seeds: the segments just at/after the crossing
    let mut seed = None;
    for cand in [first_below.saturating_sub(1), first_below.min(k)] {
        if accept(t_of(cand)) {
            seed = Some(cand);
            break;
        }
    }
    let seed = match seed {
        Some(s) => s,
        None => (0..=k).find(|&i| accept(t_of(i)))?,
    };
    // acceptance is monotone toward the seed on either side
    let lo_idx = first_true(0, seed, |i| accept(t_of(i)));
    let hi_idx = first_true(seed, k, |i| !accept(t_of(i))) - 1;
    let lo = if lo_idx == 0 {
        f64::NEG_INFINITY
    } else {
        breakpoints[lo_idx - 1]
    };
    let hi = if hi_idx == k {
        f64::INFINITY
    } else {
        breakpoints[hi_idx]
    };
    Some(Interval::new(lo, hi))
}

/// Merges a per-segment acceptance mask into maximal disjoint closed
/// intervals (the closure of the accepted half-open segments).
pub(crate) fn merge_accepted_runs(breakpoints: &[f64], accepted: &[bool]) -> Vec<Interval> {
    debug_assert_eq!(accepted.len(), breakpoints.len() + 1);
    let k = breakpoints.len();
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &ok) in accepted.iter().enumerate() {
        if ok && run_start.is_none() {
            run_start = Some(i);
        }
        if (!ok || i == k) && run_start.is_some() {
            let start = run_start.take().unwrap();
            let end = if ok { i } else { i - 1 };
            let lo = if start == 0 {
                f64::NEG_INFINITY
            } else {
                breakpoints[start - 1]
            };
            let hi = if end == k {
                f64::INFINITY
            } else {
                breakpoints[end]
            };
            out.push(Interval::new(lo, hi));
        }
    }
    out
}

/// Inversion mode for [`invert_rank_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMode {
    Exact,
    Asymptotic,
}

/// Confidence set for the shift by inverting the rank test. Monotonicity of
/// `T` makes the set a single closed interval whose endpoints are pairwise
/// differences.
///
/// Exact mode reports the attained level actually used (for example 95.6%
/// rather than 95%); when not even the most extreme tables can be rejected
/// at `alpha` the whole line is returned with the `unattainable` flag set.
pub fn invert_rank_test(
    data: &TwoSample,
    w: &WeightVector,
    alpha: f64,
    mode: CiMode,
) -> Result<ConfidenceSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let design = data.design();
    let model = HypergeomModel::new(design)?;
    let tau = model.dot_expected(w.weights());
    let variance = model.quad_covariance(w.weights());
    let bps = sorted_breakpoints(data);
    let t_of = |i: usize| w.dot_counts(&build_table(data, representative_delta(&bps, i)));

    match mode {
        CiMode::Exact => {
            let tnull = TNullDistribution::new(&design, w)?;
            match tnull.critical(alpha) {
                None => Ok(ConfidenceSet {
                    intervals: vec![Interval::whole_line()],
                    nominal_level: 1.0 - alpha,
                    attained_level: Some(1.0),
                    unattainable: true,
                }),
                Some(crit) => {
                    let interval =
                        accepted_interval(&bps, tau, t_of, |t| {
                            tnull.two_sided_p(t) > crit.attained_tail
                        })
                        .ok_or_else(|| {
                            Error::Internal("exact acceptance region is empty".into())
                        })?;
                    Ok(ConfidenceSet {
                        intervals: vec![interval],
                        nominal_level: 1.0 - alpha,
                        attained_level: Some(1.0 - crit.attained_tail),
                        unattainable: false,
                    })
                }
            }
        }
        CiMode::Asymptotic => {
            // segment scan of {delta : D^2 <= chi^2_1(1 - alpha)}
            let z = normal_quantile(1.0 - 0.5 * alpha);
            let threshold = z * z * variance;
            let traj = trajectory(data);
            let accepted: Vec<bool> = traj
                .segments()
                .iter()
                .map(|a| {
                    let d = w.dot_counts(a) - tau;
                    d * d <= threshold
                })
                .collect();
            let intervals = merge_accepted_runs(traj.breakpoints(), &accepted);
            if intervals.is_empty() {
                return Err(Error::Internal("asymptotic acceptance region is empty".into()));
            }
            debug_assert_eq!(intervals.len(), 1, "rank acceptance must be one interval");
            Ok(ConfidenceSet {
                intervals,
                nominal_level: 1.0 - alpha,
                attained_level: None,
                unattainable: false,
            })
        }
    }
}

/// Diagnostic companion to [`hl_estimate`]: the closure of the shift
/// segments minimizing the squared deviate, with the minimum `D²` value.
pub fn deviate_minimizing_interval(data: &TwoSample, w: &WeightVector) -> Result<(Interval, f64)> {
    let model = HypergeomModel::new(data.design())?;
    let tau = model.dot_expected(w.weights());
    let variance = model.quad_covariance(w.weights());
    let traj = trajectory(data);
    let sq: Vec<f64> = traj
        .segments()
        .iter()
        .map(|a| {
            let d = w.dot_counts(a) - tau;
            d * d
        })
        .collect();
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = atom_tolerance(min);
    let accepted: Vec<bool> = sq.iter().map(|&s| s <= min + tol).collect();
    let runs = merge_accepted_runs(traj.breakpoints(), &accepted);
    debug_assert!(!runs.is_empty());
    let enclosing = Interval::new(runs[0].lo, runs[runs.len() - 1].hi);
    Ok((enclosing, min / variance))
}
