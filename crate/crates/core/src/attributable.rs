//! Shift-free inference: the exact null distribution of the Mann-Whitney
//! count under random treatment assignment, and the attributable-effect
//! lower confidence bound built from it.

use crate::error::Error;
use crate::table::{mann_whitney_count, TwoSample};
use crate::Result;

/// Cap on the pmf table size `n*m + 1` accepted by the exact recursion.
pub const DEFAULT_MW_BUDGET: u64 = 1_000_000;

/// Exact null law of the Mann-Whitney count `V` on `{0, ..., n*m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MannWhitneyDist {
    n: usize,
    m: usize,
    pmf: Vec<f64>,
    /// `sf[v] = Pr(V >= v)`, one longer than pmf so `sf[nm + 1] = 0`.
    sf: Vec<f64>,
}

impl MannWhitneyDist {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_budget(n, m, DEFAULT_MW_BUDGET)
    }

    pub fn with_budget(n: usize, m: usize, budget: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(
                "both group sizes must be at least 1".into(),
            ));
        }
        let nm = n * m;
        if (nm as u128 + 1) > budget as u128 {
            return Err(Error::BudgetExceeded {
                required: nm as u128 + 1,
                budget,
            });
        }

        // Coefficients of the Gaussian binomial, built factor by factor:
        // multiply by 1/(1 - q^k) as a strided prefix sum, then by
        // (1 - q^{m+k}) as a strided subtraction. Renormalizing after each
        // factor keeps the values inside f64 range for any budgeted size.
        let mut c = vec![0.0f64; nm + 1];
        c[0] = 1.0;
        let mut top = 0usize; // highest nonzero degree so far
        for k in 1..=n {
            top += m;
            for u in k..=top {
                c[u] += c[u - k];
            }
            let s = m + k;
            for u in (s..=top).rev() {
                c[u] -= c[u - s];
            }
            let mut total = 0.0;
            for v in c[..=top].iter_mut() {
                if *v < 0.0 {
                    *v = 0.0; // float residue from the subtraction step
                }
                total += *v;
            }
            for v in c[..=top].iter_mut() {
                *v /= total;
            }
        }

        let mut sf = vec![0.0f64; nm + 2];
        for v in (0..=nm).rev() {
            sf[v] = sf[v + 1] + c[v];
        }
        Ok(MannWhitneyDist { n, m, pmf: c, sf })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn total_pairs(&self) -> usize {
        self.n * self.m
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, v: usize) -> f64 {
        self.pmf.get(v).copied().unwrap_or(0.0)
    }

    /// `Pr(V >= v)`; zero beyond `n*m`.
    pub fn upper_tail(&self, v: usize) -> f64 {
        self.sf.get(v).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.total_pairs() as f64 / 2.0
    }
}

/// Exact null distribution of the Mann-Whitney count for group sizes
/// `(n, m)`.
pub fn mw_null_distribution(n: usize, m: usize) -> Result<MannWhitneyDist> {
    MannWhitneyDist::new(n, m)
}

/// Attributable-effect lower confidence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributableResult {
    /// Observed Mann-Whitney count.
    pub v_observed: u64,
    /// `n*m`, the number of treated-control comparisons.
    pub total_pairs: u64,
    /// Smallest count whose null upper tail is at most `alpha`.
    pub critical_value: u64,
    /// `1 - Pr(V >= critical_value)` under the null.
    pub attained_confidence: f64,
    /// `max(0, v_observed - critical_value + 1)`: the number of favorable
    /// comparisons not explainable by chance at the attained confidence.
    pub lower_bound: u64,
    /// Set when no count attains tail `<= alpha`; the bound degenerates to
    /// zero with zero confidence.
    pub unattainable: bool,
}

/// Lower confidence bound on the number of treated-favorable comparisons
/// attributable to treatment, at level `alpha`.
pub fn attributable_bound(data: &TwoSample, alpha: f64) -> Result<AttributableResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let n = data.treated_len();
    let m = data.control_len();
    let nm = (n * m) as u64;
    let v_observed = mann_whitney_count(data);
    let dist = MannWhitneyDist::new(n, m)?;

    // smallest v in 0..=nm with Pr(V >= v) <= alpha; the tail is
    // nonincreasing in v. The slack keeps a tail that equals alpha as an
    // exact rational (like 9/45 at alpha = 0.2) on the rejectable side
    // despite float dust in the pmf recursion; genuine tail steps near any
    // usable alpha are many orders of magnitude wider.
    let threshold = alpha + 1e-9 * (1.0 + alpha);
    let mut lo = 0usize;
    let mut hi = nm as usize + 1;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if dist.upper_tail(mid) <= threshold {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let idx = lo;
    if idx > nm as usize {
        return Ok(AttributableResult {
            v_observed,
            total_pairs: nm,
            critical_value: 0,
            attained_confidence: 0.0,
            lower_bound: 0,
            unattainable: true,
        });
    }
    let critical_value = idx as u64;
    Ok(AttributableResult {
        v_observed,
        total_pairs: nm,
        critical_value,
        attained_confidence: 1.0 - dist.upper_tail(idx),
        lower_bound: (v_observed + 1).saturating_sub(critical_value),
        unattainable: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_data() -> TwoSample {
        TwoSample::new(
            vec![3.2, 5.1, 8.3, 8.8, 9.5, 11.9, 14.0],
            vec![
                3.7, 6.8, 8.4, 8.5, 10.0, 11.3, 12.0, 12.5, 18.7, 19.0, 20.0, 22.7, 24.0, 31.8,
                33.3, 36.0,
            ],
        )
        .unwrap()
    }

    // Exhaustive null law by enumerating every subset of pooled ranks as
    // the treated positions.
    fn brute_force_pmf(n: usize, m: usize) -> Vec<f64> {
        let total = n + m;
        let mut counts = vec![0u64; n * m + 1];
        let mut assignments = 0u64;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            assignments += 1;
            // V = number of (control, treated) pairs with treated above
            let mut v = 0usize;
            let mut controls_below = 0usize;
            for pos in 0..total {
                if mask & (1 << pos) != 0 {
                    v += controls_below;
                } else {
                    controls_below += 1;
                }
            }
            counts[v] += 1;
        }
        counts
            .iter()
            .map(|&c| c as f64 / assignments as f64)
            .collect()
    }

    #[test]
    fn tiny_reference_laws() {
        let d = MannWhitneyDist::new(1, 1).unwrap();
        assert!((d.prob(0) - 0.5).abs() < 1e-15);
        assert!((d.prob(1) - 0.5).abs() < 1e-15);

        let d = MannWhitneyDist::new(2, 1).unwrap();
        for v in 0..=2 {
            assert!((d.prob(v) - 1.0 / 3.0).abs() < 1e-14, "v={v}");
        }
    }

    #[test]
    fn matches_brute_force_small() {
        // every size pair with a pooled count up to 10
        for n in 1..=9usize {
            for m in 1..=(10 - n) {
                let d = MannWhitneyDist::new(n, m).unwrap();
                let brute = brute_force_pmf(n, m);
                for v in 0..=n * m {
                    assert!(
                        (d.prob(v) - brute[v]).abs() < 1e-12,
                        "n={n} m={m} v={v}: {} vs {}",
                        d.prob(v),
                        brute[v]
                    );
                }
            }
        }
    }

    #[test]
    fn symmetry_normalization_mean() {
        for &(n, m) in &[(16, 7), (10, 10), (3, 8)] {
            let d = MannWhitneyDist::new(n, m).unwrap();
            let nm = n * m;
            let total: f64 = d.pmf().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for v in 0..=nm {
                assert!(
                    (d.prob(v) - d.prob(nm - v)).abs() < 1e-12,
                    "asymmetry at v={v}"
                );
            }
            let mean: f64 = d.pmf().iter().enumerate().map(|(v, p)| v as f64 * p).sum();
            assert!((mean - d.mean()).abs() < 1e-9);
        }
    }

    #[test]
    fn demo_tail_value() {
        let d = MannWhitneyDist::new(16, 7).unwrap();
        let tail = d.upper_tail(82);
        assert!((tail - 0.044).abs() < 1e-3, "tail = {tail}");
    }

    #[test]
    fn demo_attributable_bound() {
        let r = attributable_bound(&demo_data(), 0.05).unwrap();
        assert_eq!(r.v_observed, 87);
        assert_eq!(r.total_pairs, 112);
        assert_eq!(r.critical_value, 82);
        assert_eq!(r.lower_bound, 6);
        assert!((r.attained_confidence - 0.956).abs() < 1e-3);
        assert!(!r.unattainable);
    }

    #[test]
    fn zero_observed_gives_zero_bound() {
        let data = TwoSample::new(vec![5.0, 6.0, 7.0], vec![1.0, 2.0]).unwrap();
        let r = attributable_bound(&data, 0.05).unwrap();
        assert_eq!(r.v_observed, 0);
        assert_eq!(r.lower_bound, 0);
    }

    #[test]
    fn bound_monotone_in_alpha() {
        let data = demo_data();
        let mut prev = u64::MAX;
        for alpha in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let r = attributable_bound(&data, alpha).unwrap();
            assert!(
                r.lower_bound <= prev,
                "higher confidence demanded must not raise the bound"
            );
            assert!(r.lower_bound <= r.v_observed);
            prev = r.lower_bound;
        }
    }

    #[test]
    fn unattainable_alpha() {
        // 1x1: the best attainable tail is 1/2
        let data = TwoSample::new(vec![0.0, 1.0, 2.0], vec![5.0]).unwrap();
        let n = data.treated_len();
        let m = data.control_len();
        let d = MannWhitneyDist::new(n, m).unwrap();
        assert!(d.upper_tail(n * m) > 0.05);
        let r = attributable_bound(&data, 0.05).unwrap();
        assert!(r.unattainable);
        assert_eq!(r.lower_bound, 0);
        assert_eq!(r.attained_confidence, 0.0);
    }

    #[test]
    fn budget_refusal() {
        assert!(MannWhitneyDist::new(2000, 2000).unwrap_err().is_budget());
        assert!(MannWhitneyDist::with_budget(2000, 2000, u64::MAX).is_ok());
    }
}
