//! Exact multivariate hypergeometric machinery for 4x2 tables with fixed
//! margins: pmf, moments, the specific generalized inverse of the singular
//! covariance, and full-support enumeration.

use crate::error::Error;
use crate::Result;

/// Default cap on the `(k1+1)(k2+1)(k3+1)` iteration space accepted by exact
/// enumeration. Beyond it the operations return [`Error::BudgetExceeded`] so
/// callers can switch to the Normal / chi-squared approximations.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Fixed margins of the pooled-quartile table: pooled size `N`, treated
/// count `n`, control count `m = N - n`, the quartile order-statistic
/// indices `q_i = ceil(i N / 4)`, and the four cell totals `k_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuartileDesign {
    total: usize,
    treated: usize,
    control: usize,
    quartile_indices: [usize; 3],
    cell_sizes: [usize; 4],
}

impl QuartileDesign {
    /// Builds the design for a pooled sample of `total` observations of
    /// which `treated` are treated. Rejects `total < 4` (an empty quartile
    /// cell) and treated counts outside `1..=total-1`.
    pub fn new(total: usize, treated: usize) -> Result<Self> {
        if total < 4 {
            return Err(Error::InvalidDesign(format!(
                "pooled size must be at least 4, got {total}"
            )));
        }
        if treated == 0 || treated >= total {
            return Err(Error::InvalidDesign(format!(
                "treated count must lie in 1..={}, got {treated}",
                total - 1
            )));
        }
        let q = [
            (total + 3) / 4,
            (2 * total + 3) / 4,
            (3 * total + 3) / 4,
        ];
        let k = [q[0], q[1] - q[0], q[2] - q[1], total - q[2]];
        debug_assert!(k.iter().all(|&kj| kj >= 1));
        debug_assert_eq!(k.iter().sum::<usize>(), total);
        Ok(QuartileDesign {
            total,
            treated,
            control: total - treated,
            quartile_indices: q,
            cell_sizes: k,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn treated(&self) -> usize {
        self.treated
    }

    pub fn control(&self) -> usize {
        self.control
    }

    /// The order-statistic indices of the three quartile cut points.
    pub fn quartile_indices(&self) -> [usize; 3] {
        self.quartile_indices
    }

    /// Cell totals `k1..k4` (row margins of the table).
    pub fn cell_sizes(&self) -> [usize; 4] {
        self.cell_sizes
    }

    /// Iteration-space size `(k1+1)(k2+1)(k3+1)` used for budget checks.
    pub fn enumeration_states(&self) -> u128 {
        self.cell_sizes[..3]
            .iter()
            .map(|&k| (k + 1) as u128)
            .product()
    }
}

/// Treated counts per quartile cell; the random vector of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellCounts {
    counts: [u32; 4],
}

impl CellCounts {
    /// Validates `0 <= a_j <= k_j` and `sum a_j = n` against the design.
    pub fn new(counts: [u32; 4], design: &QuartileDesign) -> Result<Self> {
        let k = design.cell_sizes();
        for j in 0..4 {
            if counts[j] as usize > k[j] {
                return Err(Error::InvalidCounts(format!(
                    "cell {} holds {} treated but only {} observations",
                    j + 1,
                    counts[j],
                    k[j]
                )));
            }
        }
        let total: u32 = counts.iter().sum();
        if total as usize != design.treated() {
            return Err(Error::InvalidCounts(format!(
                "cells sum to {total}, expected the treated count {}",
                design.treated()
            )));
        }
        Ok(CellCounts { counts })
    }

    pub(crate) fn new_unchecked(counts: [u32; 4]) -> Self {
        CellCounts { counts }
    }

    pub fn counts(&self) -> [u32; 4] {
        self.counts
    }

    pub fn as_f64(&self) -> [f64; 4] {
        [
            self.counts[0] as f64,
            self.counts[1] as f64,
            self.counts[2] as f64,
            self.counts[3] as f64,
        ]
    }
}

/// First and second moments of the table law for a design: the expected
/// counts `E`, the singular covariance `V`, and the generalized inverse with
/// zero first row and column whose lower-right 3x3 block inverts the
/// corresponding block of `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeomModel {
    design: QuartileDesign,
    expected: [f64; 4],
    covariance: [[f64; 4]; 4],
    ginv: [[f64; 4]; 4],
    // lower-right block of `ginv`, kept separately for the quadratic form
    inv_block: [[f64; 3]; 3],
}

impl HypergeomModel {
    pub fn new(design: QuartileDesign) -> Result<Self> {
        let nn = design.total() as f64;
        let n = design.treated() as f64;
        let m = design.control() as f64;
        let k = design.cell_sizes();

        let mut expected = [0.0; 4];
        for j in 0..4 {
            expected[j] = n * k[j] as f64 / nn;
        }

        let scale = n * m / (nn * nn * (nn - 1.0));
        let mut covariance = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                covariance[i][j] = if i == j {
                    scale * k[i] as f64 * (nn - k[i] as f64)
                } else {
                    -scale * k[i] as f64 * k[j] as f64
                };
            }
        }

        let mut block = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                block[i][j] = covariance[i + 1][j + 1];
            }
        }
        let inv_block = invert_3x3(&block)?;

        let mut ginv = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                ginv[i + 1][j + 1] = inv_block[i][j];
            }
        }

        Ok(HypergeomModel {
            design,
            expected,
            covariance,
            ginv,
            inv_block,
        })
    }

    pub fn design(&self) -> &QuartileDesign {
        &self.design
    }

    pub fn expected(&self) -> [f64; 4] {
        self.expected
    }

    pub fn covariance(&self) -> &[[f64; 4]; 4] {
        &self.covariance
    }

    pub fn generalized_inverse(&self) -> &[[f64; 4]; 4] {
        &self.ginv
    }

    /// `w' E` for an arbitrary real weighting of the cells.
    pub fn dot_expected(&self, w: [f64; 4]) -> f64 {
        dot4(w, self.expected)
    }

    /// Quadratic form `w' V w`.
    pub fn quad_covariance(&self, w: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            let mut row = 0.0;
            for j in 0..4 {
                row += self.covariance[i][j] * w[j];
            }
            acc += w[i] * row;
        }
        acc
    }

    /// The fit statistic `G² = (a - E)' V⁻ (a - E)`, evaluated through the
    /// nondegenerate three-cell reduction.
    pub fn g2(&self, a: &CellCounts) -> f64 {
        let av = a.as_f64();
        self.g2_of(av)
    }

    /// `G²` for a fractional table (used with `a = E` in tests).
    pub fn g2_of(&self, a: [f64; 4]) -> f64 {
        let d = [
            a[1] - self.expected[1],
            a[2] - self.expected[2],
            a[3] - self.expected[3],
        ];
        let mut acc = 0.0;
        for i in 0..3 {
            let mut row = 0.0;
            for j in 0..3 {
                row += self.inv_block[i][j] * d[j];
            }
            acc += d[i] * row;
        }
        acc
    }
}

fn dot4(a: [f64; 4], b: [f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Cofactor-expansion inverse of a 3x3 block, with a scaled singularity
/// check. The block is provably nonsingular when every `k_j >= 1`, so a
/// failure indicates invalid input.
fn invert_3x3(b: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let scale = b
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if det.abs() <= 1e-14 * scale * scale * scale {
        return Err(Error::SingularMatrix);
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    out[0][0] = (b[1][1] * b[2][2] - b[1][2] * b[2][1]) * inv_det;
    out[0][1] = (b[0][2] * b[2][1] - b[0][1] * b[2][2]) * inv_det;
    out[0][2] = (b[0][1] * b[1][2] - b[0][2] * b[1][1]) * inv_det;
    out[1][0] = (b[1][2] * b[2][0] - b[1][0] * b[2][2]) * inv_det;
    out[1][1] = (b[0][0] * b[2][2] - b[0][2] * b[2][0]) * inv_det;
    out[1][2] = (b[0][2] * b[1][0] - b[0][0] * b[1][2]) * inv_det;
    out[2][0] = (b[1][0] * b[2][1] - b[1][1] * b[2][0]) * inv_det;
    out[2][1] = (b[0][1] * b[2][0] - b[0][0] * b[2][1]) * inv_det;
    out[2][2] = (b[0][0] * b[1][1] - b[0][1] * b[1][0]) * inv_det;
    Ok(out)
}

/// Log-factorial table `ln(k!)` for `k <= n`, accumulated with compensated
/// summation so pmf values stay accurate for designs in the hundreds.
#[derive(Debug)]
pub(crate) struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub(crate) fn up_to(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for k in 1..=n {
            let term = (k as f64).ln() - carry;
            let next = sum + term;
            carry = (next - sum) - term;
            sum = next;
            table.push(sum);
        }
        LnFactorial { table }
    }

    pub(crate) fn ln_choose(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n && n < self.table.len());
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Exact pmf of a table under the design's multivariate hypergeometric law.
///
/// Binomial coefficients are evaluated in log space and exponentiated per
/// table, so designs in the hundreds do not overflow.
pub fn pmf(design: &QuartileDesign, a: &CellCounts) -> Result<f64> {
    // re-validate: `a` may have been built against a different design
    let a = CellCounts::new(a.counts(), design)?;
    let lnf = LnFactorial::up_to(design.total());
    Ok(pmf_with(design, &lnf, a.counts()))
}

fn pmf_with(design: &QuartileDesign, lnf: &LnFactorial, a: [u32; 4]) -> f64 {
    let k = design.cell_sizes();
    let mut ln_p = -lnf.ln_choose(design.total(), design.treated());
    for j in 0..4 {
        ln_p += lnf.ln_choose(k[j], a[j] as usize);
    }
    ln_p.exp()
}

/// Streams every admissible table exactly once with its pmf.
pub fn enumerate_support(design: &QuartileDesign) -> Result<SupportIter> {
    enumerate_support_budget(design, DEFAULT_ENUMERATION_BUDGET)
}

/// [`enumerate_support`] with an explicit budget on the iteration space.
pub fn enumerate_support_budget(design: &QuartileDesign, budget: u64) -> Result<SupportIter> {
    let states = design.enumeration_states();
    if states > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: states,
            budget,
        });
    }
    Ok(SupportIter::new(*design))
}

/// Iterator over `(CellCounts, probability)` for the full support.
#[derive(Debug)]
pub struct SupportIter {
    design: QuartileDesign,
    lnf: LnFactorial,
    a1: u32,
    a2: u32,
    a3: u32,
    done: bool,
}

impl SupportIter {
    fn new(design: QuartileDesign) -> Self {
        let lnf = LnFactorial::up_to(design.total());
        let mut it = SupportIter {
            design,
            lnf,
            a1: 0,
            a2: 0,
            a3: 0,
            done: false,
        };
        if !it.feasible() {
            it.advance();
        }
        it
    }

    fn feasible(&self) -> bool {
        let k = self.design.cell_sizes();
        let n = self.design.treated() as i64;
        let rest = n - self.a1 as i64 - self.a2 as i64 - self.a3 as i64;
        rest >= 0 && rest <= k[3] as i64
    }

    fn advance(&mut self) {
        let k = self.design.cell_sizes();
        loop {
            if (self.a3 as usize) < k[2] {
                self.a3 += 1;
            } else if (self.a2 as usize) < k[1] {
                self.a2 += 1;
                self.a3 = 0;
            } else if (self.a1 as usize) < k[0] {
                self.a1 += 1;
                self.a2 = 0;
                self.a3 = 0;
            } else {
                self.done = true;
                return;
            }
            if self.feasible() {
                return;
            }
        }
    }
}

impl Iterator for SupportIter {
    type Item = (CellCounts, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let n = self.design.treated() as u32;
        let a4 = n - self.a1 - self.a2 - self.a3;
        let a = [self.a1, self.a2, self.a3, a4];
        let p = pmf_with(&self.design, &self.lnf, a);
        self.advance();
        Some((CellCounts::new_unchecked(a), p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        let k = k.min(n - k);
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }

    #[test]
    fn design_reference_values() {
        let d = QuartileDesign::new(23, 16).unwrap();
        assert_eq!(d.quartile_indices(), [6, 12, 18]);
        assert_eq!(d.cell_sizes(), [6, 6, 6, 5]);
        assert_eq!(d.control(), 7);

        let d = QuartileDesign::new(8, 4).unwrap();
        assert_eq!(d.quartile_indices(), [2, 4, 6]);
        assert_eq!(d.cell_sizes(), [2, 2, 2, 2]);

        let d = QuartileDesign::new(4, 1).unwrap();
        assert_eq!(d.quartile_indices(), [1, 2, 3]);
        assert_eq!(d.cell_sizes(), [1, 1, 1, 1]);
    }

    #[test]
    fn design_rejections() {
        assert!(QuartileDesign::new(3, 1).is_err());
        assert!(QuartileDesign::new(10, 0).is_err());
        assert!(QuartileDesign::new(10, 10).is_err());
    }

    #[test]
    fn expected_counts_reference() {
        let d = QuartileDesign::new(23, 16).unwrap();
        let model = HypergeomModel::new(d).unwrap();
        let e = model.expected();
        for j in 0..3 {
            assert!((e[j] - 96.0 / 23.0).abs() < 1e-14);
        }
        assert!((e[3] - 80.0 / 23.0).abs() < 1e-14);

        // rank-weight mean and variance on the same design
        let w = [0.0, 1.0, 2.0, 3.0];
        assert!((model.dot_expected(w) - 22.957).abs() < 1e-3);
        assert!((model.quad_covariance(w) - 6.1206).abs() < 1e-3);
    }

    #[test]
    fn covariance_rows_sum_to_zero() {
        for &(nn, n) in &[(23, 16), (4, 1), (48, 24), (37, 11)] {
            let model = HypergeomModel::new(QuartileDesign::new(nn, n).unwrap()).unwrap();
            for row in model.covariance() {
                let s: f64 = row.iter().sum();
                assert!(s.abs() < 1e-12, "row sum {s}");
            }
        }
    }

    #[test]
    fn generalized_inverse_properties() {
        for &(nn, n) in &[(23, 16), (11, 5), (48, 24)] {
            let model = HypergeomModel::new(QuartileDesign::new(nn, n).unwrap()).unwrap();
            let v = model.covariance();
            let g = model.generalized_inverse();
            for j in 0..4 {
                assert_eq!(g[0][j], 0.0);
                assert_eq!(g[j][0], 0.0);
            }
            // V g V = V
            let mut vg = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    vg[i][j] = (0..4).map(|k| v[i][k] * g[k][j]).sum();
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    let vgv: f64 = (0..4).map(|k| vg[i][k] * v[k][j]).sum();
                    assert!((vgv - v[i][j]).abs() < 1e-10, "VgV mismatch at {i},{j}");
                }
            }
        }
    }

    #[test]
    fn pmf_reference_values() {
        let d = QuartileDesign::new(4, 1).unwrap();
        for j in 0..4 {
            let mut a = [0u32; 4];
            a[j] = 1;
            let p = pmf(&d, &CellCounts::new(a, &d).unwrap()).unwrap();
            assert!((p - 0.25).abs() < 1e-14);
        }

        let d = QuartileDesign::new(23, 16).unwrap();
        let a = CellCounts::new([6, 2, 3, 5], &d).unwrap();
        let expect = choose(6, 6) * choose(6, 2) * choose(6, 3) * choose(5, 5) / choose(23, 16);
        let p = pmf(&d, &a).unwrap();
        assert!((p - expect).abs() < 1e-12 * expect);
        assert!((expect - 300.0 / 245157.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_rejects_bad_margins() {
        let d = QuartileDesign::new(23, 16).unwrap();
        assert!(CellCounts::new([7, 2, 2, 5], &d).is_err());
        assert!(CellCounts::new([6, 2, 3, 4], &d).is_err());
        // counts built for a different design are re-validated
        let d2 = QuartileDesign::new(8, 4).unwrap();
        let a2 = CellCounts::new([2, 2, 0, 0], &d2).unwrap();
        assert!(pmf(&d, &a2).is_err());
    }

    #[test]
    fn support_sums_to_one_and_matches_moments() {
        for &(nn, n) in &[(23, 16), (4, 2), (12, 5), (30, 9)] {
            let d = QuartileDesign::new(nn, n).unwrap();
            let model = HypergeomModel::new(d).unwrap();
            let mut total = 0.0;
            let mut mean = [0.0f64; 4];
            let mut cov = [[0.0f64; 4]; 4];
            for (a, p) in enumerate_support(&d).unwrap() {
                total += p;
                let av = a.as_f64();
                for i in 0..4 {
                    mean[i] += p * av[i];
                }
                for i in 0..4 {
                    for j in 0..4 {
                        cov[i][j] += p * av[i] * av[j];
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-12, "support mass {total}");
            let e = model.expected();
            for i in 0..4 {
                assert!((mean[i] - e[i]).abs() < 1e-10);
                for j in 0..4 {
                    let c = cov[i][j] - e[i] * e[j];
                    assert!((c - model.covariance()[i][j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn support_counts() {
        // brute-force reference count over the raw cube
        let count_oracle = |d: &QuartileDesign| {
            let k = d.cell_sizes();
            let n = d.treated();
            let mut count = 0usize;
            for a1 in 0..=k[0] {
                for a2 in 0..=k[1] {
                    for a3 in 0..=k[2] {
                        let rest = n as i64 - a1 as i64 - a2 as i64 - a3 as i64;
                        if rest >= 0 && rest <= k[3] as i64 {
                            count += 1;
                        }
                    }
                }
            }
            count
        };
        let d = QuartileDesign::new(23, 16).unwrap();
        let enumerated = enumerate_support(&d).unwrap().count();
        assert_eq!(enumerated, count_oracle(&d));
        assert_eq!(enumerated, 113);

        let d = QuartileDesign::new(4, 2).unwrap();
        let tables: Vec<_> = enumerate_support(&d).unwrap().collect();
        assert_eq!(tables.len(), 6);
        for (_, p) in tables {
            assert!((p - 1.0 / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn budget_refusal() {
        let d = QuartileDesign::new(2000, 1000).unwrap();
        let err = enumerate_support(&d).unwrap_err();
        assert!(err.is_budget());
        assert!(enumerate_support_budget(&d, u64::MAX).is_ok());
    }

    #[test]
    fn expectation_of_g2_is_three() {
        for &(nn, n) in &[(23, 16), (9, 3), (48, 24), (17, 8)] {
            let d = QuartileDesign::new(nn, n).unwrap();
            let model = HypergeomModel::new(d).unwrap();
            let mut mean_g2 = 0.0;
            for (a, p) in enumerate_support(&d).unwrap() {
                mean_g2 += p * model.g2(&a);
            }
            assert!((mean_g2 - 3.0).abs() < 1e-8, "E[G2] = {mean_g2} for {nn},{n}");
        }
    }

    #[test]
    fn pmf_exchangeable_under_cell_permutation() {
        let d = QuartileDesign::new(23, 16).unwrap();
        // cells 1..3 share k = 6; swapping them must leave the pmf unchanged
        let a = CellCounts::new([4, 5, 2, 5], &d).unwrap();
        let b = CellCounts::new([2, 5, 4, 5], &d).unwrap();
        let c = CellCounts::new([5, 4, 2, 5], &d).unwrap();
        let pa = pmf(&d, &a).unwrap();
        assert!((pa - pmf(&d, &b).unwrap()).abs() < 1e-15 * pa);
        assert!((pa - pmf(&d, &c).unwrap()).abs() < 1e-15 * pa);
    }

    #[test]
    fn g2_matches_full_quadratic_form() {
        let d = QuartileDesign::new(23, 16).unwrap();
        let model = HypergeomModel::new(d).unwrap();
        let g = model.generalized_inverse();
        for (a, _) in enumerate_support(&d).unwrap() {
            let av = a.as_f64();
            let e = model.expected();
            let dvec: Vec<f64> = (0..4).map(|i| av[i] - e[i]).collect();
            let mut full = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    full += dvec[i] * g[i][j] * dvec[j];
                }
            }
            let reduced = model.g2(&a);
            assert!((full - reduced).abs() < 1e-10 * (1.0 + full.abs()));
        }
    }
}
