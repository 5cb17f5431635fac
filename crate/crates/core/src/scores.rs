//! Limiting score calculus behind the choice of group scores: the score
//! function `-f'(F^{-1}(u)) / f(F^{-1}(u))`, its integrals over the four
//! quartile bands, the limiting covariance of the standardized counts, the
//! optimal group scores, and asymptotic relative efficiencies.

use crate::error::Error;
use crate::rank::WeightVector;
use crate::special::{normal_cdf, normal_pdf, normal_quantile};
use crate::Result;
use std::f64::consts::PI;

/// Sampling distributions with built-in score functions. The
/// Normal+Exponential variant is the convolution of a standard Normal with
/// a standard Exponential (an exponentially modified Gaussian with unit
/// rate), whose density has the closed form `exp(1/2 - x) * Phi(x - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreDistribution {
    Normal,
    Cauchy,
    NormalPlusExponential,
}

impl ScoreDistribution {
    pub fn label(&self) -> &'static str {
        match self {
            ScoreDistribution::Normal => "normal",
            ScoreDistribution::Cauchy => "cauchy",
            ScoreDistribution::NormalPlusExponential => "ne",
        }
    }

    /// The score `phi(u) = -f'(F^{-1}(u)) / f(F^{-1}(u))` at `u` in (0, 1).
    pub fn score(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "score function requires u in the open interval (0, 1), got {u}"
            )));
        }
        Ok(match self {
            ScoreDistribution::Normal => normal_quantile(u),
            ScoreDistribution::Cauchy => {
                let x = (PI * (u - 0.5)).tan();
                2.0 * x / (1.0 + x * x)
            }
            ScoreDistribution::NormalPlusExponential => {
                let x = ne_quantile(u)?;
                // -f'/f = 1 - pdf(x-1)/Phi(x-1)
                1.0 - normal_pdf(x - 1.0) / normal_cdf(x - 1.0)
            }
        })
    }
}

/// The score function itself, exposed as a free operation.
pub fn score_function(dist: ScoreDistribution, u: f64) -> Result<f64> {
    dist.score(u)
}

/// cdf of the standard Normal + standard Exponential convolution.
pub fn ne_cdf(x: f64) -> f64 {
    if x < -600.0 {
        return 0.0; // exp(1/2 - x) would overflow; the cdf is zero anyway
    }
    normal_cdf(x) - (0.5 - x).exp() * normal_cdf(x - 1.0)
}

/// density of the Normal + Exponential convolution.
pub fn ne_density(x: f64) -> f64 {
    if x < -600.0 {
        return 0.0;
    }
    (0.5 - x).exp() * normal_cdf(x - 1.0)
}

/// Quantile of the Normal + Exponential convolution by bracketed Newton
/// iteration on the cdf.
pub fn ne_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile requires u in (0, 1), got {u}"
        )));
    }
    let mut lo = -1.0;
    while ne_cdf(lo) >= u {
        lo *= 2.0;
        if lo < -1e6 {
            break;
        }
    }
    let mut hi = 1.0;
    while ne_cdf(hi) <= u {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = ne_cdf(x) - u;
        if f > 0.0 {
            hi = x;
        } else if f < 0.0 {
            lo = x;
        } else {
            return Ok(x);
        }
        let d = ne_density(x);
        let mut next = 0.5 * (lo + hi);
        if d > 0.0 {
            let newton = x - f / d;
            if newton > lo && newton < hi {
                next = newton;
            }
        }
        if next == x || (hi - lo) <= 1e-13 * (1.0 + x.abs()) {
            break;
        }
        x = next;
    }
    Ok(x)
}

// Integration window: the band integrals are improper at 0 and 1; the
// clipped tail mass of the score integral is far below the quadrature
// tolerance for every distribution handled here.
const U_CLIP: f64 = 1e-13;
/// Absolute tolerance per band used by the adaptive quadrature.
pub const BAND_QUADRATURE_TOL: f64 = 1e-9;

fn adaptive_simpson(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let fa = f(a)?;
    let fb = f(b)?;
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || b - a < 1e-15 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailed(format!(
            "no convergence on [{a}, {b}]"
        )));
    }
    let l = simpson_step(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Quadrature value of `integral of phi(u) du` over `[a, b] ∩ [clip, 1-clip]`.
fn band_integral_quadrature(
    score: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
) -> Result<f64> {
    let lo = a.max(U_CLIP);
    let hi = b.min(1.0 - U_CLIP);
    adaptive_simpson(score, lo, hi, BAND_QUADRATURE_TOL)
}

/// Closed-form value of `integral of phi(u) du` over `[a, b]` for the three
/// built-in distributions; the independent cross-check on the quadrature.
pub fn band_integral_closed_form(dist: ScoreDistribution, a: f64, b: f64) -> Result<f64> {
    let at = |u: f64| -> Result<f64> {
        Ok(match dist {
            // antiderivative of the Normal score is -pdf(quantile(u))
            ScoreDistribution::Normal => {
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    -normal_pdf(normal_quantile(u))
                }
            }
            // antiderivative -1/(pi (1 + x^2)) = -sin^2(pi u)/pi
            ScoreDistribution::Cauchy => {
                let s = (PI * u).sin();
                -s * s / PI
            }
            // integral of (1 - pdf(x-1)/Phi(x-1)) dF = u - Phi(F^{-1}(u))
            ScoreDistribution::NormalPlusExponential => {
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    0.0 // u - Phi both reach 1
                } else {
                    u - normal_cdf(ne_quantile(u)?)
                }
            }
        })
    };
    Ok(at(b)? - at(a)?)
}

/// The limiting per-observation covariance of the standardized cell counts
/// at sampling fraction `lambda`: diagonal `3 lambda (1-lambda) / 16`,
/// off-diagonal `-lambda (1-lambda) / 16`.
pub fn sigma_matrix(lambda: f64) -> [[f64; 4]; 4] {
    let c = lambda * (1.0 - lambda) / 16.0;
    let mut s = [[-c; 4]; 4];
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = 3.0 * c;
    }
    s
}

/// Generalized inverse of [`sigma_matrix`] with zero first row and column;
/// the lower-right block of `c (4I - J)` inverts in closed form to
/// `(I + J) / (4c)`.
pub fn sigma_generalized_inverse(lambda: f64) -> [[f64; 4]; 4] {
    let c = lambda * (1.0 - lambda) / 16.0;
    let mut s = [[0.0; 4]; 4];
    for i in 1..4 {
        for j in 1..4 {
            s[i][j] = if i == j { 0.5 / c } else { 0.25 / c };
        }
    }
    s
}

/// Band scores and limiting moments for one sampling distribution at one
/// sampling fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    /// Label of the distribution the scores were computed for.
    pub distribution: String,
    /// Limiting treated fraction `n / N`.
    pub lambda: f64,
    /// Band integrals `eta_g = lambda (1-lambda) * integral of phi over
    /// band g`; they sum to zero.
    pub eta: [f64; 4],
    pub sigma: [[f64; 4]; 4],
    pub sigma_ginv: [[f64; 4]; 4],
    /// The noncentrality-maximizing group scores `Sigma^- eta`, anchored at
    /// zero and scaled so the last score is 1.
    pub optimal_weights: WeightVector,
}

impl ScoreModel {
    /// `w' eta` for raw scores.
    pub fn dot_eta(&self, w: [f64; 4]) -> f64 {
        (0..4).map(|i| w[i] * self.eta[i]).sum()
    }

    /// `w' Sigma w` for raw scores.
    pub fn quad_sigma(&self, w: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            let mut row = 0.0;
            for j in 0..4 {
                row += self.sigma[i][j] * w[j];
            }
            acc += w[i] * row;
        }
        acc
    }
}

/// Builds the [`ScoreModel`] for a built-in distribution.
pub fn band_scores(dist: ScoreDistribution, lambda: f64) -> Result<ScoreModel> {
    band_scores_custom(&mut |u| dist.score(u), dist.label(), lambda)
}

/// [`band_scores`] for a user-supplied score function (for densities with a
/// derivative and quantile function, pass `u -> -f'(F^{-1}(u))/f(F^{-1}(u))`).
pub fn band_scores_custom(
    score: &mut dyn FnMut(f64) -> Result<f64>,
    name: &str,
    lambda: f64,
) -> Result<ScoreModel> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidLevel(lambda));
    }
    let factor = lambda * (1.0 - lambda);
    let mut eta = [0.0; 4];
    for g in 0..4 {
        let a = g as f64 / 4.0;
        let b = (g + 1) as f64 / 4.0;
        eta[g] = factor * band_integral_quadrature(score, a, b)?;
    }

    let sigma = sigma_matrix(lambda);
    let sigma_ginv = sigma_generalized_inverse(lambda);

    let mut w = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            w[i] += sigma_ginv[i][j] * eta[j];
        }
    }
    // components within quadrature noise of zero snap to zero so that, for
    // example, the Cauchy optimum comes out exactly proportional to the
    // median-test scores
    let max_abs = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in w.iter_mut() {
        if v.abs() <= 1e-8 * max_abs {
            *v = 0.0;
        }
    }
    if !(w[3] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "optimal scores are degenerate for {name}: {w:?}"
        )));
    }
    let w = [0.0, w[1] / w[3], w[2] / w[3], 1.0];
    let optimal_weights = WeightVector::new(w)?;

    Ok(ScoreModel {
        distribution: name.to_string(),
        lambda,
        eta,
        sigma,
        sigma_ginv,
        optimal_weights,
    })
}

/// The limiting standardized mean `delta * w'eta / sqrt(w'Sigma w)` of the
/// group rank statistic under a local shift `delta`.
pub fn noncentrality(w: &WeightVector, model: &ScoreModel, delta: f64) -> Result<f64> {
    let quad = model.quad_sigma(w.weights());
    if quad <= 0.0 {
        return Err(Error::InvalidArgument(
            "weights have zero variance under the limiting covariance".into(),
        ));
    }
    Ok(delta * model.dot_eta(w.weights()) / quad.sqrt())
}

/// Asymptotic relative efficiency of `w1` against `w2`: the squared ratio
/// of their noncentralities.
pub fn relative_efficiency(
    w1: &WeightVector,
    w2: &WeightVector,
    model: &ScoreModel,
) -> Result<f64> {
    let n1 = noncentrality(w1, model, 1.0)?;
    let n2 = noncentrality(w2, model, 1.0)?;
    if n2 == 0.0 {
        return Err(Error::InvalidArgument(
            "reference weights have zero noncentrality".into(),
        ));
    }
    Ok((n1 / n2) * (n1 / n2))
}
