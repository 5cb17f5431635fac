//! Normal and chi-squared special functions.
//!
//! The chi-squared survival functions needed here (1, 2 and 3 degrees of
//! freedom) all have closed forms in terms of the complementary error
//! function, so they are implemented directly rather than pulled from a
//! distributions library. The Normal quantile is a bracketed Newton solve on
//! the cdf, which keeps full relative accuracy in the tails because the cdf
//! itself is evaluated through `erfc`.

use std::f64::consts::PI;

/// 1/sqrt(2*pi).
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779399460599343818684758586311649346;

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard Normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard Normal cdf, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard Normal survival function `1 - cdf`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard Normal quantile for `p` in the open interval (0, 1).
///
/// Bracketed Newton iteration on [`normal_cdf`]; converges to full f64
/// precision for any `p` representable away from 0 and 1.
///
/// # Panics
///
/// Panics if `p` is outside `(0, 1)` or NaN.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0, 1), got {p}");
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        // Work in the lower tail where erfc keeps relative accuracy.
        return -normal_quantile_lower(1.0 - p);
    }
    normal_quantile_lower(p)
}

fn normal_quantile_lower(p: f64) -> f64 {
    // Bracket: cdf(lo) < p <= cdf(hi).
    let mut hi = 0.0;
    let mut lo = -1.0;
    while normal_cdf(lo) >= p {
        hi = lo;
        lo *= 2.0;
        if lo < -1024.0 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = normal_cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else if f < 0.0 {
            lo = x;
        } else {
            return x;
        }
        let d = normal_pdf(x);
        let mut next = 0.5 * (lo + hi);
        if d > 0.0 {
            let newton = x - f / d;
            if newton > lo && newton < hi {
                next = newton;
            }
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Chi-squared survival function `Pr(X >= x)` for 1, 2 or 3 degrees of
/// freedom, the only reference laws used by the tests in this crate.
///
/// # Panics
///
/// Panics for any other `df`.
pub fn chi_squared_sf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    match df {
        1 => erfc((0.5 * x).sqrt()),
        2 => (-0.5 * x).exp(),
        3 => erfc((0.5 * x).sqrt()) + (2.0 * x / PI).sqrt() * (-0.5 * x).exp(),
        _ => panic!("chi_squared_sf supports df in 1..=3, got {df}"),
    }
}

/// Chi-squared upper quantile: the `x` with `Pr(X >= x) = alpha`.
///
/// df 2 is closed-form; df 1 goes through the Normal quantile; df 3 is a
/// bracketed Newton solve on the survival function.
pub fn chi_squared_upper_quantile(alpha: f64, df: u32) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1), got {alpha}");
    match df {
        1 => {
            let z = normal_quantile(1.0 - 0.5 * alpha);
            z * z
        }
        2 => -2.0 * alpha.ln(),
        3 => {
            let mut lo = 0.0;
            let mut hi = 1.0;
            while chi_squared_sf(hi, 3) > alpha {
                lo = hi;
                hi *= 2.0;
            }
            let mut x = 0.5 * (lo + hi);
            for _ in 0..200 {
                let f = chi_squared_sf(x, 3) - alpha;
                if f > 0.0 {
                    lo = x;
                } else if f < 0.0 {
                    hi = x;
                } else {
                    return x;
                }
                // density of chi2(3)
                let d = (x / (2.0 * PI)).sqrt() * (-0.5 * x).exp();
                let mut next = 0.5 * (lo + hi);
                if d > 0.0 {
                    let newton = x + f / d;
                    if newton > lo && newton < hi {
                        next = newton;
                    }
                }
                if next == x {
                    break;
                }
                x = next;
            }
            x
        }
        _ => panic!("chi_squared_upper_quantile supports df in 1..=3, got {df}"),
    }
}
