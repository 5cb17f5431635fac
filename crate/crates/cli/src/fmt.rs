//! Number and interval rendering. Reals use Rust's shortest round-trip
//! representation so parsed files recover the exact in-memory values;
//! infinite endpoints render as `inf` / `-inf`.

use qshift::Interval;

pub fn real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|e| format!("bad real '{s}': {e}")),
    }
}

/// Closed interval: `[lo, hi]`.
pub fn interval(iv: Interval) -> String {
    format!("[{}, {}]", real(iv.lo), real(iv.hi))
}

/// Half-open interval: `[lo, hi)`.
pub fn interval_half_open(iv: Interval) -> String {
    format!("[{}, {})", real(iv.lo), real(iv.hi))
}

/// Space-separated union of closed intervals.
pub fn interval_union(ivs: &[Interval]) -> String {
    if ivs.is_empty() {
        return "(empty)".to_string();
    }
    ivs.iter().map(|iv| interval(*iv)).collect::<Vec<_>>().join(" ")
}

pub fn reals(values: &[f64]) -> String {
    values.iter().map(|v| real(*v)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for &x in &[
            8.7,
            2.5,
            0.09999999999999964,
            -2.6999999999999993,
            1.0 / 3.0,
            f64::INFINITY,
            f64::NEG_INFINITY,
            6.120557620817844e-3,
        ] {
            let s = real(x);
            assert_eq!(parse_real(&s).unwrap(), x, "{s}");
        }
    }

    #[test]
    fn interval_rendering() {
        assert_eq!(interval(Interval::new(0.1, 19.5)), "[0.1, 19.5]");
        assert_eq!(
            interval(Interval::new(f64::NEG_INFINITY, 2.0)),
            "[-inf, 2]"
        );
        assert_eq!(interval_half_open(Interval::new(0.1, 4.9)), "[0.1, 4.9)");
    }
}
