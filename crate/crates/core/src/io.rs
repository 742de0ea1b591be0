//! Output helpers shared by the CLI and table exporters.

/// Formats a number with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 1.0, 0.0, 123456.789] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
