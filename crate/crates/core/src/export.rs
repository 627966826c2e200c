//! Number formatting shared by the CSV writers.

/// Formats `v` with `digits` significant digits in plain decimal notation,
/// falling back to exponent form for very large or very small magnitudes.
pub fn format_sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(327.0, 6), "327.000");
        assert_eq!(format_sig(-0.3, 6), "-0.300000");
        assert_eq!(format_sig(1.0246, 3), "1.02");
        assert_eq!(format_sig(123456789.0, 6), "123456789");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1.5e-9, 3), "1.50e-9");
    }
}
