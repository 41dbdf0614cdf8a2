//! Plain-decimal float formatting at 15 significant digits.
//!
//! All numeric output goes through here so repeated runs are
//! byte-identical: trailing zeros are trimmed, the decimal separator is
//! always '.', and JSON numbers are rounded to the same 15 digits.

/// Formats with 15 significant digits as a plain decimal (no exponent),
/// trimming trailing zeros.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let formatted = format!("{:.14e}", v.abs());
    let (mantissa, exponent) = formatted.split_once('e').expect("exponential format");
    let exponent: i32 = exponent.parse().expect("numeric exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let point = exponent + 1; // digits before the decimal point
    let mut out = String::new();
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if v < 0.0 {
        out.insert(0, '-');
    }
    out
}

/// Rounds through the 15-digit representation, for JSON number fields.
pub fn round15(v: f64) -> f64 {
    if v.is_finite() {
        fmt_f64(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// Comma-joined point coordinates `t,x1,…,xd`.
pub fn fmt_point(coords: &[f64]) -> String {
    coords
        .iter()
        .map(|&c| fmt_f64(c))
        .collect::<Vec<_>>()
        .join(",")
}
