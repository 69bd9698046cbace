//! Decimal formatting with a fixed number of significant digits.

/// Formats `v` with at most `digits` significant digits, `%g` style:
/// positional notation for decimal exponents in `[-5, digits)`, scientific
/// otherwise, trailing zeros dropped. With `digits = 17` every finite `f64`
/// parses back to the identical value.
pub fn format_sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let mantissa_digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = mantissa_digits.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    let sign = if negative { "-" } else { "" };

    if exp < -5 || exp >= digits as i32 {
        let (head, tail) = trimmed.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{trimmed}")
    } else {
        let int_len = exp as usize + 1;
        if trimmed.len() <= int_len {
            let pad = "0".repeat(int_len - trimmed.len());
            format!("{sign}{trimmed}{pad}")
        } else {
            let (int_part, frac) = trimmed.split_at(int_len);
            format!("{sign}{int_part}.{frac}")
        }
    }
}

/// Space-separated 17-significant-digit list.
pub(crate) fn join_exact(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_sig(*v, 17))
        .collect::<Vec<_>>()
        .join(" ")
}
