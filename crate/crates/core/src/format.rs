//! Byte-stable number formatting for CSV and report output.

/// Format with 9 significant digits: fixed notation for magnitudes in
/// `[1e-5, 1e9)`, scientific otherwise. Trailing zeros are trimmed.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        let (mantissa, e) = sci.split_at(sci.find('e').expect("exponent"));
        format!("{}{}", trim(mantissa.to_string()), e)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
