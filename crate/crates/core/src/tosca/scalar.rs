//! `scalar-unit` values. Sizes are normalized to whole megabytes (rounded
//! up), frequencies to megahertz.

use serde_json::{Number, Value};

const SIZE_UNITS: &[(&str, u128)] = &[
    ("b", 1),
    ("kb", 1_000),
    ("kib", 1 << 10),
    ("mb", 1_000_000),
    ("mib", 1 << 20),
    ("gb", 1_000_000_000),
    ("gib", 1 << 30),
    ("tb", 1_000_000_000_000),
    ("tib", 1 << 40),
];

const FREQUENCY_UNITS: &[(&str, u128)] = &[("hz", 1), ("khz", 1_000), ("mhz", 1_000_000), ("ghz", 1_000_000_000)];

/// Splits `"2.5 GB"` into an exact fraction `(25, 10)` and the unit.
fn split(text: &str) -> Option<(u128, u128, &str)> {
    let text = text.trim();
    let end = text.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(text.len());
    let (number, unit) = text.split_at(end);
    if number.is_empty() {
        return None;
    }
    let (int, frac) = number.split_once('.').unwrap_or((number, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let mut mantissa: u128 = 0;
    for c in int.chars().chain(frac.chars()) {
        let digit = c.to_digit(10)? as u128;
        mantissa = mantissa.checked_mul(10)?.checked_add(digit)?;
    }
    let den = 10u128.checked_pow(frac.len() as u32)?;
    Some((mantissa, den, unit.trim()))
}

fn factor(units: &[(&str, u128)], unit: &str) -> Option<u128> {
    units.iter().find(|(u, _)| unit.eq_ignore_ascii_case(u)).map(|(_, f)| *f)
}

/// Parses a size like `"10 GB"` into megabytes, rounding up. Bare numbers are
/// taken to be megabytes already.
pub fn size_to_mb(value: &Value) -> Option<u64> {
    match value {
        Value::Number(n) => n.as_u64().or_else(|| n.as_f64().filter(|f| *f >= 0.0).map(|f| ceil_f64(f) as u64)),
        Value::String(s) => {
            let (mantissa, den, unit) = split(s)?;
            let bytes = mantissa.checked_mul(factor(SIZE_UNITS, unit)?)?;
            let per_mb = den.checked_mul(1_000_000)?;
            u64::try_from(bytes.div_ceil(per_mb)).ok()
        }
        _ => None,
    }
}

/// Parses a frequency like `"2.4 GHz"` into megahertz. Whole results are
/// returned as integers.
pub fn frequency_to_mhz(value: &Value) -> Option<Number> {
    match value {
        Value::Number(n) => Some(n.clone()),
        Value::String(s) => {
            let (mantissa, den, unit) = split(s)?;
            let hz = mantissa.checked_mul(factor(FREQUENCY_UNITS, unit)?)?;
            let per_mhz = den.checked_mul(1_000_000)?;
            if hz % per_mhz == 0 {
                u64::try_from(hz / per_mhz).ok().map(Number::from)
            } else {
                Number::from_f64(hz as f64 / per_mhz as f64)
            }
        }
        _ => None,
    }
}

fn ceil_f64(f: f64) -> f64 {
    let t = f as u64 as f64;
    if t < f {
        t + 1.0
    } else {
        t
    }
}
