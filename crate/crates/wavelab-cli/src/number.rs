//! Exact numbers of scenario files: integers, decimals with an optional
//! exponent, and fractions `p/q`, all kept as rationals.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

/// Exact rational read from a scenario file.
pub type Exact = Ratio<i128>;

/// Parses `7`, `-0.125`, `1e-3`, `2.5E+2` or `-3/8`.
pub fn parse_exact(s: &str) -> Result<Exact, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_decimal(p)?;
        let q = parse_decimal(q)?;
        if q.is_zero() {
            return Err(format!("zero denominator in '{s}'"));
        }
        return Ok(p / q);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Exact, String> {
    let bad = || format!("'{s}' is not a number");
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int}{frac}");
    let n: i128 = all.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = |k: i32| 10i128.checked_pow(k.unsigned_abs()).ok_or_else(|| format!("'{s}' is out of range"));
    let v = if scale >= 0 {
        Exact::from_integer(n.checked_mul(ten(scale)?).ok_or_else(|| format!("'{s}' is out of range"))?)
    } else {
        Exact::new(n, ten(scale)?)
    };
    Ok(if neg { -v } else { v })
}

/// Canonical text of an exact number: `p` or `p/q`.
pub fn format_exact(v: &Exact) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Nearest double of an exact number.
pub fn to_f64(v: &Exact) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Shortest decimal text that reads back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}
