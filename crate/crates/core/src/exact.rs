//! Exact rational helpers.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::str::FromStr;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"3"`, `"-7/4"` or a finite decimal such as `"0.125"` exactly.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.contains('/') {
        return Q::from_str(s).ok();
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let den = num::pow::pow(BigInt::from(10), frac.len());
    let v = Q::new(num, den);
    Some(if neg { -v } else { v })
}

pub fn to_f64(x: &Q) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(parse_q("3"), Some(q(3)));
        assert_eq!(parse_q("-7/4"), Some(q_frac(-7, 4)));
        assert_eq!(parse_q("0.125"), Some(q_frac(1, 8)));
        assert_eq!(parse_q("-.5"), Some(q_frac(-1, 2)));
        assert_eq!(parse_q("1e3"), None);
        assert_eq!(parse_q(""), None);
    }
}
