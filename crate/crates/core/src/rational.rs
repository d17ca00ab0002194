//! Exact rational numbers.
//!
//! Every quantity in the crate (weights, costs, shares, ratios) is a
//! [`Rational`]. Values are always kept in lowest terms with a positive
//! denominator, which `num-rational` guarantees.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// `numer/denom` as a rational. Panics on a zero denominator.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"`, a plain integer, or a finite decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let malformed = || Error::MalformedRational(text.to_string());
    if s.is_empty() {
        return Err(malformed());
    }
    if let Some((p, d)) = s.split_once('/') {
        let numer = parse_int(p.trim()).ok_or_else(malformed)?;
        let denom = parse_int(d.trim()).ok_or_else(malformed)?;
        if denom.is_zero() {
            return Err(Error::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(numer, denom));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(malformed());
    }
    let digits_only = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !digits_only(whole) || !digits_only(frac) {
        return Err(malformed());
    }
    let mut numer = BigInt::zero();
    for b in whole.bytes().chain(frac.bytes()) {
        numer = numer * 10u32 + u32::from(b - b'0');
    }
    let denom = num_traits::pow(BigInt::from(10u32), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Formats as `"p/q"`; integers keep the explicit `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Returns `p >= 0` such that `value == base / 2^p`, if one exists.
pub fn dyadic_exponent(value: &Rational, base: &Rational) -> Option<u32> {
    if !value.is_positive() || !base.is_positive() {
        return None;
    }
    let ratio = value / base;
    if !ratio.numer().is_one() {
        return None;
    }
    let d = ratio.denom();
    if (d & (d - BigInt::one())).is_zero() {
        Some((d.bits() - 1) as u32)
    } else {
        None
    }
}

/// `base * 2^exp` for a possibly negative exponent.
pub fn scale_pow2(base: &Rational, exp: i64) -> Rational {
    let factor = BigInt::one() << exp.unsigned_abs();
    if exp >= 0 {
        base * Rational::from_integer(factor)
    } else {
        base / Rational::from_integer(factor)
    }
}

/// Smallest integer `q` with `base / 2^q <= value`, i.e. the exponent that
/// rounds `value` down onto the power-of-two grid of `base`.
pub fn round_down_exponent(value: &Rational, base: &Rational) -> i64 {
    debug_assert!(value.is_positive() && base.is_positive());
    let ratio = base / value;
    // ceil(log2(ratio))
    let (n, d) = (ratio.numer(), ratio.denom());
    let mut qexp = n.bits() as i64 - d.bits() as i64;
    while scale_pow2(base, -qexp) > *value {
        qexp += 1;
    }
    while scale_pow2(base, -(qexp - 1)) <= *value {
        qexp -= 1;
    }
    qexp
}

/// Least common multiple of all denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serde adapters writing rationals as `"p/q"` strings.
pub mod serde_q {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|t| parse_rational(t).map_err(D::Error::custom))
                .collect()
        }
    }
}
