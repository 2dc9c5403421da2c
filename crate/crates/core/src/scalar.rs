//! Numeric tower: exact rationals and binary64 behind one trait.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used throughout the crate.
pub type Q = BigRational;

/// Arithmetic shared by the exact and floating modes.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const EXACT: bool;

    fn from_q(q: &Q) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact value, when the scalar is exact.
    fn to_q(&self) -> Option<Q>;

    /// Determinant of a square matrix (consumes the rows).
    fn det(rows: Vec<Vec<Self>>) -> Self;

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_q(&Q::new(BigInt::from(n), BigInt::from(d)))
    }

    fn from_int(n: i64) -> Self {
        Self::from_q(&Q::from_integer(BigInt::from(n)))
    }

    /// `|self| <= tol`; exact mode with `tol == 0` is an exact zero test.
    fn within(&self, tol: f64) -> bool {
        match self.to_q() {
            Some(q) if tol == 0.0 => q.is_zero(),
            Some(q) => match Q::from_float(tol) {
                Some(t) => q.abs() <= t,
                None => true,
            },
            None => self.to_f64().abs() <= tol,
        }
    }

    fn is_positive_strict(&self) -> bool {
        *self > Self::zero()
    }

    /// Text form used in CSV/JSON: `num/den` or shortest round-trip decimal.
    fn render(&self) -> String {
        match self.to_q() {
            Some(q) => render_q(&q),
            None => format!("{}", self.to_f64()),
        }
    }

    fn pow_u(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn from_q(q: &Q) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_q(&self) -> Option<Q> {
        Some(self.clone())
    }

    fn det(rows: Vec<Vec<Self>>) -> Self {
        crate::linalg::det_rational(rows)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_q(&self) -> Option<Q> {
        None
    }

    fn det(rows: Vec<Vec<Self>>) -> Self {
        crate::linalg::det_float(rows).0
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn render_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `a/b`, an integer, or a plain decimal such as `0.25` or `1e-3`.
pub fn parse_q(text: &str) -> Result<Q> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((a, b)) = s.split_once('/') {
        let n = BigInt::from_str_radix(a.trim(), 10)
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d = BigInt::from_str_radix(b.trim(), 10)
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("bad number {s:?}")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad number {s:?}")));
    }
    let all = format!("{int_part}{frac_part}");
    let n = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10)
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Q::from_integer(n);
    if scale >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

pub fn parse_scalar<T: Scalar>(text: &str) -> Result<T> {
    Ok(T::from_q(&parse_q(text)?))
}

/// Least common multiple of the denominators of a row.
pub(crate) fn denominator_lcm(row: &[Q]) -> BigInt {
    row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_q("9/23").unwrap(), q(9, 23));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-1.5e-1").unwrap(), q(-3, 20));
        assert_eq!(parse_q("7").unwrap(), q(7, 1));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn renders_round_trip() {
        assert_eq!(q(20, 77).render(), "20/77");
        assert_eq!(q(4, 2).render(), "2");
        assert_eq!(0.1f64.render(), "0.1");
        assert_eq!(parse_q(&q(-17, 60).render()).unwrap(), q(-17, 60));
    }

    #[test]
    fn within_is_exact_for_rationals() {
        assert!(Q::zero().within(0.0));
        assert!(!q(1, 1_000_000_000).within(0.0));
        assert!(q(1, 1_000_000_000).within(1e-6));
        assert!(1e-13f64.within(1e-12));
    }
}
