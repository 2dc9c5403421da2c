//! Truncated power series in one variable with rational coefficients.

use std::fmt;

use num_traits::{One, Zero};

use crate::scalar::{render_q, Q};

pub const DEFAULT_DEGREE: usize = 32;

/// Coefficients of x^0..=x^cap; products drop everything above the cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<Q>,
}

impl Series {
    pub fn zero(cap: usize) -> Self {
        Series {
            coeffs: vec![Q::zero(); cap + 1],
        }
    }

    pub fn constant(c: Q, cap: usize) -> Self {
        let mut s = Series::zero(cap);
        s.coeffs[0] = c;
        s
    }

    /// c·x
    pub fn monomial(c: Q, cap: usize) -> Self {
        let mut s = Series::zero(cap);
        if cap >= 1 {
            s.coeffs[1] = c;
        }
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<Q>, cap: usize) -> Self {
        coeffs.resize(cap + 1, Q::zero());
        Series { coeffs }
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, other: &Series) -> Series {
        let cap = self.cap().min(other.cap());
        Series {
            coeffs: (0..=cap).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect(),
        }
    }

    pub fn sub(&self, other: &Series) -> Series {
        let cap = self.cap().min(other.cap());
        Series {
            coeffs: (0..=cap).map(|k| &self.coeffs[k] - &other.coeffs[k]).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let cap = self.cap().min(other.cap());
        let mut out = vec![Q::zero(); cap + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(cap + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(cap + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Series { coeffs: out }
    }

    pub fn scale(&self, c: &Q) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiplicative inverse; `None` when the constant term vanishes.
    pub fn recip(&self) -> Option<Series> {
        let a0 = self.coeffs[0].clone();
        if a0.is_zero() {
            return None;
        }
        let cap = self.cap();
        let mut out = vec![Q::zero(); cap + 1];
        out[0] = Q::one() / &a0;
        for n in 1..=cap {
            let mut acc = Q::zero();
            for k in 1..=n {
                acc += &self.coeffs[k] * &out[n - k];
            }
            out[n] = -acc / &a0;
        }
        Some(Series { coeffs: out })
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |a, c| a * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |a, c| a * x + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(render_q).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn geometric_series_inverse() {
        let one_minus_x = Series::from_coeffs(vec![q(1, 1), q(-1, 1)], 10);
        let inv = one_minus_x.recip().unwrap();
        assert!(inv.coeffs().iter().all(|c| *c == q(1, 1)));
        assert_eq!(inv.mul(&one_minus_x), Series::constant(q(1, 1), 10));
        assert!(Series::monomial(q(1, 1), 4).recip().is_none());
    }

    #[test]
    fn products_truncate_at_the_cap() {
        let x = Series::monomial(q(1, 1), 3);
        let x2 = x.mul(&x);
        let x4 = x2.mul(&x2);
        assert_eq!(x4, Series::zero(3));
        assert_eq!(x2.eval(&q(1, 2)), q(1, 4));
        assert_eq!(x2.to_string(), "[0, 0, 1, 0]");
    }
}
