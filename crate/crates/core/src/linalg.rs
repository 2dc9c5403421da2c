//! Dense determinants and small polynomial helpers.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::{denominator_lcm, Scalar, Q};

pub type Matrix<T> = Vec<Vec<T>>;

/// Determinant of a rational matrix by Bareiss elimination on the
/// denominator-cleared integer matrix.
pub fn det_rational(rows: Matrix<Q>) -> Q {
    let n = rows.len();
    if n == 0 {
        return Q::one();
    }
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|row| {
            let l = denominator_lcm(row);
            scale *= &l;
            row.iter()
                .map(|x| x.numer() * (&l / x.denom()))
                .collect()
        })
        .collect();
    let d = bareiss(&mut a);
    Q::new(d, scale)
}

/// In-place Bareiss determinant of an integer matrix.
pub fn bareiss(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Partially pivoted LU determinant; the second value is the ratio of the
/// largest to the smallest pivot magnitude, a crude conditioning indicator.
pub fn det_float(mut a: Matrix<f64>) -> (f64, f64) {
    let n = a.len();
    let mut det = 1.0;
    let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        if a[p][k] == 0.0 {
            return (0.0, f64::INFINITY);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let piv = a[k][k];
        det *= piv;
        pmax = pmax.max(piv.abs());
        pmin = pmin.min(piv.abs());
        for i in k + 1..n {
            let f = a[i][k] / piv;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    (det, if n == 0 { 1.0 } else { pmax / pmin })
}

pub fn det<T: Scalar>(m: &[Vec<T>]) -> T {
    T::det(m.to_vec())
}

/// Deletes row and column `i`.
pub fn minor<T: Clone>(m: &[Vec<T>], i: usize) -> Matrix<T> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != i)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != i)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

pub fn identity<T: Scalar>(n: usize) -> Matrix<T> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

/// `lambda * Id - m`.
pub fn shifted<T: Scalar>(m: &[Vec<T>], lambda: &T) -> Matrix<T> {
    m.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| {
                    if i == j {
                        lambda.clone() - x.clone()
                    } else {
                        -x.clone()
                    }
                })
                .collect()
        })
        .collect()
}

/// Coefficients of det(x Id - m), lowest degree first (Faddeev-LeVerrier).
pub fn char_poly<T: Scalar>(m: &[Vec<T>]) -> Vec<T> {
    let n = m.len();
    let mut coeffs = vec![T::zero(); n + 1];
    coeffs[n] = T::one();
    let mut mk: Matrix<T> = vec![vec![T::zero(); n]; n];
    for k in 1..=n {
        // M_k = m * (M_{k-1} + c_{n-k+1} I)
        let c_prev = coeffs[n - k + 1].clone();
        let mut inner = mk.clone();
        for (i, row) in inner.iter_mut().enumerate() {
            row[i] = row[i].clone() + c_prev.clone();
        }
        mk = matmul(m, &inner);
        let trace = (0..n).fold(T::zero(), |acc, i| acc + mk[i][i].clone());
        coeffs[n - k] = -trace / T::from_int(k as i64);
    }
    coeffs
}

pub fn matmul<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> Matrix<T> {
    let n = a.len();
    let p = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![T::zero(); p]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..p {
                out[i][j] = out[i][j].clone() + aik.clone() * b[k][j].clone();
            }
        }
    }
    out
}

/// Multiplicity of `root` as a zero of the polynomial (lowest degree first).
pub fn root_multiplicity<T: Scalar>(poly: &[T], root: &T, tol: f64) -> usize {
    let mut p = poly.to_vec();
    let mut mult = 0;
    while p.len() > 1 {
        // synthetic division by (x - root)
        let deg = p.len() - 1;
        let mut quotient = vec![T::zero(); deg];
        let mut carry = T::zero();
        for k in (0..=deg).rev() {
            let v = p[k].clone() + carry.clone() * root.clone();
            if k == 0 {
                carry = v;
            } else {
                quotient[k - 1] = v.clone();
                carry = v;
            }
        }
        let scale = p.iter().fold(0.0f64, |m, c| m.max(c.to_f64().abs())).max(1.0);
        let remainder_zero = if T::EXACT {
            carry.is_zero()
        } else {
            carry.to_f64().abs() <= tol * scale
        };
        if !remainder_zero {
            break;
        }
        mult += 1;
        p = quotient;
    }
    mult
}

/// Rank by Gaussian elimination; `tol` only matters in float mode.
pub fn rank<T: Scalar>(m: &[Vec<T>], tol: f64) -> usize {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let pivot = (r..rows)
            .filter(|&i| !negligible(&a[i][c], tol))
            .max_by(|&i, &j| a[i][c].to_f64().abs().total_cmp(&a[j][c].to_f64().abs()));
        let Some(p) = pivot else { continue };
        a.swap(p, r);
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone() / a[r][c].clone();
                for j in c..cols {
                    a[i][j] = a[i][j].clone() - f.clone() * a[r][j].clone();
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

fn negligible<T: Scalar>(x: &T, tol: f64) -> bool {
    if T::EXACT {
        x.is_zero()
    } else {
        x.abs().to_f64() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use proptest::prelude::*;

    #[test]
    fn small_determinants() {
        let m = vec![vec![q(1, 2), q(1, 3)], vec![q(1, 4), q(1, 5)]];
        assert_eq!(det_rational(m), q(1, 10) - q(1, 12));
        let (d, _) = det_float(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(d, -1.0);
        assert_eq!(det_rational(vec![]), Q::one());
    }

    #[test]
    fn char_poly_of_triangular() {
        let m = vec![vec![q(2, 1), q(5, 1)], vec![q(0, 1), q(3, 1)]];
        // (x-2)(x-3) = x^2 - 5x + 6
        assert_eq!(char_poly(&m), vec![q(6, 1), q(-5, 1), q(1, 1)]);
        let p = char_poly(&[vec![q(2, 1), q(1, 1)], vec![q(0, 1), q(2, 1)]]);
        assert_eq!(root_multiplicity(&p, &q(2, 1), 0.0), 2);
        assert_eq!(root_multiplicity(&p, &q(3, 1), 0.0), 0);
    }

    fn cofactor_det(m: &[Vec<Q>]) -> Q {
        if m.is_empty() {
            return Q::one();
        }
        let mut acc = Q::zero();
        for j in 0..m.len() {
            let sub: Vec<Vec<Q>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
                .collect();
            let term = m[0][j].clone() * cofactor_det(&sub);
            acc = if j % 2 == 0 { acc + term } else { acc - term };
        }
        acc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn bareiss_matches_cofactor_expansion(
            entries in proptest::collection::vec((-9i64..10, 1i64..6), 25),
            n in 1usize..6,
        ) {
            let m: Vec<Vec<Q>> = (0..n)
                .map(|i| (0..n).map(|j| { let (a, b) = entries[i * 5 + j]; q(a, b) }).collect())
                .collect();
            prop_assert_eq!(det_rational(m.clone()), cofactor_det(&m));
            let f: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
            let exact = cofactor_det(&m).to_f64();
            prop_assert!((det_float(f).0 - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
        }
    }
}
