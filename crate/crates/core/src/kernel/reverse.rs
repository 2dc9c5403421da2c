use super::{Kernel, Violation};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::scalar::Scalar;
use crate::tree::{NodeWord, Truncation};

/// An almost lower-directed kernel on a finite tree: moves go to children
/// or to ancestors (including staying put).
#[derive(Clone)]
pub struct AldKernel<T: Scalar> {
    trunc: Truncation,
    rows: Vec<Vec<T>>,
}

fn positive_values<T: Scalar>(trunc: &Truncation, pi: &Measure<T>) -> Result<Vec<T>> {
    trunc
        .nodes()
        .iter()
        .map(|u| match pi.get(u) {
            Some(x) if x.is_positive_strict() => Ok(x.clone()),
            _ => Err(Error::NonPositiveMeasure(u.to_string())),
        })
        .collect()
}

fn check_invariant<T: Scalar>(m: &[Vec<T>], p: &[T], trunc: &Truncation, tol: f64) -> Result<()> {
    for v in 0..m.len() {
        let flow = (0..m.len()).fold(T::zero(), |a, u| a + p[u].clone() * m[u][v].clone());
        let r = flow - p[v].clone();
        if !r.within(tol) {
            return Err(Error::NotInvariant {
                node: trunc.node(v).to_string(),
                residual: r.render(),
            });
        }
    }
    Ok(())
}

fn default_tol<T: Scalar>() -> f64 {
    if T::EXACT {
        0.0
    } else {
        1e-9
    }
}

/// Time reversal D_{v,u} = π_u U_{u,v} / π_v on a finite tree.
pub fn reverse<T: Scalar>(kernel: &Kernel<T>, pi: &Measure<T>) -> Result<AldKernel<T>> {
    let trunc = Truncation::whole(kernel.tree())?;
    let u = kernel.dense(&trunc);
    let p = positive_values(&trunc, pi)?;
    check_invariant(&u, &p, &trunc, default_tol::<T>())?;
    let n = trunc.len();
    let mut rows = vec![vec![T::zero(); n]; n];
    for (a, row) in u.iter().enumerate() {
        for (b, x) in row.iter().enumerate() {
            if !x.is_zero() {
                rows[b][a] = p[a].clone() * x.clone() / p[b].clone();
            }
        }
    }
    Ok(AldKernel { trunc, rows })
}

impl<T: Scalar> AldKernel<T> {
    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    fn entry(&self, u: &NodeWord, v: &NodeWord) -> T {
        match (self.trunc.index_of(u), self.trunc.index_of(v)) {
            (Some(i), Some(j)) => self.rows[i][j].clone(),
            _ => T::zero(),
        }
    }

    /// D_{u,c} for a child c of u.
    pub fn child_weight(&self, u: &NodeWord, c: &NodeWord) -> T {
        if c.parent().as_ref() == Some(u) {
            self.entry(u, c)
        } else {
            T::zero()
        }
    }

    /// D_{u,a} for a ∈ [[∅,u]].
    pub fn ancestor_weight(&self, u: &NodeWord, a: &NodeWord) -> T {
        if a.is_ancestor_of(u) {
            self.entry(u, a)
        } else {
            T::zero()
        }
    }

    /// Support condition (children or ancestors) and row sums.
    pub fn validate(&self, tol: f64) -> Vec<Violation<T>> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let u = self.trunc.node(i);
            let mut sum = T::zero();
            for (j, x) in row.iter().enumerate() {
                sum = sum + x.clone();
                if x.is_zero() {
                    continue;
                }
                let v = self.trunc.node(j);
                if *x < T::zero() {
                    out.push(Violation::Negative {
                        from: u.clone(),
                        to: v.clone(),
                        value: x.clone(),
                    });
                }
                if !(v.is_ancestor_of(u) || v.parent().as_ref() == Some(u)) {
                    out.push(Violation::Support {
                        from: u.clone(),
                        to: v.clone(),
                        value: x.clone(),
                    });
                }
            }
            if !(sum.clone() - T::one()).within(tol) {
                out.push(Violation::Stochasticity {
                    node: u.clone(),
                    row_sum: sum,
                });
            }
        }
        out
    }

    /// Whether `pi` is invariant for D.
    pub fn preserves(&self, pi: &Measure<T>, tol: f64) -> bool {
        positive_values(&self.trunc, pi)
            .and_then(|p| check_invariant(&self.rows, &p, &self.trunc, tol))
            .is_ok()
    }

    /// Reverses back to an AUD kernel: U_{u,v} = π_v D_{v,u} / π_u.
    pub fn reverse(&self, pi: &Measure<T>) -> Result<Kernel<T>> {
        let p = positive_values(&self.trunc, pi)?;
        check_invariant(&self.rows, &p, &self.trunc, default_tol::<T>())?;
        let tree = match self.trunc.source().as_finite() {
            Some(t) => t.clone(),
            None => crate::tree::FiniteTree::from_words(self.trunc.nodes().iter().cloned())?,
        };
        let n = self.rows.len();
        // the truncation order is breadth-first, matching the tree's indices
        let mut rows = vec![vec![T::zero(); n]; n];
        for (v, row) in self.rows.iter().enumerate() {
            for (u, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    rows[u][v] = p[v].clone() * x.clone() / p[u].clone();
                }
            }
        }
        Kernel::explicit(tree, rows)
    }
}
