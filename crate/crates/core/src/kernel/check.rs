use std::fmt;

use super::{AldKernel, Kernel, Law};
use crate::scalar::Scalar;
use crate::tree::{NodeWord, Truncation};

/// A structural defect found by [`validate_aud`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation<T> {
    Negative { from: NodeWord, to: NodeWord, value: T },
    /// Positive weight to a node that is neither the parent nor a descendant.
    Support { from: NodeWord, to: NodeWord, value: T },
    Stochasticity { node: NodeWord, row_sum: T },
    Monotonicity { from: NodeWord, at: NodeWord },
    Consistency { from: NodeWord, at: NodeWord, gap: T },
}

impl<T: Scalar> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { from, to, value } => {
                write!(f, "negative weight {} from {from} to {to}", value.render())
            }
            Violation::Support { from, to, value } => {
                write!(f, "support violation: {} from {from} to {to}", value.render())
            }
            Violation::Stochasticity { node, row_sum } => {
                write!(f, "row {node} sums to {}", row_sum.render())
            }
            Violation::Monotonicity { from, at } => {
                write!(f, "subtree masses of row {from} increase below {at}")
            }
            Violation::Consistency { from, at, gap } => {
                write!(f, "row {from} at {at}: mass and point weights differ by {}", gap.render())
            }
        }
    }
}

/// Checks stochasticity and the AUD support condition on a truncation.
pub fn validate_aud<T: Scalar>(kernel: &Kernel<T>, trunc: &Truncation, tol: f64) -> Vec<Violation<T>> {
    let mut out = Vec::new();
    if let Law::Explicit(rows) = kernel.law() {
        let tree = kernel.tree().as_finite().unwrap();
        for i in 0..tree.len() {
            let u = tree.word(i);
            let mut sum = T::zero();
            for j in 0..tree.len() {
                let x = &rows[i][j];
                sum = sum + x.clone();
                if x.is_zero() {
                    continue;
                }
                let v = tree.word(j);
                if *x < T::zero() {
                    out.push(Violation::Negative {
                        from: u.clone(),
                        to: v.clone(),
                        value: x.clone(),
                    });
                }
                let allowed = u.is_ancestor_of(&v) || u.parent().as_ref() == Some(&v);
                if !allowed {
                    out.push(Violation::Support {
                        from: u.clone(),
                        to: v,
                        value: x.clone(),
                    });
                }
            }
            if !(sum.clone() - T::one()).within(tol) {
                out.push(Violation::Stochasticity { node: u, row_sum: sum });
            }
        }
        return out;
    }
    for i in 0..trunc.len() {
        let u = trunc.node(i);
        let up = kernel.parent_weight(u);
        if up < T::zero() {
            out.push(Violation::Negative {
                from: u.clone(),
                to: u.parent().unwrap_or_default(),
                value: up.clone(),
            });
        }
        let row_sum = up + kernel.subtree_mass(u, u);
        if !(row_sum.clone() - T::one()).within(tol) {
            out.push(Violation::Stochasticity {
                node: u.clone(),
                row_sum,
            });
        }
        for j in trunc.subtree(i) {
            let v = trunc.node(j);
            let point = kernel.point_weight(u, v);
            if point < T::zero() {
                out.push(Violation::Negative {
                    from: u.clone(),
                    to: v.clone(),
                    value: point.clone(),
                });
            }
            if !trunc.has_all_children(j) {
                continue;
            }
            let below = trunc
                .children(j)
                .iter()
                .fold(T::zero(), |a, &c| a + kernel.subtree_mass(u, trunc.node(c)));
            let mass = kernel.subtree_mass(u, v);
            if !(below.clone() - mass.clone()).within(tol) && below > mass {
                out.push(Violation::Monotonicity {
                    from: u.clone(),
                    at: v.clone(),
                });
            }
            let gap = mass - point - below;
            if !gap.within(tol) {
                out.push(Violation::Consistency {
                    from: u.clone(),
                    at: v.clone(),
                    gap,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Irreducibility {
    /// All conditions hold on the truncation of the given depth.
    Pass { certified_depth: usize },
    Counterexample { node: NodeWord, reason: String },
}

/// Irreducibility conditions for AUD kernels, checked on a truncation:
/// U_{u,p(u)} > 0 for u ≠ ∅, and every v ≠ ∅ is entered from above.
pub fn check_irreducible<T: Scalar>(kernel: &Kernel<T>, trunc: &Truncation) -> Irreducibility {
    for u in trunc.nodes() {
        if u.is_root() {
            continue;
        }
        if !kernel.parent_weight(u).is_positive_strict() {
            return Irreducibility::Counterexample {
                node: u.clone(),
                reason: "zero weight to the parent".into(),
            };
        }
        let entered = (0..u.depth()).any(|d| kernel.subtree_mass(&u.prefix(d), u).is_positive_strict());
        if !entered {
            return Irreducibility::Counterexample {
                node: u.clone(),
                reason: if kernel.is_walk() {
                    "zero weight from the parent".into()
                } else {
                    "no strict ancestor jumps into the subtree".into()
                },
            };
        }
    }
    Irreducibility::Pass {
        certified_depth: trunc.height(),
    }
}

/// Mirrored conditions for ALD kernels: D_{p(u),u} > 0 for u ≠ ∅, and every
/// v ≠ ∅ has a descendant jumping to a strict ancestor of v.
pub fn check_irreducible_ald<T: Scalar>(kernel: &AldKernel<T>) -> Irreducibility {
    let t = kernel.truncation();
    for i in 1..t.len() {
        let u = t.node(i);
        let p = u.parent().unwrap();
        if !kernel.child_weight(&p, u).is_positive_strict() {
            return Irreducibility::Counterexample {
                node: u.clone(),
                reason: "zero weight from the parent".into(),
            };
        }
        let climbs = t.subtree(i).into_iter().any(|j| {
            let w = t.node(j);
            (0..u.depth()).any(|d| kernel.ancestor_weight(w, &u.prefix(d)).is_positive_strict())
        });
        if !climbs {
            return Irreducibility::Counterexample {
                node: u.clone(),
                reason: "no descendant jumps above the node".into(),
            };
        }
    }
    Irreducibility::Pass {
        certified_depth: t.height(),
    }
}
