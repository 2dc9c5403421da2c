//! h-invariant measures and left eigenvectors of AUD kernels.
//!
//! `π(u)` is a ratio of a branch-matrix determinant over the product of
//! parent weights along `[[∅,u]]`; the leaf-addition recursion computes the
//! same values node by node from subtree masses only.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{self, Matrix};
use crate::measure::Measure;
use crate::scalar::Scalar;
use crate::tree::{EndDescription, EndInfo, NodeWord, TreeSource, Truncation};

/// ^uU on the ancestral path [[∅,u]].
#[derive(Clone, Debug, PartialEq)]
pub struct BranchMatrix<T> {
    pub node: NodeWord,
    pub path: Vec<NodeWord>,
    pub entries: Matrix<T>,
}

pub fn branch_matrix<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord) -> Result<BranchMatrix<T>> {
    if u.is_root() {
        return Err(Error::InvalidTree("the branch matrix needs u ≠ ∅".into()));
    }
    let h = u.depth();
    let path = u.ancestors();
    let mut entries = vec![vec![T::zero(); h + 1]; h + 1];
    for i in 0..h {
        let a = &path[i];
        for j in 0..=h {
            entries[i][j] = if j == h {
                kernel.mass_into(a, u)
            } else if j + 1 >= i {
                kernel.mass_into(a, &path[j]) - kernel.mass_into(a, &path[j + 1])
            } else {
                T::zero()
            };
        }
    }
    let up = kernel.parent_weight(u);
    entries[h][h - 1] = up.clone();
    entries[h][h] = T::one() - up;
    Ok(BranchMatrix {
        node: u.clone(),
        path,
        entries,
    })
}

fn parent_product<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord) -> Result<T> {
    let mut prod = T::one();
    for v in u.ancestors().iter().skip(1) {
        let w = kernel.parent_weight(v);
        if w.is_zero() {
            return Err(Error::ZeroParentWeight(v.to_string()));
        }
        prod = prod * w;
    }
    Ok(prod)
}

fn branch_det<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord, lambda: &T) -> Result<T> {
    let b = branch_matrix(kernel, u)?;
    let shifted = linalg::shifted(&b.entries, lambda);
    Ok(linalg::det(&linalg::minor(&shifted, u.depth())))
}

/// π(u) = π(∅) det((Id − ^uU)^{(u)}) / ∏_{v∈]∅,u]} U_{v,p(v)}.
pub fn h_invariant_det<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord, root_value: &T) -> Result<T> {
    if u.is_root() {
        return Ok(root_value.clone());
    }
    let denom = parent_product(kernel, u)?;
    Ok(root_value.clone() * branch_det(kernel, u, &T::one())? / denom)
}

/// The determinant formula at every node of a truncation, on `jobs` threads.
pub fn h_invariant_det_all<T: Scalar>(
    kernel: &Kernel<T>,
    trunc: &Truncation,
    root_value: &T,
    jobs: usize,
) -> Result<Measure<T>> {
    let compute = || {
        trunc
            .nodes()
            .par_iter()
            .map(|u| h_invariant_det(kernel, u, root_value).map(|v| (u.clone(), v)))
            .collect::<Result<Vec<_>>>()
    };
    let pairs = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?
        .install(compute)?;
    Ok(Measure::from_pairs(pairs))
}

fn leaf_step<T: Scalar>(
    kernel: &Kernel<T>,
    u: &NodeWord,
    ancestor_values: impl Fn(usize) -> T,
) -> Result<T> {
    let up = kernel.parent_weight(u);
    if up.is_zero() {
        return Err(Error::ZeroParentWeight(u.to_string()));
    }
    let h = u.depth();
    let lo = kernel.jump_range().map_or(0, |r| h.saturating_sub(r));
    let mut acc = T::zero();
    for d in lo..h {
        let m = kernel.subtree_mass(&u.prefix(d), u);
        if !m.is_zero() {
            acc = acc + ancestor_values(d) * m;
        }
    }
    Ok(acc / up)
}

/// Leaf addition over the ancestral closure of `targets`, breadth-first,
/// with π(∅) = 1.
pub fn h_invariant_leaf_addition<'a, T: Scalar, I>(kernel: &Kernel<T>, targets: I) -> Result<Measure<T>>
where
    I: IntoIterator<Item = &'a NodeWord>,
{
    let mut closure = BTreeSet::new();
    for t in targets {
        if !kernel.tree().contains(t) {
            return Err(Error::UnknownNode(t.to_string()));
        }
        for a in t.ancestors() {
            closure.insert(a);
        }
    }
    closure.insert(NodeWord::root());
    let mut values: HashMap<NodeWord, T> = HashMap::new();
    let mut out = Measure::new();
    for u in closure {
        let v = if u.is_root() {
            T::one()
        } else {
            leaf_step(kernel, &u, |d| values[&u.prefix(d)].clone())?
        };
        values.insert(u.clone(), v.clone());
        out.insert(u, v);
    }
    Ok(out)
}

/// Depth-first leaf addition visiting every node of depth ≤ `max_depth`;
/// only the values on the current branch are kept.
pub fn leaf_addition_visit<T: Scalar>(
    kernel: &Kernel<T>,
    max_depth: usize,
    cap: usize,
    mut visit: impl FnMut(&NodeWord, &T),
) -> Result<usize> {
    let tree = kernel.tree();
    let mut word = NodeWord::root();
    let mut values = vec![T::one()];
    visit(&word, &values[0]);
    let mut count = 1usize;
    if max_depth == 0 {
        return Ok(count);
    }
    let mut stack: Vec<(Vec<u32>, usize)> = vec![(tree.children(&word), 0)];
    while let Some((letters, next)) = stack.last_mut() {
        if *next < letters.len() {
            let c = letters[*next];
            *next += 1;
            word.push(c);
            let v = leaf_step(kernel, &word, |d| values[d].clone())?;
            visit(&word, &v);
            count += 1;
            if count > cap {
                return Err(Error::ResourceLimit {
                    what: "leaf-addition population".into(),
                    cap,
                });
            }
            if word.depth() < max_depth {
                values.push(v);
                stack.push((tree.children(&word), 0));
            } else {
                word.pop();
            }
        } else {
            stack.pop();
            if !stack.is_empty() {
                word.pop();
                values.pop();
            }
        }
    }
    Ok(count)
}

/// S_k = Σ_{|u|=k} π(u) for k = 0..=depth (π(∅) = 1).
pub fn level_sums<T: Scalar>(kernel: &Kernel<T>, depth: usize, cap: usize) -> Result<Vec<T>> {
    let mut sums = vec![T::zero(); depth + 1];
    leaf_addition_visit(kernel, depth, cap, |u, v| {
        sums[u.depth()] = sums[u.depth()].clone() + v.clone();
    })?;
    Ok(sums)
}

/// Σ_u π(u) over a finite tree (π(∅) = 1).
pub fn total_mass<T: Scalar>(kernel: &Kernel<T>, cap: usize) -> Result<T> {
    if !kernel.tree().is_finite() {
        return Err(Error::InvalidTree("total mass needs a finite tree".into()));
    }
    let mut total = T::zero();
    leaf_addition_visit(kernel, usize::MAX, cap, |_, v| total = total.clone() + v.clone())?;
    Ok(total)
}

/// π̄(u) = ∏_j M_{u[j−1],u[j]} / M_{u[j],u[j−1]} for nearest-neighbour walks.
pub fn rw_invariant<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord) -> Result<T> {
    if !kernel.is_walk() {
        return Err(Error::NotRandomWalk);
    }
    let path = u.ancestors();
    let mut acc = T::one();
    for pair in path.windows(2) {
        let down = kernel.point_weight(&pair[0], &pair[1]);
        let up = kernel.parent_weight(&pair[1]);
        if down.is_zero() || up.is_zero() {
            return Err(Error::ZeroParentWeight(pair[1].to_string()));
        }
        acc = acc * down / up;
    }
    Ok(acc)
}

fn value_at<T: Scalar>(mu: &impl Fn(&NodeWord) -> Option<T>, v: &NodeWord) -> Result<T> {
    mu(v).ok_or_else(|| Error::MissingAnnotation(format!("measure has no value at {v}")))
}

/// |λ mu(u) − Σ_{v∈[[∅,u]]} mu(v) U_{v,u} − Σ_{c∈c(u)} mu(c) U_{c,u}|.
pub fn eigen_residual<T: Scalar>(
    kernel: &Kernel<T>,
    mu: impl Fn(&NodeWord) -> Option<T>,
    lambda: &T,
    u: &NodeWord,
) -> Result<T> {
    let h = u.depth();
    let lo = kernel.jump_range().map_or(0, |r| h.saturating_sub(r));
    let mut inflow = T::zero();
    for d in lo..=h {
        let v = u.prefix(d);
        let w = kernel.point_weight(&v, u);
        if !w.is_zero() {
            inflow = inflow + value_at(&mu, &v)? * w;
        }
    }
    for c in kernel.tree().children(u) {
        let child = u.child(c);
        let w = kernel.parent_weight(&child);
        if !w.is_zero() {
            inflow = inflow + value_at(&mu, &child)? * w;
        }
    }
    Ok((lambda.clone() * value_at(&mu, u)? - inflow).abs())
}

/// Balance residual of the invariance equation at `u`.
pub fn balance_residual<T: Scalar>(
    kernel: &Kernel<T>,
    mu: impl Fn(&NodeWord) -> Option<T>,
    u: &NodeWord,
) -> Result<T> {
    eigen_residual(kernel, mu, &T::one(), u)
}

/// π^{(λ)}(u) = det((λId − ^uU)^{(u)}) / ∏ U_{v,p(v)} with π^{(λ)}(∅) = 1.
///
/// For λ = 1 this is the h-invariant measure. For other λ it solves
/// λπ = πU on a ray; once the tree branches the balance equations fail
/// (check with [`eigen_residual`]).
pub fn lambda_eigenvector_branch<T: Scalar>(kernel: &Kernel<T>, lambda: &T, u: &NodeWord) -> Result<T> {
    if kernel.tree().leafless() != Some(true) {
        return Err(Error::LeafyTree);
    }
    if u.is_root() {
        return Ok(T::one());
    }
    let denom = parent_product(kernel, u)?;
    Ok(branch_det(kernel, u, lambda)? / denom)
}

/// A left eigenvector of a finite matrix with its multiplicity diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport<T> {
    pub lambda: T,
    pub vector: Vec<T>,
    pub algebraic_multiplicity: usize,
    /// Index whose column was replaced to make rows sum to zero.
    pub pivot: usize,
    pub residual: f64,
}

/// Left λ-eigenvector by principal minors of λId − M with one column
/// replaced by minus the sum of the others.
pub fn lambda_eigenvector_finite<T: Scalar>(m: &[Vec<T>], lambda: &T) -> Result<EigenReport<T>> {
    let n = m.len();
    let tol = if T::EXACT { 0.0 } else { 1e-9 };
    let poly = linalg::char_poly(m);
    let mult = linalg::root_multiplicity(&poly, lambda, tol);
    if mult == 0 {
        return Err(Error::NotAnEigenvalue(lambda.render()));
    }
    if mult > 1 {
        let geometric = n - linalg::rank(&linalg::shifted(m, lambda), tol.max(1e-12));
        return Err(Error::NonSimpleEigenvalue {
            lambda: lambda.render(),
            algebraic: mult,
            geometric,
        });
    }
    let base = linalg::shifted(m, lambda);
    let order = std::iter::once(n - 1).chain(0..n.saturating_sub(1));
    for k in order {
        let mut l = base.clone();
        for row in l.iter_mut() {
            let others = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .fold(T::zero(), |a, (_, x)| a + x.clone());
            row[k] = -others;
        }
        let v: Vec<T> = (0..n).map(|i| linalg::det(&linalg::minor(&l, i))).collect();
        if v.iter().all(|x| x.within(tol)) {
            continue;
        }
        let residual = left_residual(m, &v, lambda);
        let scale = v.iter().fold(0.0f64, |a, x| a.max(x.to_f64().abs()));
        if (T::EXACT && residual == 0.0) || (!T::EXACT && residual <= 1e-9 * scale.max(1.0)) {
            return Ok(EigenReport {
                lambda: lambda.clone(),
                vector: v,
                algebraic_multiplicity: mult,
                pivot: k,
                residual,
            });
        }
    }
    Err(Error::NotAnEigenvalue(lambda.render()))
}

/// max_j |(vM − λv)_j|.
pub fn left_residual<T: Scalar>(m: &[Vec<T>], v: &[T], lambda: &T) -> f64 {
    (0..m.len())
        .map(|j| {
            let s = (0..m.len()).fold(T::zero(), |a, i| a + v[i].clone() * m[i][j].clone());
            (s - lambda.clone() * v[j].clone()).abs().to_f64()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Finite(usize),
    Infinite,
}

/// Q(T) = 1 + Σ_{u∈P(T)} (|c_{P(T)}(u)| − 1), P(T) the union of the ends.
pub fn eigenspace_dimension(source: &TreeSource) -> Result<Dimension> {
    match source.ends() {
        EndInfo::NoEnds => Ok(Dimension::Finite(1)),
        EndInfo::Uncountable => Ok(Dimension::Infinite),
        EndInfo::Unknown => Err(Error::MissingAnnotation("end structure".into())),
        EndInfo::Rays(rays) => {
            let desc = EndDescription::from_rays(rays, false)?;
            let depth = desc.sources.iter().map(|s| s.depth()).max().unwrap_or(0);
            let mut nodes = BTreeSet::new();
            for r in &desc.ends {
                for d in 0..=depth {
                    nodes.insert(r.node(d).unwrap());
                }
            }
            let mut children: HashMap<NodeWord, usize> = HashMap::new();
            for u in &nodes {
                if let Some(p) = u.parent() {
                    *children.entry(p).or_default() += 1;
                }
            }
            let excess: usize = nodes
                .iter()
                .filter(|u| u.depth() < depth)
                .map(|u| children.get(u).copied().unwrap_or(0).saturating_sub(1))
                .sum();
            Ok(Dimension::Finite(1 + excess))
        }
    }
}

#[cfg(test)]
mod tests;
