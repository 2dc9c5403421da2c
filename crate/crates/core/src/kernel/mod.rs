//! Almost upper-directed (AUD) transition kernels on trees.
//!
//! A kernel moves from `u` either to its parent or into the subtree `T_u`.
//! Every family exposes the parent weight, point weights `U_{u,v}` and the
//! aggregated subtree masses `U_{u,T_v}`; the latter are computed in closed
//! form so that rows with infinite support are still usable.

mod check;
mod reverse;

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{FiniteTree, NodeWord, Ray, Restriction, Shape, TreeSource, Truncation};

pub use check::{check_irreducible, check_irreducible_ald, validate_aud, Irreducibility, Violation};
pub use reverse::{reverse, AldKernel};

/// One row of an almost upper-triangular chain on ℕ: `down` goes to h-1,
/// `jumps[m]` goes to h+m.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow<T> {
    pub down: T,
    pub jumps: Vec<T>,
}

/// An almost upper-triangular chain on ℕ; rows past `rows` repeat `tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelChain<T> {
    pub rows: Vec<LevelRow<T>>,
    pub tail: Option<LevelRow<T>>,
}

impl<T: Scalar> LevelChain<T> {
    pub fn row(&self, h: usize) -> Option<&LevelRow<T>> {
        self.rows.get(h).or(self.tail.as_ref())
    }

    /// Σ_{j ≥ from} 𝒰_{h,j} for `from ≥ h`.
    pub fn tail_mass(&self, h: usize, from: usize) -> T {
        let Some(r) = self.row(h) else { return T::zero() };
        r.jumps
            .iter()
            .skip(from - h)
            .fold(T::zero(), |a, x| a + x.clone())
    }

    pub fn weight(&self, h: usize, j: usize) -> T {
        let Some(r) = self.row(h) else { return T::zero() };
        if j + 1 == h {
            r.down.clone()
        } else if j >= h {
            r.jumps.get(j - h).cloned().unwrap_or_else(T::zero)
        } else {
            T::zero()
        }
    }

    fn validate(&self, levels: Option<usize>) -> Result<()> {
        let count = levels.unwrap_or(self.rows.len() + 1);
        for h in 0..count {
            let r = self
                .row(h)
                .ok_or_else(|| Error::InvalidKernel(format!("no level row {h}")))?;
            if h == 0 && !r.down.is_zero() {
                return Err(Error::InvalidKernel("level 0 cannot move down".into()));
            }
            let sum = r.jumps.iter().fold(r.down.clone(), |a, x| a + x.clone());
            if !(sum - T::one()).within(1e-12) {
                return Err(Error::InvalidKernel(format!("level row {h} does not sum to 1")));
            }
            if let Some(top) = levels {
                if h + r.jumps.len() > top && !self.tail_mass(h, top).is_zero() {
                    return Err(Error::InvalidKernel(format!(
                        "level row {h} jumps past the tree height"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour row: parent, stay, and one weight per child letter.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkRow<T> {
    pub up: T,
    pub stay: T,
    pub children: Vec<T>,
}

pub type WalkFn<T> = Arc<dyn Fn(&NodeWord, u32) -> WalkRow<T> + Send + Sync>;

/// Degree-homogeneous walk: up F(k), each child G(k), stay the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousParams<T> {
    pub f: Vec<T>,
    pub g: Vec<T>,
}

impl<T: Scalar> HomogeneousParams<T> {
    pub fn f(&self, k: u32) -> T {
        self.f.get(k as usize).cloned().unwrap_or_else(T::zero)
    }

    pub fn g(&self, k: u32) -> T {
        self.g.get(k as usize).cloned().unwrap_or_else(T::zero)
    }

    pub fn stay(&self, k: u32) -> T {
        T::one() - self.f(k) - T::from_int(k as i64) * self.g(k)
    }

    /// F(k) > 0, G(k) > 0 (k ≥ 1) and 1 − F(k) − kG(k) ≥ 0 for each listed degree.
    pub fn check_degree(&self, k: u32) -> Result<()> {
        if (k as usize) >= self.f.len() || (k > 0 && (k as usize) >= self.g.len()) {
            return Err(Error::InvalidKernel(format!("F/G undefined for degree {k}")));
        }
        if !self.f(k).is_positive_strict() {
            return Err(Error::InvalidKernel(format!("F({k}) must be positive")));
        }
        if k > 0 && !self.g(k).is_positive_strict() {
            return Err(Error::InvalidKernel(format!("G({k}) must be positive")));
        }
        if self.stay(k) < T::zero() || T::one() - T::from_int(k as i64) * self.g(k) < T::zero() {
            return Err(Error::InvalidKernel(format!(
                "1 - F({k}) - {k}G({k}) is negative"
            )));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum Law<T: Scalar> {
    /// Dense rows indexed breadth-first over a finite tree.
    Explicit(Arc<Vec<Vec<T>>>),
    /// Uniform over T_u ∪ {p(u)} (uniform over T at the root).
    UniformDescendantOrParent,
    /// Parent with 1−p, otherwise uniform over T_u.
    GeometricDescendant { p: T },
    /// Complete d-ary tree driven by a chain on the heights.
    HeightDriven { chain: Arc<LevelChain<T>>, arity: u32 },
    /// Parent with 1−p, otherwise a leaf of T_u with weight d^{-(|v|-|u|)}.
    LeafJump { p: T, arity: u32 },
    Walk { rule: WalkFn<T> },
    DegreeHomogeneous(Arc<HomogeneousParams<T>>),
    /// Projection of another kernel onto a sub-tree of its tree.
    Projected(Arc<Kernel<T>>),
}

/// An AUD kernel: a tree together with a transition law.
#[derive(Clone)]
pub struct Kernel<T: Scalar> {
    tree: TreeSource,
    law: Law<T>,
    name: String,
}


fn inv_power<T: Scalar>(d: u32, k: usize) -> T {
    T::one() / T::from_int(d as i64).pow_u(k as u32)
}

impl<T: Scalar> Kernel<T> {
    /// Dense rows over the breadth-first indices of a finite tree. Rows are
    /// not validated here; see [`validate_aud`].
    pub fn explicit(tree: FiniteTree, rows: Vec<Vec<T>>) -> Result<Self> {
        let n = tree.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidKernel(format!("expected a {n}x{n} matrix")));
        }
        Ok(Kernel {
            tree: TreeSource::finite(tree),
            law: Law::Explicit(Arc::new(rows)),
            name: "explicit".into(),
        })
    }

    pub fn uniform(tree: FiniteTree) -> Self {
        Kernel {
            tree: TreeSource::finite(tree),
            law: Law::UniformDescendantOrParent,
            name: "uniform".into(),
        }
    }

    pub fn geometric(tree: FiniteTree, p: T) -> Result<Self> {
        if !(p.is_positive_strict() && p <= T::one()) {
            return Err(Error::InvalidKernel("p must lie in (0,1]".into()));
        }
        Ok(Kernel {
            tree: TreeSource::finite(tree),
            law: Law::GeometricDescendant { p },
            name: "geometric".into(),
        })
    }

    /// Complete `arity`-ary tree (finite of some height, or lazy) driven by
    /// an almost upper-triangular chain on heights.
    pub fn height_driven(tree: TreeSource, chain: LevelChain<T>, arity: u32) -> Result<Self> {
        let levels = match &tree {
            TreeSource::Finite(t) => {
                if **t != FiniteTree::complete(arity, t.height()) {
                    return Err(Error::InvalidTree("tree is not complete".into()));
                }
                Some(t.height() + 1)
            }
            TreeSource::Lazy(l) => match l.shape {
                Shape::Complete { arity: a } if a == arity => None,
                _ => return Err(Error::InvalidTree("tree is not complete".into())),
            },
        };
        chain.validate(levels)?;
        Ok(Kernel {
            tree,
            law: Law::HeightDriven {
                chain: Arc::new(chain),
                arity,
            },
            name: "height_driven".into(),
        })
    }

    /// Every node must have `arity` children or none, with leaves reached
    /// with Kraft weight one below every node.
    pub fn leaf_jump(tree: TreeSource, p: T, arity: u32) -> Result<Self> {
        if !(p.is_positive_strict() && p < T::one()) {
            return Err(Error::InvalidKernel("p must lie in (0,1)".into()));
        }
        let probe = match &tree {
            TreeSource::Finite(t) => t.height(),
            _ => 10,
        };
        let trunc = crate::tree::truncate_capped(&tree, probe, 1 << 16)?;
        for u in trunc.nodes() {
            let c = tree.child_count(u);
            if c != 0 && c != arity {
                return Err(Error::InvalidTree(format!(
                    "node {u} has {c} children, expected 0 or {arity}"
                )));
            }
        }
        Ok(Kernel {
            tree,
            law: Law::LeafJump { p, arity },
            name: "leaf_jump".into(),
        })
    }

    pub fn walk(tree: TreeSource, name: &str, rule: WalkFn<T>) -> Self {
        Kernel {
            tree,
            law: Law::Walk { rule },
            name: name.to_string(),
        }
    }

    /// Up with `up`, to each child with `child`, stay otherwise; the root
    /// keeps the up weight as extra stay.
    pub fn homogeneous_walk(tree: TreeSource, up: T, child: T) -> Self {
        let name = format!("walk(up={},child={})", up.render(), child.render());
        Kernel::walk(
            tree,
            &name,
            Arc::new(move |u: &NodeWord, k: u32| {
                let up = if u.is_root() { T::zero() } else { up.clone() };
                let children = vec![child.clone(); k as usize];
                let stay = T::one() - up.clone() - T::from_int(k as i64) * child.clone();
                WalkRow { up, stay, children }
            }),
        )
    }

    /// Birth-death chain on the line: up with `up`, down with `down`.
    pub fn birth_death(up: T, down: T) -> Self {
        let name = format!("birth_death(up={},down={})", up.render(), down.render());
        Kernel::walk(
            TreeSource::line(),
            &name,
            Arc::new(move |u: &NodeWord, _| {
                let d = if u.is_root() { T::zero() } else { down.clone() };
                WalkRow {
                    stay: T::one() - up.clone() - d.clone(),
                    up: d,
                    children: vec![up.clone()],
                }
            }),
        )
    }

    pub fn degree_homogeneous(tree: TreeSource, params: HomogeneousParams<T>) -> Result<Self> {
        let probe = match &tree {
            TreeSource::Finite(t) => t.height(),
            _ => 8,
        };
        let trunc = crate::tree::truncate_capped(&tree, probe, 1 << 18)?;
        let mut seen = HashSet::new();
        for u in trunc.nodes() {
            let k = tree.child_count(u);
            if seen.insert((k, u.is_root())) {
                if u.is_root() {
                    if params.g(k) * T::from_int(k as i64) > T::one() {
                        return Err(Error::InvalidKernel("root row exceeds 1".into()));
                    }
                } else {
                    params.check_degree(k)?;
                }
            }
        }
        Ok(Kernel {
            tree,
            law: Law::DegreeHomogeneous(Arc::new(params)),
            name: "degree_homogeneous".into(),
        })
    }

    pub fn tree(&self) -> &TreeSource {
        &self.tree
    }

    pub fn law(&self) -> &Law<T> {
        &self.law
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn explicit_index(&self, u: &NodeWord) -> usize {
        self.tree
            .as_finite()
            .and_then(|t| t.index_of(u))
            .unwrap_or_else(|| panic!("node {u} is not in the kernel's tree"))
    }

    fn size(&self, u: &NodeWord) -> usize {
        self.tree
            .subtree_size(u)
            .unwrap_or_else(|| panic!("subtree size of {u} unavailable"))
    }

    fn total_size(&self) -> usize {
        self.size(&NodeWord::root())
    }

    fn walk_row(&self, rule: &WalkFn<T>, u: &NodeWord) -> WalkRow<T> {
        rule(u, self.tree.child_count(u))
    }

    /// U_{u,p(u)} (zero at the root).
    pub fn parent_weight(&self, u: &NodeWord) -> T {
        if u.is_root() {
            return T::zero();
        }
        match &self.law {
            Law::Explicit(rows) => {
                let t = self.tree.as_finite().unwrap();
                let i = self.explicit_index(u);
                rows[i][t.parent_index(i).unwrap()].clone()
            }
            Law::UniformDescendantOrParent => {
                T::one() / T::from_int(self.size(u) as i64 + 1)
            }
            Law::GeometricDescendant { p } | Law::LeafJump { p, .. } => T::one() - p.clone(),
            Law::HeightDriven { chain, .. } => chain
                .row(u.depth())
                .map(|r| r.down.clone())
                .unwrap_or_else(T::zero),
            Law::Walk { rule } => self.walk_row(rule, u).up,
            Law::DegreeHomogeneous(p) => p.f(self.tree.child_count(u)),
            Law::Projected(base) => base.parent_weight(u),
        }
    }

    /// U_{u,v} for v ∈ T_u (zero otherwise).
    pub fn point_weight(&self, u: &NodeWord, v: &NodeWord) -> T {
        if !u.is_ancestor_of(v) {
            return T::zero();
        }
        let gap = v.depth() - u.depth();
        match &self.law {
            Law::Explicit(rows) => {
                let t = self.tree.as_finite().unwrap();
                match t.index_of(v) {
                    Some(j) => rows[self.explicit_index(u)][j].clone(),
                    None => T::zero(),
                }
            }
            Law::UniformDescendantOrParent => {
                let extra = if u.is_root() { 0 } else { 1 };
                T::one() / T::from_int((self.size(u) + extra) as i64)
            }
            Law::GeometricDescendant { p } => {
                if u.is_root() {
                    let base = p.clone() / T::from_int(self.total_size() as i64);
                    if v.is_root() {
                        base + T::one() - p.clone()
                    } else {
                        base
                    }
                } else {
                    p.clone() / T::from_int(self.size(u) as i64)
                }
            }
            Law::HeightDriven { chain, arity } => {
                chain.weight(u.depth(), v.depth()) * inv_power::<T>(*arity, gap)
            }
            Law::LeafJump { p, arity } => {
                let leaf = self.tree.child_count(v) == 0;
                let jump = if leaf {
                    p.clone() * inv_power::<T>(*arity, gap)
                } else {
                    T::zero()
                };
                if u.is_root() && v.is_root() {
                    jump + T::one() - p.clone()
                } else {
                    jump
                }
            }
            Law::Walk { rule } => match gap {
                0 => self.walk_row(rule, u).stay,
                1 => {
                    let row = self.walk_row(rule, u);
                    row.children
                        .get(v.last().unwrap() as usize)
                        .cloned()
                        .unwrap_or_else(T::zero)
                }
                _ => T::zero(),
            },
            Law::DegreeHomogeneous(p) => {
                let k = self.tree.child_count(u);
                match gap {
                    0 if u.is_root() => T::one() - T::from_int(k as i64) * p.g(k),
                    0 => p.stay(k),
                    1 => p.g(k),
                    _ => T::zero(),
                }
            }
            Law::Projected(base) => {
                if !self.tree.contains(v) {
                    return T::zero();
                }
                let mut w = v.clone();
                let mut acc = base.subtree_mass(u, v);
                for c in self.tree.children(v) {
                    w.push(c);
                    acc = acc - base.subtree_mass(u, &w);
                    w.pop();
                }
                acc
            }
        }
    }

    /// U_{u,T_v} for v ∈ T_u (zero otherwise).
    pub fn subtree_mass(&self, u: &NodeWord, v: &NodeWord) -> T {
        if !u.is_ancestor_of(v) {
            return T::zero();
        }
        let gap = v.depth() - u.depth();
        match &self.law {
            Law::Explicit(rows) => {
                let t = self.tree.as_finite().unwrap();
                let Some(j) = t.index_of(v) else { return T::zero() };
                let row = &rows[self.explicit_index(u)];
                t.subtree(j)
                    .iter()
                    .fold(T::zero(), |a, &k| a + row[k].clone())
            }
            Law::UniformDescendantOrParent => {
                let extra = if u.is_root() { 0 } else { 1 };
                T::from_int(self.size(v) as i64) / T::from_int((self.size(u) + extra) as i64)
            }
            Law::GeometricDescendant { p } => {
                if u.is_root() {
                    if v.is_root() {
                        T::one()
                    } else {
                        p.clone() * T::from_int(self.size(v) as i64)
                            / T::from_int(self.total_size() as i64)
                    }
                } else {
                    p.clone() * T::from_int(self.size(v) as i64) / T::from_int(self.size(u) as i64)
                }
            }
            Law::HeightDriven { chain, arity } => {
                chain.tail_mass(u.depth(), v.depth()) * inv_power::<T>(*arity, gap)
            }
            Law::LeafJump { p, arity } => {
                if u.is_root() && v.is_root() {
                    T::one()
                } else {
                    p.clone() * inv_power::<T>(*arity, gap)
                }
            }
            Law::Walk { rule } => match gap {
                0 => {
                    let row = self.walk_row(rule, u);
                    row.children.iter().fold(row.stay, |a, x| a + x.clone())
                }
                1 => self.point_weight(u, v),
                _ => T::zero(),
            },
            Law::DegreeHomogeneous(p) => {
                let k = self.tree.child_count(u);
                match gap {
                    0 if u.is_root() => T::one(),
                    0 => T::one() - p.f(k),
                    1 => p.g(k),
                    _ => T::zero(),
                }
            }
            Law::Projected(base) => {
                if self.tree.contains(v) {
                    base.subtree_mass(u, v)
                } else {
                    T::zero()
                }
            }
        }
    }

    /// U_{u,v} for any pair of nodes.
    pub fn weight(&self, u: &NodeWord, v: &NodeWord) -> T {
        if u.parent().as_ref() == Some(v) {
            self.parent_weight(u)
        } else {
            self.point_weight(u, v)
        }
    }

    /// U_{u,T_v} for any pair of nodes.
    pub fn mass_into(&self, u: &NodeWord, v: &NodeWord) -> T {
        if v.is_strict_ancestor_of(u) {
            T::one()
        } else {
            self.subtree_mass(u, v)
        }
    }

    /// Largest depth gap of a jump into the subtree (`None` if unbounded).
    pub fn jump_range(&self) -> Option<usize> {
        match &self.law {
            Law::Walk { .. } | Law::DegreeHomogeneous(_) => Some(1),
            Law::Explicit(_) | Law::UniformDescendantOrParent | Law::GeometricDescendant { .. } => {
                self.tree.as_finite().map(|t| t.height())
            }
            Law::HeightDriven { chain, .. } => Some(
                chain
                    .rows
                    .iter()
                    .chain(chain.tail.iter())
                    .map(|r| r.jumps.len().saturating_sub(1))
                    .max()
                    .unwrap_or(0),
            ),
            Law::LeafJump { .. } => self.tree.as_finite().map(|t| t.height()),
            Law::Projected(base) => base.jump_range(),
        }
    }

    /// True for nearest-neighbour kernels (moves to parent, self or children).
    pub fn is_walk(&self) -> bool {
        match &self.law {
            Law::Walk { .. } | Law::DegreeHomogeneous(_) => true,
            Law::Projected(base) => base.is_walk(),
            Law::Explicit(rows) => {
                let t = self.tree.as_finite().unwrap();
                (0..t.len()).all(|i| {
                    (0..t.len()).all(|j| {
                        rows[i][j].is_zero()
                            || i == j
                            || t.parent_index(i) == Some(j)
                            || t.parent_index(j) == Some(i)
                    })
                })
            }
            _ => self.jump_range() == Some(1),
        }
    }

    /// Nodes reachable in one step from `u` with positive weight, restricted
    /// to depth ≤ `max_depth`.
    pub fn support(&self, u: &NodeWord, max_depth: usize) -> Vec<(NodeWord, T)> {
        let mut out = Vec::new();
        if let Some(p) = u.parent() {
            let w = self.parent_weight(u);
            if !w.is_zero() {
                out.push((p, w));
            }
        }
        let limit = self
            .jump_range()
            .map_or(max_depth, |r| max_depth.min(u.depth() + r));
        let mut stack = vec![u.clone()];
        while let Some(v) = stack.pop() {
            let w = self.point_weight(u, &v);
            if !w.is_zero() {
                out.push((v.clone(), w));
            }
            if v.depth() < limit {
                for c in self.tree.children(&v).into_iter().rev() {
                    let child = v.child(c);
                    if !self.subtree_mass(u, &child).is_zero() {
                        stack.push(child);
                    }
                }
            }
        }
        out
    }

    /// One step from `u`; descends the subtree masses so infinite-support
    /// rows are sampled exactly.
    pub fn sample_step<R: Rng + ?Sized>(&self, u: &NodeWord, rng: &mut R) -> NodeWord {
        let mut r: f64 = rng.gen();
        let up = self.parent_weight(u).to_f64();
        if r < up {
            return u.parent().unwrap();
        }
        r -= up;
        let mut v = u.clone();
        'descend: loop {
            let stay = self.point_weight(u, &v).to_f64();
            if r < stay {
                return v;
            }
            r -= stay;
            for c in self.tree.children(&v) {
                let child = v.child(c);
                let m = self.subtree_mass(u, &child).to_f64();
                if r < m {
                    v = child;
                    continue 'descend;
                }
                r -= m;
            }
            return v;
        }
    }

    /// `sample_step` in place. Walk laws move by push/pop without copying the
    /// word; the draw sequence matches `sample_step`.
    pub fn step_in_place<R: Rng + ?Sized>(&self, u: &mut NodeWord, rng: &mut R) {
        let rule = match &self.law {
            Law::Walk { rule } if self.tree.contiguous_children() => rule,
            _ => {
                *u = self.sample_step(u, rng);
                return;
            }
        };
        let mut r: f64 = rng.gen();
        let row = rule(u, self.tree.member_child_count(u));
        if !u.is_root() {
            let up = row.up.to_f64();
            if r < up {
                u.pop();
                return;
            }
            r -= up;
        }
        let stay = row.stay.to_f64();
        if r < stay {
            return;
        }
        r -= stay;
        for (c, w) in row.children.iter().enumerate() {
            let w = w.to_f64();
            if r < w {
                u.push(c as u32);
                return;
            }
            r -= w;
        }
    }

    /// Projection onto a truncation: frontier nodes absorb their subtrees,
    /// so every row sums to one.
    pub fn dense(&self, trunc: &Truncation) -> Vec<Vec<T>> {
        self.dense_impl(trunc, true)
    }

    /// Raw point weights restricted to a truncation (rows may be defective).
    pub fn restricted_dense(&self, trunc: &Truncation) -> Vec<Vec<T>> {
        self.dense_impl(trunc, false)
    }

    fn dense_impl(&self, trunc: &Truncation, absorb: bool) -> Vec<Vec<T>> {
        let n = trunc.len();
        let range = self.jump_range();
        let mut m = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            let u = trunc.node(i);
            if let Some(p) = trunc.parent(i) {
                m[i][p] = self.parent_weight(u);
            }
            for j in trunc.subtree(i) {
                let v = trunc.node(j);
                if let Some(r) = range {
                    if v.depth() - u.depth() > r {
                        continue;
                    }
                }
                m[i][j] = if absorb && !trunc.has_all_children(j) {
                    self.subtree_mass(u, v)
                } else {
                    self.point_weight(u, v)
                };
            }
        }
        m
    }
}

/// U^t: the projection of a kernel onto a finite sub-tree containing ∅.
pub fn project_subtree<T: Scalar>(kernel: &Kernel<T>, t: &Truncation) -> Result<Kernel<T>> {
    for u in t.nodes() {
        if !kernel.tree().contains(u) {
            return Err(Error::UnknownNode(u.to_string()));
        }
    }
    let set: HashSet<NodeWord> = t.nodes().iter().cloned().collect();
    Ok(Kernel {
        tree: TreeSource::restricted(kernel.tree(), Restriction::Nodes(Arc::new(set))),
        law: Law::Projected(Arc::new(kernel.clone())),
        name: format!("{}|subtree", kernel.name()),
    })
}

/// U^p: the kernel redirected onto an end and its finite side trees.
pub fn project_end<T: Scalar>(kernel: &Kernel<T>, end: &Ray) -> Result<Kernel<T>> {
    if !end.is_periodic() {
        return Err(Error::MissingAnnotation(format!(
            "end {end} is only known up to depth {}",
            end.prefix.len()
        )));
    }
    let tree = kernel.tree();
    let probe = end.prefix.len() + 4 * end.cycle.len() + 16;
    for d in 0..probe {
        let u = end.node(d).unwrap();
        if !tree.contains(&u) {
            return Err(Error::InvalidTree(format!("end {end} leaves the tree at {u}")));
        }
        for c in tree.children(&u) {
            if Some(c) != end.letter(d) && tree.subtree_finite(&u.child(c)).is_none() {
                return Err(Error::MissingAnnotation(format!(
                    "finiteness of the side tree at {} is unknown",
                    u.child(c)
                )));
            }
        }
    }
    Ok(Kernel {
        tree: TreeSource::restricted(tree, Restriction::EndRay(end.clone())),
        law: Law::Projected(Arc::new(kernel.clone())),
        name: format!("{}|end({end})", kernel.name()),
    })
}

/// U^∞: the kernel on the leafless skeleton, finite subtrees redirected to
/// their closest skeleton ancestor.
pub fn prune_finite_subtrees<T: Scalar>(kernel: &Kernel<T>) -> Result<Kernel<T>> {
    let tree = kernel.tree();
    let trunc = crate::tree::truncate_capped(tree, 6, 1 << 16)?;
    for u in trunc.nodes() {
        if tree.subtree_finite(u).is_none() {
            return Err(Error::MissingAnnotation(format!("finiteness of T_{u} is unknown")));
        }
    }
    if tree.subtree_finite(&NodeWord::root()) == Some(true) {
        return Err(Error::InvalidTree("a finite tree has an empty skeleton".into()));
    }
    Ok(Kernel {
        tree: TreeSource::restricted(tree, Restriction::Skeleton),
        law: Law::Projected(Arc::new(kernel.clone())),
        name: format!("{}|skeleton", kernel.name()),
    })
}
