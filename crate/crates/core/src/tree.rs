//! Rooted trees: node words, finite and lazy trees, truncations and ends.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A node address: the sequence of child letters from the root.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct NodeWord(Vec<u32>);

impl NodeWord {
    pub fn root() -> Self {
        NodeWord(Vec::new())
    }

    pub fn new(letters: Vec<u32>) -> Self {
        NodeWord(letters)
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parent(&self) -> Option<NodeWord> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeWord(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, c: u32) -> NodeWord {
        let mut v = self.0.clone();
        v.push(c);
        NodeWord(v)
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// The ancestor at depth `k` (clamped to the node itself).
    pub fn prefix(&self, k: usize) -> NodeWord {
        NodeWord(self.0[..k.min(self.0.len())].to_vec())
    }

    /// Inclusive ancestry: `v.is_ancestor_of(u)` iff `v` is a prefix of `u`.
    pub fn is_ancestor_of(&self, other: &NodeWord) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_strict_ancestor_of(&self, other: &NodeWord) -> bool {
        other.0.len() > self.0.len() && self.is_ancestor_of(other)
    }

    /// `[[∅, u]]` from the root down to the node itself.
    pub fn ancestors(&self) -> Vec<NodeWord> {
        (0..=self.0.len()).map(|k| self.prefix(k)).collect()
    }

    /// The child of `self` on the path towards `u` (`self` must be a strict ancestor).
    pub fn toward(&self, u: &NodeWord) -> NodeWord {
        u.prefix(self.depth() + 1)
    }

    pub(crate) fn push(&mut self, c: u32) {
        self.0.push(c);
    }

    pub(crate) fn pop(&mut self) -> Option<u32> {
        self.0.pop()
    }
}

impl From<Vec<u32>> for NodeWord {
    fn from(v: Vec<u32>) -> Self {
        NodeWord(v)
    }
}

impl From<&[u32]> for NodeWord {
    fn from(v: &[u32]) -> Self {
        NodeWord(v.to_vec())
    }
}

/// Breadth-first order: shorter words first, then lexicographic.
impl Ord for NodeWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for NodeWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for NodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for NodeWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "∅" || s == "root" {
            return Ok(NodeWord::root());
        }
        s.split('.')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad node word {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(NodeWord)
    }
}

impl serde::Serialize for NodeWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

const NONE: usize = usize::MAX;

/// A finite tree stored by breadth-first child counts.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTree {
    counts: Vec<u32>,
    first_child: Vec<usize>,
    parent: Vec<usize>,
    letter: Vec<u32>,
    depth: Vec<u32>,
    size: Vec<usize>,
    preorder: Vec<usize>,
    pre_pos: Vec<usize>,
}

impl FiniteTree {
    /// Builds a tree from breadth-first child counts, e.g. `[2, 1, 0, 0]`.
    pub fn from_bfs_counts(counts: Vec<u32>) -> Result<Self> {
        let n = counts.len();
        if n == 0 {
            return Err(Error::InvalidTree("empty count list".into()));
        }
        let total: usize = 1 + counts.iter().map(|&c| c as usize).sum::<usize>();
        if total != n {
            return Err(Error::InvalidTree(format!(
                "{n} counts describe {total} nodes"
            )));
        }
        let mut first_child = vec![0; n];
        let mut parent = vec![NONE; n];
        let mut letter = vec![0; n];
        let mut depth = vec![0; n];
        let mut next = 1;
        for i in 0..n {
            if i > 0 && parent[i] == NONE {
                return Err(Error::InvalidTree(format!("node {i} is unreachable")));
            }
            first_child[i] = next;
            for c in 0..counts[i] {
                let j = next + c as usize;
                parent[j] = i;
                letter[j] = c;
                depth[j] = depth[i] + 1;
            }
            next += counts[i] as usize;
        }
        let mut size = vec![1usize; n];
        for i in (1..n).rev() {
            size[parent[i]] += size[i];
        }
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            preorder.push(i);
            for c in (0..counts[i] as usize).rev() {
                stack.push(first_child[i] + c);
            }
        }
        let mut pre_pos = vec![0; n];
        for (k, &i) in preorder.iter().enumerate() {
            pre_pos[i] = k;
        }
        Ok(FiniteTree {
            counts,
            first_child,
            parent,
            letter,
            depth,
            size,
            preorder,
            pre_pos,
        })
    }

    /// Builds a tree from its node set, checking prefix and left-sibling closure.
    pub fn from_words<I: IntoIterator<Item = NodeWord>>(words: I) -> Result<Self> {
        let set: HashSet<NodeWord> = words.into_iter().collect();
        if !set.contains(&NodeWord::root()) {
            return Err(Error::InvalidTree("missing root".into()));
        }
        for w in &set {
            if let Some(p) = w.parent() {
                if !set.contains(&p) {
                    return Err(Error::InvalidTree(format!("{w} has no parent")));
                }
                let c = w.last().unwrap();
                if c > 0 && !set.contains(&p.child(c - 1)) {
                    return Err(Error::InvalidTree(format!("{w} has no left sibling")));
                }
            }
        }
        let mut sorted: Vec<&NodeWord> = set.iter().collect();
        sorted.sort();
        let mut counts: HashMap<&NodeWord, u32> = HashMap::new();
        for w in &set {
            if let Some(p) = w.parent() {
                let e = counts.entry(set.get(&p).unwrap()).or_insert(0);
                *e = (*e).max(w.last().unwrap() + 1);
            }
        }
        FiniteTree::from_bfs_counts(
            sorted
                .iter()
                .map(|w| counts.get(*w).copied().unwrap_or(0))
                .collect(),
        )
    }

    pub fn single() -> Self {
        FiniteTree::from_bfs_counts(vec![0]).unwrap()
    }

    /// A path with `n` nodes: ∅ – 0 – 0.0 – …
    pub fn path(n: usize) -> Self {
        let mut counts = vec![1; n.max(1)];
        *counts.last_mut().unwrap() = 0;
        FiniteTree::from_bfs_counts(counts).unwrap()
    }

    /// Complete `arity`-ary tree of the given height.
    pub fn complete(arity: u32, height: usize) -> Self {
        let mut counts = Vec::new();
        let mut level = 1usize;
        for h in 0..=height {
            let c = if h < height { arity } else { 0 };
            counts.extend(std::iter::repeat_n(c, level));
            level *= arity as usize;
        }
        FiniteTree::from_bfs_counts(counts).unwrap()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn index_of(&self, u: &NodeWord) -> Option<usize> {
        self.index_of_letters(u.letters())
    }

    pub fn index_of_letters(&self, letters: &[u32]) -> Option<usize> {
        let mut i = 0;
        for &c in letters {
            if c >= self.counts[i] {
                return None;
            }
            i = self.first_child[i] + c as usize;
        }
        Some(i)
    }

    pub fn word(&self, mut i: usize) -> NodeWord {
        let mut letters = Vec::with_capacity(self.depth[i] as usize);
        while i != 0 {
            letters.push(self.letter[i]);
            i = self.parent[i];
        }
        letters.reverse();
        NodeWord(letters)
    }

    pub fn words(&self) -> Vec<NodeWord> {
        (0..self.len()).map(|i| self.word(i)).collect()
    }

    pub fn child_count(&self, i: usize) -> u32 {
        self.counts[i]
    }

    pub fn child_index(&self, i: usize, c: u32) -> usize {
        self.first_child[i] + c as usize
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        self.first_child[i]..self.first_child[i] + self.counts[i] as usize
    }

    pub fn parent_index(&self, i: usize) -> Option<usize> {
        (i != 0).then(|| self.parent[i])
    }

    pub fn depth_of(&self, i: usize) -> usize {
        self.depth[i] as usize
    }

    pub fn subtree_size(&self, i: usize) -> usize {
        self.size[i]
    }

    /// Indices of T_i in preorder.
    pub fn subtree(&self, i: usize) -> &[usize] {
        let s = self.pre_pos[i];
        &self.preorder[s..s + self.size[i]]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.counts[i] == 0
    }
}

/// One level of a spine tree: which child continues the spine, and the
/// finite trees grafted on the other children (in letter order).
#[derive(Clone, Debug, PartialEq)]
pub struct SpineLevel {
    pub spine_child: u32,
    pub grafts: Vec<FiniteTree>,
}

impl SpineLevel {
    pub fn bare() -> Self {
        SpineLevel {
            spine_child: 0,
            grafts: Vec::new(),
        }
    }

    pub fn arity(&self) -> u32 {
        self.grafts.len() as u32 + 1
    }
}

/// An infinite spine with finite decorations; `tail` repeats forever.
#[derive(Clone, Debug, PartialEq)]
pub struct SpineShape {
    pub levels: Vec<SpineLevel>,
    pub tail: Vec<SpineLevel>,
}

impl SpineShape {
    pub fn new(levels: Vec<SpineLevel>, tail: Vec<SpineLevel>) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::InvalidTree("spine tail must be non-empty".into()));
        }
        for l in levels.iter().chain(&tail) {
            if l.spine_child > l.grafts.len() as u32 {
                return Err(Error::InvalidTree("spine child out of range".into()));
            }
        }
        Ok(SpineShape { levels, tail })
    }

    pub fn level(&self, j: usize) -> &SpineLevel {
        if j < self.levels.len() {
            &self.levels[j]
        } else {
            &self.tail[(j - self.levels.len()) % self.tail.len()]
        }
    }

    fn ray(&self) -> Ray {
        Ray {
            prefix: self.levels.iter().map(|l| l.spine_child).collect(),
            cycle: self.tail.iter().map(|l| l.spine_child).collect(),
        }
    }
}

enum SpinePos<'a> {
    Spine(usize),
    Graft(&'a FiniteTree, usize),
    Absent,
}

pub type ChildCountFn = Arc<dyn Fn(&NodeWord) -> u32 + Send + Sync>;

/// The families of lazily described infinite (or restricted) trees.
#[derive(Clone)]
pub enum Shape {
    /// Every node has `arity` children; arity 1 is the line.
    Complete { arity: u32 },
    /// Root with two children, every other node with one: ℤ rooted at 0.
    TwoRays,
    Spine(Arc<SpineShape>),
    /// A pure user function giving child counts.
    Generator { name: String, f: ChildCountFn },
    /// Sub-tree of another tree keeping original node words.
    Restricted {
        base: Arc<TreeSource>,
        rule: Restriction,
    },
}

/// Which nodes of the base tree a restricted tree keeps.
#[derive(Clone)]
pub enum Restriction {
    /// An explicit prefix-closed node set.
    Nodes(Arc<HashSet<NodeWord>>),
    /// The ray plus the finite subtrees hanging from it.
    EndRay(Ray),
    /// Nodes with infinitely many descendants.
    Skeleton,
}

#[derive(Clone)]
pub struct LazyTree {
    pub shape: Shape,
    pub ends: Option<Vec<Ray>>,
}

/// A finite explicit tree or a lazy locally finite one.
#[derive(Clone)]
pub enum TreeSource {
    Finite(Arc<FiniteTree>),
    Lazy(Arc<LazyTree>),
}

/// End structure as known from the tree description.
#[derive(Clone, Debug, PartialEq)]
pub enum EndInfo {
    /// Finite tree: no ends.
    NoEnds,
    Rays(Vec<Ray>),
    /// Uncountably many ends (branching everywhere).
    Uncountable,
    Unknown,
}

impl TreeSource {
    pub fn finite(tree: FiniteTree) -> Self {
        TreeSource::Finite(Arc::new(tree))
    }

    pub fn lazy(shape: Shape) -> Self {
        TreeSource::Lazy(Arc::new(LazyTree { shape, ends: None }))
    }

    pub fn line() -> Self {
        Self::lazy(Shape::Complete { arity: 1 })
    }

    pub fn complete(arity: u32) -> Self {
        Self::lazy(Shape::Complete { arity })
    }

    pub fn two_rays() -> Self {
        Self::lazy(Shape::TwoRays)
    }

    pub fn spine(shape: SpineShape) -> Self {
        Self::lazy(Shape::Spine(Arc::new(shape)))
    }

    /// A generator-described tree with an explicit (complete) list of ends.
    pub fn generator(name: &str, f: ChildCountFn, ends: Option<Vec<Ray>>) -> Self {
        TreeSource::Lazy(Arc::new(LazyTree {
            shape: Shape::Generator {
                name: name.to_string(),
                f,
            },
            ends,
        }))
    }

    pub fn restricted(base: &TreeSource, rule: Restriction) -> Self {
        Self::lazy(Shape::Restricted {
            base: Arc::new(base.clone()),
            rule,
        })
    }

    pub fn as_finite(&self) -> Option<&FiniteTree> {
        match self {
            TreeSource::Finite(t) => Some(t),
            TreeSource::Lazy(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            TreeSource::Finite(_) => true,
            TreeSource::Lazy(l) => matches!(
                &l.shape,
                Shape::Restricted {
                    rule: Restriction::Nodes(_),
                    ..
                }
            ),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TreeSource::Finite(t) => format!("finite({} nodes)", t.len()),
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity: 1 } => "line".into(),
                Shape::Complete { arity } => format!("complete({arity})"),
                Shape::TwoRays => "two_rays".into(),
                Shape::Spine(_) => "spine".into(),
                Shape::Generator { name, .. } => format!("generator({name})"),
                Shape::Restricted { base, rule } => {
                    let r = match rule {
                        Restriction::Nodes(s) => format!("nodes({})", s.len()),
                        Restriction::EndRay(r) => format!("end({r})"),
                        Restriction::Skeleton => "skeleton".into(),
                    };
                    format!("{}|{r}", base.describe())
                }
            },
        }
    }

    fn spine_pos<'a>(s: &'a SpineShape, u: &NodeWord) -> SpinePos<'a> {
        let letters = u.letters();
        for (k, &c) in letters.iter().enumerate() {
            let lvl = s.level(k);
            if c == lvl.spine_child {
                continue;
            }
            if c >= lvl.arity() {
                return SpinePos::Absent;
            }
            let g = if c < lvl.spine_child { c } else { c - 1 } as usize;
            let tree = &lvl.grafts[g];
            return match tree.index_of_letters(&letters[k + 1..]) {
                Some(i) => SpinePos::Graft(tree, i),
                None => SpinePos::Absent,
            };
        }
        SpinePos::Spine(letters.len())
    }

    pub fn contains(&self, u: &NodeWord) -> bool {
        match self {
            TreeSource::Finite(t) => t.index_of(u).is_some(),
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity } => u.letters().iter().all(|&c| c < *arity),
                Shape::TwoRays => u
                    .letters()
                    .iter()
                    .enumerate()
                    .all(|(k, &c)| if k == 0 { c < 2 } else { c == 0 }),
                Shape::Spine(s) => !matches!(Self::spine_pos(s, u), SpinePos::Absent),
                Shape::Generator { f, .. } => {
                    let mut w = NodeWord::root();
                    for &c in u.letters() {
                        if c >= f(&w) {
                            return false;
                        }
                        w.push(c);
                    }
                    true
                }
                Shape::Restricted { base, rule } => {
                    base.contains(u) && Self::rule_keeps(base, rule, u)
                }
            },
        }
    }

    fn rule_keeps(base: &TreeSource, rule: &Restriction, u: &NodeWord) -> bool {
        match rule {
            Restriction::Nodes(set) => set.contains(u),
            Restriction::EndRay(ray) => match ray.divergence(u) {
                None => true,
                Some(k) => base.subtree_finite(&u.prefix(k + 1)) == Some(true),
            },
            Restriction::Skeleton => base.subtree_finite(u) == Some(false),
        }
    }

    /// Child letters of `u` (empty when `u` is absent or a leaf).
    pub fn children(&self, u: &NodeWord) -> Vec<u32> {
        match self {
            TreeSource::Finite(t) => match t.index_of(u) {
                Some(i) => (0..t.child_count(i)).collect(),
                None => Vec::new(),
            },
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Restricted { base, rule } => {
                    if !self.contains(u) {
                        return Vec::new();
                    }
                    let mut w = u.clone();
                    base.children(u)
                        .into_iter()
                        .filter(|&c| {
                            w.push(c);
                            let keep = Self::rule_keeps(base, rule, &w);
                            w.pop();
                            keep
                        })
                        .collect()
                }
                _ => (0..self.child_count(u)).collect(),
            },
        }
    }

    /// Number of children of `u` in this tree.
    pub fn child_count(&self, u: &NodeWord) -> u32 {
        match self {
            TreeSource::Finite(t) => t.index_of(u).map_or(0, |i| t.child_count(i)),
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity } => {
                    if self.contains(u) {
                        *arity
                    } else {
                        0
                    }
                }
                Shape::TwoRays => {
                    if !self.contains(u) {
                        0
                    } else if u.is_root() {
                        2
                    } else {
                        1
                    }
                }
                Shape::Spine(s) => match Self::spine_pos(s, u) {
                    SpinePos::Spine(j) => s.level(j).arity(),
                    SpinePos::Graft(t, i) => t.child_count(i),
                    SpinePos::Absent => 0,
                },
                Shape::Generator { f, .. } => {
                    if self.contains(u) {
                        f(u)
                    } else {
                        0
                    }
                }
                Shape::Restricted { .. } => self.children(u).len() as u32,
            },
        }
    }

    /// `child_count` for a node already known to lie in the tree. Skips the
    /// membership scan for the shapes that allow it.
    pub fn member_child_count(&self, u: &NodeWord) -> u32 {
        match self {
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity } => *arity,
                Shape::TwoRays => {
                    if u.is_root() {
                        2
                    } else {
                        1
                    }
                }
                Shape::Generator { f, .. } => f(u),
                _ => self.child_count(u),
            },
            TreeSource::Finite(_) => self.child_count(u),
        }
    }

    /// Whether child letters are exactly `0..child_count`.
    pub(crate) fn contiguous_children(&self) -> bool {
        !matches!(self, TreeSource::Lazy(l) if matches!(l.shape, Shape::Restricted { .. }))
    }

    /// Whether T_u is finite, when the description decides it.
    pub fn subtree_finite(&self, u: &NodeWord) -> Option<bool> {
        match self {
            TreeSource::Finite(_) => Some(true),
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity } => Some(*arity == 0),
                Shape::TwoRays => Some(false),
                Shape::Spine(s) => match Self::spine_pos(s, u) {
                    SpinePos::Spine(_) => Some(false),
                    _ => Some(true),
                },
                Shape::Generator { .. } => l
                    .ends
                    .as_ref()
                    .map(|rays| !rays.iter().any(|r| r.contains(u))),
                Shape::Restricted { base, rule } => match rule {
                    Restriction::Nodes(_) => Some(true),
                    Restriction::EndRay(r) => {
                        if r.contains(u) {
                            Some(false)
                        } else {
                            base.subtree_finite(u)
                        }
                    }
                    Restriction::Skeleton => Some(false),
                },
            },
        }
    }

    /// |T_u|, by closed form or traversal of a finite subtree.
    pub fn subtree_size(&self, u: &NodeWord) -> Option<usize> {
        match self {
            TreeSource::Finite(t) => t.index_of(u).map(|i| t.subtree_size(i)),
            TreeSource::Lazy(l) => {
                if let Shape::Spine(s) = &l.shape {
                    if let SpinePos::Graft(t, i) = Self::spine_pos(s, u) {
                        return Some(t.subtree_size(i));
                    }
                }
                if self.subtree_finite(u) != Some(true) || !self.contains(u) {
                    return None;
                }
                let mut count = 0;
                let mut stack = vec![u.clone()];
                while let Some(w) = stack.pop() {
                    count += 1;
                    for c in self.children(&w) {
                        stack.push(w.child(c));
                    }
                }
                Some(count)
            }
        }
    }

    pub fn ends(&self) -> EndInfo {
        match self {
            TreeSource::Finite(_) => EndInfo::NoEnds,
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity: 0 } => EndInfo::NoEnds,
                Shape::Complete { arity: 1 } => EndInfo::Rays(vec![Ray::line()]),
                Shape::Complete { .. } => EndInfo::Uncountable,
                Shape::TwoRays => EndInfo::Rays(vec![
                    Ray::periodic(vec![0], vec![0]).unwrap(),
                    Ray::periodic(vec![1], vec![0]).unwrap(),
                ]),
                Shape::Spine(s) => EndInfo::Rays(vec![s.ray()]),
                Shape::Generator { .. } => match &l.ends {
                    Some(r) => EndInfo::Rays(r.clone()),
                    None => EndInfo::Unknown,
                },
                Shape::Restricted { base, rule } => match rule {
                    Restriction::Nodes(_) => EndInfo::NoEnds,
                    Restriction::EndRay(r) => EndInfo::Rays(vec![r.clone()]),
                    Restriction::Skeleton => base.ends(),
                },
            },
        }
    }

    /// Whether the tree has no leaves, when known.
    pub fn leafless(&self) -> Option<bool> {
        match self {
            TreeSource::Finite(_) => Some(false),
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Complete { arity } => Some(*arity > 0),
                Shape::TwoRays => Some(true),
                Shape::Spine(s) => Some(s.levels.iter().chain(&s.tail).all(|l| l.grafts.is_empty())),
                Shape::Generator { .. } => None,
                Shape::Restricted { base, rule } => match rule {
                    Restriction::Nodes(_) => Some(false),
                    Restriction::EndRay(_) => match base.leafless() {
                        Some(true) => Some(true),
                        _ => None,
                    },
                    Restriction::Skeleton => Some(true),
                },
            },
        }
    }

    /// For restricted trees, the tree they were cut from.
    pub fn base(&self) -> Option<&TreeSource> {
        match self {
            TreeSource::Lazy(l) => match &l.shape {
                Shape::Restricted { base, .. } => Some(base),
                _ => None,
            },
            TreeSource::Finite(_) => None,
        }
    }
}

/// An infinite root-started ray: `prefix` followed by `cycle` repeated.
/// Probed rays have an empty cycle and are only known up to their prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    pub prefix: Vec<u32>,
    pub cycle: Vec<u32>,
}

impl Ray {
    pub fn periodic(prefix: Vec<u32>, cycle: Vec<u32>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidTree("ray cycle must be non-empty".into()));
        }
        Ok(Ray { prefix, cycle })
    }

    /// The ray 0, 0.0, 0.0.0, …
    pub fn line() -> Self {
        Ray {
            prefix: Vec::new(),
            cycle: vec![0],
        }
    }

    pub fn is_periodic(&self) -> bool {
        !self.cycle.is_empty()
    }

    /// Letter at position `k` (the step from depth k to k+1).
    pub fn letter(&self, k: usize) -> Option<u32> {
        if k < self.prefix.len() {
            Some(self.prefix[k])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(k - self.prefix.len()) % self.cycle.len()])
        }
    }

    /// The ray node at the given depth.
    pub fn node(&self, depth: usize) -> Option<NodeWord> {
        (0..depth)
            .map(|k| self.letter(k))
            .collect::<Option<Vec<_>>>()
            .map(NodeWord::new)
    }

    /// First position where `u` leaves the ray, or `None` if `u` lies on it.
    pub fn divergence(&self, u: &NodeWord) -> Option<usize> {
        u.letters()
            .iter()
            .enumerate()
            .find(|(k, &c)| self.letter(*k) != Some(c))
            .map(|(k, _)| k)
    }

    pub fn contains(&self, u: &NodeWord) -> bool {
        self.divergence(u).is_none()
    }

    fn common_prefix(&self, other: &Ray) -> Option<usize> {
        let bound = self.prefix.len().max(other.prefix.len())
            + self.cycle.len().max(1) * other.cycle.len().max(1)
            + 1;
        (0..bound).find(|&k| self.letter(k) != other.letter(k) || self.letter(k).is_none())
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.prefix.iter().map(|c| c.to_string()).collect();
        let c: Vec<String> = self.cycle.iter().map(|c| c.to_string()).collect();
        if c.is_empty() {
            write!(f, "{}…", p.join("."))
        } else if p.is_empty() {
            write!(f, "({})", c.join("."))
        } else {
            write!(f, "{}.({})", p.join("."), c.join("."))
        }
    }
}

/// Ends with their sources (first ray-exclusive vertex).
#[derive(Clone, Debug, PartialEq)]
pub struct EndDescription {
    pub ends: Vec<Ray>,
    pub sources: Vec<NodeWord>,
    /// True when the ends were found by probing rather than declared.
    pub probed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EndProbe {
    Described(EndDescription),
    Undetermined { probe_depth: usize, frontier: usize },
}

impl EndDescription {
    pub fn from_rays(ends: Vec<Ray>, probed: bool) -> Result<Self> {
        let mut sources = Vec::with_capacity(ends.len());
        for (i, r) in ends.iter().enumerate() {
            let mut last_common = None;
            for (j, s) in ends.iter().enumerate() {
                if i == j {
                    continue;
                }
                match r.common_prefix(s) {
                    Some(k) => last_common = Some(last_common.map_or(k, |m: usize| m.max(k))),
                    None => return Err(Error::InvalidTree(format!("duplicate end {r}"))),
                }
            }
            let depth = last_common.map_or(0, |k| k + 1);
            sources.push(
                r.node(depth)
                    .ok_or_else(|| Error::InvalidTree(format!("probed end {r} too short")))?,
            );
        }
        Ok(EndDescription {
            ends,
            sources,
            probed,
        })
    }
}

/// Ends of a tree: exact for declared structure, probed otherwise.
pub fn detect_ends(source: &TreeSource, probe_depth: usize) -> EndProbe {
    match source.ends() {
        EndInfo::NoEnds => {
            return EndProbe::Described(EndDescription {
                ends: Vec::new(),
                sources: Vec::new(),
                probed: false,
            })
        }
        EndInfo::Rays(r) => {
            if let Ok(d) = EndDescription::from_rays(r, false) {
                return EndProbe::Described(d);
            }
        }
        EndInfo::Uncountable => {
            return EndProbe::Undetermined {
                probe_depth,
                frontier: usize::MAX,
            }
        }
        EndInfo::Unknown => {}
    }
    probe_ends(source, probe_depth)
}

fn probe_ends(source: &TreeSource, probe_depth: usize) -> EndProbe {
    const CAP: usize = 1 << 20;
    let horizon = 2 * probe_depth.max(1);
    let mut budget = CAP;
    // survivors[d] = nodes at depth d with a descendant at the horizon
    let mut survivors: Vec<Vec<NodeWord>> = vec![Vec::new(); probe_depth + 1];
    fn reaches(
        s: &TreeSource,
        u: &mut NodeWord,
        horizon: usize,
        budget: &mut usize,
        survivors: &mut Vec<Vec<NodeWord>>,
    ) -> Option<bool> {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        if u.depth() == horizon {
            return Some(true);
        }
        let mut any = false;
        for c in s.children(u) {
            u.push(c);
            let r = reaches(s, u, horizon, budget, survivors);
            u.pop();
            any |= r?;
        }
        if any && u.depth() < survivors.len() {
            survivors[u.depth()].push(u.clone());
        }
        Some(any)
    }
    let mut root = NodeWord::root();
    if reaches(source, &mut root, horizon, &mut budget, &mut survivors).is_none() {
        return EndProbe::Undetermined {
            probe_depth,
            frontier: usize::MAX,
        };
    }
    let frontier = survivors[probe_depth].len();
    let before = if probe_depth > 0 {
        survivors[probe_depth - 1].len()
    } else {
        frontier
    };
    if frontier > before {
        return EndProbe::Undetermined {
            probe_depth,
            frontier,
        };
    }
    let mut nodes = survivors[probe_depth].clone();
    nodes.sort();
    let rays: Vec<Ray> = nodes
        .into_iter()
        .map(|w| Ray {
            prefix: w.letters().to_vec(),
            cycle: Vec::new(),
        })
        .collect();
    match EndDescription::from_rays(rays, true) {
        Ok(d) => EndProbe::Described(d),
        Err(_) => EndProbe::Undetermined {
            probe_depth,
            frontier,
        },
    }
}

pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// All nodes of depth ≤ `height`, breadth-first, with dense indices.
#[derive(Clone)]
pub struct Truncation {
    source: TreeSource,
    height: usize,
    nodes: Vec<NodeWord>,
    index: HashMap<NodeWord, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

pub fn truncate(source: &TreeSource, h: usize) -> Result<Truncation> {
    truncate_capped(source, h, DEFAULT_NODE_CAP)
}

pub fn truncate_capped(source: &TreeSource, h: usize, cap: usize) -> Result<Truncation> {
    let mut nodes = vec![NodeWord::root()];
    let mut parent = vec![None];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut head = 0;
    while head < nodes.len() {
        let u = nodes[head].clone();
        if u.depth() < h {
            for c in source.children(&u) {
                if nodes.len() >= cap {
                    return Err(Error::ResourceLimit {
                        what: format!("truncation at height {h}"),
                        cap,
                    });
                }
                let j = nodes.len();
                nodes.push(u.child(c));
                parent.push(Some(head));
                children.push(Vec::new());
                children[head].push(j);
            }
        }
        head += 1;
    }
    let index = nodes.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    Ok(Truncation {
        source: source.clone(),
        height: h,
        nodes,
        index,
        parent,
        children,
    })
}

impl Truncation {
    /// The whole of a finite tree.
    pub fn whole(source: &TreeSource) -> Result<Truncation> {
        match source {
            TreeSource::Finite(t) => truncate(source, t.height()),
            _ if source.is_finite() => {
                let mut h = 0;
                let mut frontier = vec![NodeWord::root()];
                while !frontier.is_empty() {
                    let next: Vec<NodeWord> = frontier
                        .iter()
                        .flat_map(|u| source.children(u).into_iter().map(move |c| u.child(c)))
                        .collect();
                    if next.is_empty() {
                        break;
                    }
                    h += 1;
                    frontier = next;
                }
                truncate(source, h)
            }
            _ => Err(Error::InvalidTree("tree is infinite".into())),
        }
    }

    pub fn source(&self) -> &TreeSource {
        &self.source
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[NodeWord] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeWord {
        &self.nodes[i]
    }

    pub fn index_of(&self, u: &NodeWord) -> Option<usize> {
        self.index.get(u).copied()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Indices of T_i within the truncation (preorder).
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            out.push(j);
            stack.extend(self.children[j].iter().rev());
        }
        out
    }

    /// True when all children of node `i` in the source are present.
    pub fn has_all_children(&self, i: usize) -> bool {
        self.nodes[i].depth() < self.height || self.source.child_count(&self.nodes[i]) == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> NodeWord {
        s.parse().unwrap()
    }

    #[test]
    fn ancestors_are_prefixes() {
        assert_eq!(NodeWord::root().ancestors(), vec![NodeWord::root()]);
        assert_eq!(
            w("0.2.1").ancestors(),
            vec![w("∅"), w("0"), w("0.2"), w("0.2.1")]
        );
        assert!(w("0.2").is_ancestor_of(&w("0.2.1")));
        assert!(!w("0.1").is_ancestor_of(&w("0.2.1")));
        assert_eq!(w("0").toward(&w("0.2.1")), w("0.2"));
    }

    #[test]
    fn word_text_round_trip() {
        for s in ["∅", "0", "3.1.4"] {
            assert_eq!(w(s).to_string(), s);
        }
        assert_eq!(w("root"), NodeWord::root());
        assert!("a.b".parse::<NodeWord>().is_err());
    }

    #[test]
    fn finite_tree_from_counts_and_words() {
        // the example tree {∅,0,1,00,01,02,021}
        let t = FiniteTree::from_words(
            ["∅", "0", "1", "0.0", "0.1", "0.2", "0.2.1", "0.2.0"].map(w),
        )
        .unwrap();
        assert_eq!(t.counts(), &[2, 3, 0, 0, 0, 2, 0, 0]);
        assert_eq!(t.word(5), w("0.2"));
        assert_eq!(t.index_of(&w("0.2.1")), Some(7));
        assert_eq!(t.subtree_size(1), 6);
        assert!(FiniteTree::from_words(["∅", "1"].map(w)).is_err());
        assert!(FiniteTree::from_bfs_counts(vec![2, 0]).is_err());
    }

    #[test]
    fn truncation_sizes() {
        assert_eq!(truncate(&TreeSource::complete(2), 2).unwrap().len(), 7);
        assert_eq!(truncate(&TreeSource::line(), 5).unwrap().len(), 6);
        let fig = TreeSource::finite(
            FiniteTree::from_words(["∅", "0", "1", "0.0", "0.1", "0.2", "0.2.1", "0.2.0"].map(w))
                .unwrap(),
        );
        let t = truncate(&fig, 1).unwrap();
        assert_eq!(t.nodes(), &[w("∅"), w("0"), w("1")]);
        assert!(truncate_capped(&TreeSource::complete(3), 10, 100).is_err());
    }

    #[test]
    fn ends_of_standard_shapes() {
        match detect_ends(&TreeSource::line(), 8) {
            EndProbe::Described(d) => {
                assert_eq!(d.ends.len(), 1);
                assert_eq!(d.sources, vec![NodeWord::root()]);
            }
            other => panic!("{other:?}"),
        }
        match detect_ends(&TreeSource::two_rays(), 8) {
            EndProbe::Described(d) => assert_eq!(d.sources, vec![w("0"), w("1")]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            detect_ends(&TreeSource::complete(2), 10),
            EndProbe::Undetermined { .. }
        ));
    }

    #[test]
    fn probing_a_generator_tree() {
        // two rays that split at depth 2, decorated by leaves
        let f: ChildCountFn = Arc::new(|u: &NodeWord| match u.depth() {
            0 => 1,
            1 => 3,
            _ if u.letters()[1] < 2 && u.letters()[2..].iter().all(|&c| c == 0) => 2,
            _ => 0,
        });
        let t = TreeSource::generator("split", f.clone(), None);
        match detect_ends(&t, 6) {
            EndProbe::Described(d) => {
                assert!(d.probed);
                assert_eq!(d.ends.len(), 2);
                assert_eq!(d.sources, vec![w("0.0"), w("0.1")]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            detect_ends(&TreeSource::generator("binary", Arc::new(|_| 2), None), 6),
            EndProbe::Undetermined { .. }
        ));
    }

    #[test]
    fn spine_tree_lookup() {
        let leaf = FiniteTree::single();
        let cherry = FiniteTree::from_bfs_counts(vec![2, 0, 0]).unwrap();
        let s = SpineShape::new(
            vec![SpineLevel {
                spine_child: 1,
                grafts: vec![cherry, leaf.clone()],
            }],
            vec![SpineLevel {
                spine_child: 0,
                grafts: vec![leaf],
            }],
        )
        .unwrap();
        let t = TreeSource::spine(s);
        assert_eq!(t.child_count(&NodeWord::root()), 3);
        assert_eq!(t.child_count(&w("0")), 2);
        assert_eq!(t.child_count(&w("2")), 0);
        assert_eq!(t.child_count(&w("1")), 2);
        assert_eq!(t.subtree_finite(&w("1.0")), Some(false));
        assert_eq!(t.subtree_finite(&w("1.1")), Some(true));
        assert_eq!(t.subtree_size(&w("0")), Some(3));
        assert!(!t.contains(&w("3")));
        let skel = TreeSource::restricted(&t, Restriction::Skeleton);
        assert_eq!(skel.children(&NodeWord::root()), vec![1]);
        assert_eq!(skel.children(&w("1")), vec![0]);
    }

    proptest! {
        #[test]
        fn truncations_are_nested_and_bfs(arity in 1u32..4, h in 0usize..5) {
            let s = TreeSource::complete(arity);
            let a = truncate(&s, h).unwrap();
            let b = truncate(&s, h + 1).unwrap();
            let filtered: Vec<NodeWord> =
                b.nodes().iter().filter(|u| u.depth() <= h).cloned().collect();
            prop_assert_eq!(a.nodes(), &filtered[..]);
            for i in 1..b.len() {
                prop_assert!(b.parent(i).unwrap() < i);
            }
        }

        #[test]
        fn ancestors_form_a_chain(letters in proptest::collection::vec(0u32..4, 0..8)) {
            let u = NodeWord::new(letters);
            let a = u.ancestors();
            prop_assert_eq!(a.len(), u.depth() + 1);
            prop_assert_eq!(a.last().unwrap(), &u);
            for pair in a.windows(2) {
                prop_assert!(pair[0].is_strict_ancestor_of(&pair[1]));
            }
        }
    }
}
