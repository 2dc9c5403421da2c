//! Generating functions of weighted paths: continued fractions on the line,
//! tree-indexed multicontinued fractions for Green functions, and the
//! nested-radical form of the zero-count-homogeneous binary walk.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::{Scalar, Q};
use crate::series::Series;
use crate::tree::NodeWord;

/// Values the fractions can be evaluated in: scalars or truncated series.
pub trait PathWeight: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    /// 1/(1 − self), or `None` where the fraction diverges.
    fn inv_one_minus(&self) -> Option<Self>;
}

impl<T: Scalar> PathWeight for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn one_like(&self) -> Self {
        T::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
    fn times(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
    fn inv_one_minus(&self) -> Option<Self> {
        let d = T::one() - self.clone();
        if d.is_positive_strict() && d.to_f64().is_finite() {
            Some(T::one() / d)
        } else {
            None
        }
    }
}

impl PathWeight for Series {
    fn zero_like(&self) -> Self {
        Series::zero(self.cap())
    }
    fn one_like(&self) -> Self {
        Series::constant(Q::one(), self.cap())
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inv_one_minus(&self) -> Option<Self> {
        self.one_like().sub(self).recip()
    }
}

/// What a truncated fraction puts below its last level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Tail {
    /// Cut the paths that would go deeper: the exact h-th convergent.
    #[default]
    Zero,
    /// Allow the frontier but only its empty excursion.
    One,
}

type LevelFn<A> = Arc<dyn Fn(usize) -> A + Send + Sync>;

/// Step weights of a Mötzkin path model: w_{a,a}, w_{a,a+1}, w_{a+1,a}.
#[derive(Clone)]
pub struct LineWeights<A> {
    pub stay: LevelFn<A>,
    pub up: LevelFn<A>,
    pub down: LevelFn<A>,
}

impl<A: PathWeight + Send + Sync + 'static> LineWeights<A> {
    pub fn constant(stay: A, up: A, down: A) -> Self {
        LineWeights {
            stay: Arc::new(move |_| stay.clone()),
            up: Arc::new(move |_| up.clone()),
            down: Arc::new(move |_| down.clone()),
        }
    }

    /// Dyck paths: only ±1 steps, each weighted `x`.
    pub fn dyck(x: A) -> Self {
        let zero = x.zero_like();
        LineWeights::constant(zero, x.clone(), x)
    }
}

#[derive(Clone, Debug)]
pub struct Convergent<A> {
    pub depth: usize,
    pub value: A,
    /// Values of the convergents 0..=depth.
    pub history: Vec<A>,
}

fn line_fraction<A: PathWeight>(w: &LineWeights<A>, h: usize, one: &A) -> Result<A> {
    let mut below = one.zero_like();
    for a in (0..=h).rev() {
        let bracket = (w.stay)(a).plus(&(w.up)(a).times(&(w.down)(a + 1)).times(&below));
        below = bracket.inv_one_minus().ok_or(Error::Divergence(a))?;
    }
    Ok(below)
}

/// Total weight of Mötzkin paths from 0 to 0 that stay at levels ≤ h,
/// as the h-th convergent W_0 of W_a = 1/(1 − w_{a,a} − w_{a,a+1}w_{a+1,a}W_{a+1}).
pub fn cf_convergent<A: PathWeight>(w: &LineWeights<A>, h: usize) -> Result<Convergent<A>> {
    let one = (w.stay)(0).one_like();
    let history = (0..=h)
        .map(|k| line_fraction(w, k, &one))
        .collect::<Result<Vec<_>>>()?;
    Ok(Convergent {
        depth: h,
        value: history[h].clone(),
        history,
    })
}

/// Evaluates convergents until two successive ones agree within `tol`.
pub fn cf_limit(w: &LineWeights<f64>, tol: f64, max_depth: usize) -> Result<(f64, usize)> {
    let mut prev = line_fraction(w, 0, &1.0)?;
    for h in 1..=max_depth {
        let v = line_fraction(w, h, &1.0)?;
        if (v - prev).abs() <= tol {
            return Ok((v, h));
        }
        prev = v;
    }
    Err(Error::Divergence(max_depth))
}

/// φ from the continued fraction 1 + 1/(1 + 1/(1 + ...)), written as a
/// line fraction with w_{a,a+1}w_{a+1,a} = −1, and from the radical
/// √(1 + √(1 + ...)).
pub fn golden_ratio(depth: usize) -> Result<(f64, f64)> {
    let w = LineWeights::constant(0.0, 1.0, -1.0);
    let cf = 1.0 + line_fraction(&w, depth, &1.0)?;
    let radical = (0..depth).fold(1.0f64, |r, _| (1.0 + r).sqrt());
    Ok((cf, radical))
}

#[derive(Clone, Copy, Debug)]
pub struct GreenConfig {
    /// Levels below u evaluated by the recursion; the last one is the frontier.
    pub depth: usize,
    pub tail: Tail,
    pub tol: f64,
    pub node_cap: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            depth: 20,
            tail: Tail::Zero,
            tol: 1e-9,
            node_cap: 1 << 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Green<T> {
    pub node: NodeWord,
    /// G_u(x): weight of the paths from u back to u inside T_u.
    pub value: T,
    /// H_u(x) = 1 − 1/G_u(x), the first-return generating function.
    pub first_return: T,
    /// Same quantity one level shallower.
    pub previous: T,
    pub depth: usize,
    pub converged: bool,
}

/// T_u down to `depth` levels below u, breadth-first.
fn region<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord, depth: usize, cap: usize) -> Result<Vec<NodeWord>> {
    let mut out = vec![u.clone()];
    let mut k = 0;
    while k < out.len() {
        let v = out[k].clone();
        if v.depth() < u.depth() + depth {
            for c in kernel.tree().children(&v) {
                out.push(v.child(c));
            }
        }
        if out.len() > cap {
            return Err(Error::ResourceLimit {
                what: "green truncation".into(),
                cap,
            });
        }
        k += 1;
    }
    Ok(out)
}

fn tail_value<A: PathWeight>(tail: Tail, one: &A) -> A {
    match tail {
        Tail::Zero => one.zero_like(),
        Tail::One => one.clone(),
    }
}

/// Bottom-up evaluation of the nearest-neighbour recursion
/// G_a = 1/(1 − w_{a,a} − Σ_c w_{a,c} w_{c,a} G_c).
fn walk_fraction<T: Scalar, A: PathWeight>(
    kernel: &Kernel<T>,
    u: &NodeWord,
    depth: usize,
    tail: Tail,
    cap: usize,
    step: &dyn Fn(T) -> A,
    one: &A,
) -> Result<A> {
    let nodes = region(kernel, u, depth, cap)?;
    let mut g: HashMap<NodeWord, A> = HashMap::with_capacity(nodes.len());
    for a in nodes.iter().rev() {
        let rel = a.depth() - u.depth();
        let value = if rel == depth {
            tail_value(tail, one)
        } else {
            let mut bracket = step(kernel.weight(a, a));
            for c in kernel.tree().children(a) {
                let child = a.child(c);
                let gc = &g[&child];
                let loop_weight = step(kernel.weight(a, &child)).times(&step(kernel.parent_weight(&child)));
                bracket = bracket.plus(&loop_weight.times(gc));
            }
            bracket.inv_one_minus().ok_or(Error::Divergence(rel))?
        };
        g.insert(a.clone(), value);
    }
    Ok(g.remove(u).unwrap())
}

/// Bottom-up evaluation of the excursion decomposition for jumps into the
/// subtree: W_a = 1/(1 − [w_{a,a} + Σ_{v ∈ T_a∖a} w_{a,v} ∏_{b ∈ ]a,v]} w_{b,p(b)} W_b]).
fn aud_fraction<T: Scalar, A: PathWeight>(
    kernel: &Kernel<T>,
    u: &NodeWord,
    depth: usize,
    tail: Tail,
    cap: usize,
    step: &dyn Fn(T) -> A,
    one: &A,
) -> Result<A> {
    let nodes = region(kernel, u, depth, cap)?;
    let bottom = u.depth() + depth;
    let mut w: HashMap<NodeWord, A> = HashMap::with_capacity(nodes.len());
    // climb[b] = w_{b,p(b)} W_b
    let mut climb: HashMap<NodeWord, A> = HashMap::with_capacity(nodes.len());
    for a in nodes.iter().rev() {
        let rel = a.depth() - u.depth();
        let value = if rel == depth {
            tail_value(tail, one)
        } else {
            let mut bracket = one.zero_like();
            for (v, p) in kernel.support(a, bottom) {
                if v == *a {
                    bracket = bracket.plus(&step(p));
                } else if a.is_strict_ancestor_of(&v) {
                    let mut term = step(p);
                    let mut b = v;
                    while b != *a {
                        term = term.times(&climb[&b]);
                        b = b.parent().unwrap();
                    }
                    bracket = bracket.plus(&term);
                }
            }
            bracket.inv_one_minus().ok_or(Error::Divergence(rel))?
        };
        if a != u {
            climb.insert(a.clone(), step(kernel.parent_weight(a)).times(&value));
        }
        w.insert(a.clone(), value);
    }
    Ok(w.remove(u).unwrap())
}

type Fraction<T> = fn(&Kernel<T>, &NodeWord, usize, Tail, usize, &dyn Fn(T) -> T, &T) -> Result<T>;

fn green_with<T: Scalar>(
    kernel: &Kernel<T>,
    u: &NodeWord,
    x: &T,
    cfg: &GreenConfig,
    fraction: Fraction<T>,
) -> Result<Green<T>> {
    if !kernel.tree().contains(u) {
        return Err(Error::UnknownNode(u.to_string()));
    }
    let step = |p: T| p * x.clone();
    let value = fraction(kernel, u, cfg.depth, cfg.tail, cfg.node_cap, &step, &T::one())?;
    let previous = if cfg.depth == 0 {
        value.clone()
    } else {
        fraction(kernel, u, cfg.depth - 1, cfg.tail, cfg.node_cap, &step, &T::one())?
    };
    let converged = (value.clone() - previous.clone()).within(cfg.tol);
    let first_return = T::one() - T::one() / value.clone();
    Ok(Green {
        node: u.clone(),
        value,
        first_return,
        previous,
        depth: cfg.depth,
        converged,
    })
}

/// Green function of a nearest-neighbour walk restricted to T_u.
pub fn green_rw<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord, x: &T, cfg: &GreenConfig) -> Result<Green<T>> {
    if !kernel.is_walk() {
        return Err(Error::NotRandomWalk);
    }
    green_with(kernel, u, x, cfg, walk_fraction::<T, T>)
}

/// Green function of an AUD kernel restricted to T_u.
pub fn green_aud<T: Scalar>(kernel: &Kernel<T>, u: &NodeWord, x: &T, cfg: &GreenConfig) -> Result<Green<T>> {
    green_with(kernel, u, x, cfg, aud_fraction::<T, T>)
}

/// Power series of G_u in x up to `degree`, exact in the coefficients.
pub fn green_aud_series(kernel: &Kernel<Q>, u: &NodeWord, degree: usize, cfg: &GreenConfig) -> Result<Series> {
    let step = |p: Q| Series::monomial(p, degree);
    let one = Series::constant(Q::one(), degree);
    aud_fraction(kernel, u, cfg.depth, cfg.tail, cfg.node_cap, &step, &one)
}

pub fn green_rw_series(kernel: &Kernel<Q>, u: &NodeWord, degree: usize, cfg: &GreenConfig) -> Result<Series> {
    if !kernel.is_walk() {
        return Err(Error::NotRandomWalk);
    }
    let step = |p: Q| Series::monomial(p, degree);
    let one = Series::constant(Q::one(), degree);
    walk_fraction(kernel, u, cfg.depth, cfg.tail, cfg.node_cap, &step, &one)
}

/// One level of a binary walk whose rows depend on the number of zeros:
/// weights to u0 (`r`), u1 (`l`), u (`s`) and p(u) (`p`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryLevel {
    pub s: f64,
    pub l: f64,
    pub r: f64,
    pub p: f64,
}

#[derive(Clone)]
pub struct BinaryParams {
    /// (w_{∅,∅}, w_{∅,0}, w_{∅,1})
    pub root: (f64, f64, f64),
    pub level: Arc<dyn Fn(usize) -> BinaryLevel + Send + Sync>,
}

impl BinaryParams {
    pub fn constant(root: (f64, f64, f64), level: BinaryLevel) -> Self {
        BinaryParams {
            root,
            level: Arc::new(move |_| level),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BinaryGreen {
    /// g_k for k = 0..=depth (g_depth is the tail value).
    pub g: Vec<f64>,
    pub root: f64,
    /// Same system solved by fixed-point iteration of the fraction from 0.
    pub g_iterated: Vec<f64>,
    /// max_k |g_k − 1/(1 − [s_k + α_k g_k + β_k g_{k+1}])|
    pub fraction_residual: f64,
}

/// The radical root g_k = (1 − β g' − s − √Δ)/(2α) with α = ℓ_k p_k,
/// β = r_k p_{k+1} and g' = g_{k+1}; α = 0 degenerates to the linear fraction.
pub fn radical_root(level: &BinaryLevel, p_next: f64, g_next: f64, k: usize) -> Result<f64> {
    let alpha = level.l * level.p;
    let beta = level.r * p_next;
    let b = 1.0 - beta * g_next - level.s;
    if alpha == 0.0 {
        return if b > 0.0 { Ok(1.0 / b) } else { Err(Error::Divergence(k)) };
    }
    let disc = b * b - 4.0 * alpha;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(k));
    }
    // the minus branch is the one analytic at α = 0 (the power-series value)
    Ok((b - disc.sqrt()) / (2.0 * alpha))
}

/// Solves g_k = 1/(1 − [s_k + ℓ_k p_k g_k + r_k p_{k+1} g_{k+1}]) backwards
/// from g_depth by radicals, checks it against plain iteration of the
/// fraction, and assembles G_∅.
pub fn binary_homogeneous_g(params: &BinaryParams, depth: usize, tail: Tail) -> Result<BinaryGreen> {
    let lv: Vec<BinaryLevel> = (0..=depth + 1).map(|k| (params.level)(k)).collect();
    let base = match tail {
        Tail::Zero => 0.0,
        Tail::One => 1.0,
    };
    let mut g = vec![0.0; depth + 1];
    g[depth] = base;
    for k in (0..depth).rev() {
        g[k] = radical_root(&lv[k], lv[k + 1].p, g[k + 1], k)?;
    }
    let mut it = vec![0.0; depth + 1];
    it[depth] = base;
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for k in (0..depth).rev() {
            let alpha = lv[k].l * lv[k].p;
            let beta = lv[k].r * lv[k + 1].p;
            let d = 1.0 - (lv[k].s + alpha * it[k] + beta * it[k + 1]);
            if d <= 0.0 {
                return Err(Error::Divergence(k));
            }
            let next = 1.0 / d;
            change = change.max((next - it[k]).abs());
            it[k] = next;
        }
        if change <= 1e-15 {
            break;
        }
    }
    let mut residual = 0.0f64;
    for k in 0..depth {
        let alpha = lv[k].l * lv[k].p;
        let beta = lv[k].r * lv[k + 1].p;
        let rhs = 1.0 / (1.0 - (lv[k].s + alpha * g[k] + beta * g[k + 1]));
        residual = residual.max((g[k] - rhs).abs());
    }
    let (m_stay, m0, m1) = params.root;
    let (g0, g1) = (g.first().copied().unwrap_or(base), g.get(1).copied().unwrap_or(base));
    let bracket = m_stay + m1 * lv[0].p * g0 + m0 * lv[1].p * g1;
    if bracket >= 1.0 {
        return Err(Error::Divergence(0));
    }
    Ok(BinaryGreen {
        g,
        root: 1.0 / (1.0 - bracket),
        g_iterated: it,
        fraction_residual: residual,
    })
}
