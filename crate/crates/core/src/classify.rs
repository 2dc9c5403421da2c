//! Recurrence and positive recurrence of AUD kernels.
//!
//! Verdicts are numerical heuristics: the defining limits are only probed
//! on finite truncations. Every verdict carries its evidence table and the
//! depth it was certified to; `Inconclusive` always says why.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant::level_sums;
use crate::kernel::{project_end, Kernel};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tree::{EndInfo, NodeWord, TreeSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Recurrent,
    Transient,
    PositiveRecurrent,
    NotPositiveRecurrent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub label: String,
    /// (depth, value) pairs.
    pub values: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub heuristic: bool,
    pub evidence: Vec<Evidence>,
    pub certification_depth: usize,
    pub tolerance: f64,
    pub reason: Option<String>,
    /// Per-end verdicts for [`classify_by_ends`].
    pub parts: Vec<(String, Verdict)>,
}

impl Verdict {
    pub(crate) fn new(outcome: Outcome, evidence: Vec<Evidence>, depth: usize, tolerance: f64) -> Self {
        Verdict {
            outcome,
            heuristic: true,
            evidence,
            certification_depth: depth,
            tolerance,
            reason: None,
            parts: Vec::new(),
        }
    }

    pub(crate) fn because(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecurrenceConfig {
    pub eps: f64,
    pub h_max: usize,
    /// Largest truncated subtree T_{i,<h} to eliminate.
    pub node_cap: usize,
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        RecurrenceConfig {
            eps: 1e-9,
            h_max: 64,
            node_cap: 1 << 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositiveConfig {
    pub depth: usize,
    pub window: usize,
    pub node_cap: usize,
}

impl Default for PositiveConfig {
    fn default() -> Self {
        PositiveConfig {
            depth: 40,
            window: 8,
            node_cap: 1 << 20,
        }
    }
}

/// P(τ_∅ < τ_{T≥h} | X_0 = i) for a child i of the root:
/// U_{i,∅}·det(Id − A^{(i)})/det(Id − A) with A the defective restriction
/// of U to T_{i,<h}.
///
/// Nodes are eliminated depth-first from the leaves up. Eliminating v only
/// touches the column of p(v) on the rows of its ancestors, so the work is
/// O(|T_{i,<h}|·h) and only the current branch is stored.
pub fn return_before_level<T: Scalar>(kernel: &Kernel<T>, i: &NodeWord, h: usize, node_cap: usize) -> Result<T> {
    if i.depth() != 1 {
        return Err(Error::InvalidTree(format!("{i} is not a child of the root")));
    }
    if !kernel.tree().contains(i) {
        return Err(Error::UnknownNode(i.to_string()));
    }
    if h < 2 {
        return Err(Error::InvalidTree("levels start at h = 2".into()));
    }
    let tree = kernel.tree();
    let range = kernel.jump_range();
    // column of M = Id − A restricted to the ancestors of v inside the
    // region (index k ↔ depth k+1), then the diagonal
    let enter = |v: &NodeWord| -> Vec<T> {
        let d = v.depth();
        let mut col = Vec::with_capacity(d);
        for a in 1..d {
            let far = range.is_some_and(|r| d - a > r);
            col.push(if far {
                T::zero()
            } else {
                -kernel.point_weight(&v.prefix(a), v)
            });
        }
        col.push(T::one() - kernel.point_weight(v, v));
        col
    };
    let mut visited = 1usize;
    let mut word = i.clone();
    let mut stack: Vec<(Vec<u32>, usize, Vec<T>)> = vec![(Vec::new(), 0, enter(&word))];
    if word.depth() + 1 < h {
        stack[0].0 = tree.children(&word);
    }
    loop {
        let top = stack.last_mut().unwrap();
        if top.1 < top.0.len() {
            let c = top.0[top.1];
            top.1 += 1;
            word.push(c);
            visited += 1;
            if visited > node_cap {
                return Err(Error::ResourceLimit {
                    what: format!("T_{{{i},<{h}}}"),
                    cap: node_cap,
                });
            }
            let children = if word.depth() + 1 < h {
                tree.children(&word)
            } else {
                Vec::new()
            };
            stack.push((children, 0, enter(&word)));
            continue;
        }
        let (_, _, col) = stack.pop().unwrap();
        let Some(parent) = stack.last_mut() else {
            let pivot = col.last().unwrap().clone();
            return Ok(kernel.parent_weight(i) / pivot);
        };
        // eliminate word: rows r ⊂ ancestors, column p(word)
        let pivot = col.last().unwrap().clone();
        let up = -kernel.parent_weight(&word);
        if !up.is_zero() {
            let f = up / pivot;
            let pcol = &mut parent.2;
            for (k, x) in col[..col.len() - 1].iter().enumerate() {
                if !x.is_zero() {
                    pcol[k] = pcol[k].clone() - x.clone() * f.clone();
                }
            }
        }
        word.pop();
    }
}

/// The same probability from dense determinants, for cross-checks.
pub fn return_before_level_dense<T: Scalar>(kernel: &Kernel<T>, i: &NodeWord, h: usize) -> Result<T> {
    let region = region_below(kernel.tree(), i, h)?;
    let n = region.len();
    let mut m = vec![vec![T::zero(); n]; n];
    for (r, a) in region.iter().enumerate() {
        for (c, b) in region.iter().enumerate() {
            let id = if r == c { T::one() } else { T::zero() };
            m[r][c] = id - kernel.weight(a, b);
        }
    }
    let den = linalg::det(&m);
    let num = linalg::det(&linalg::minor(&m, 0));
    Ok(kernel.parent_weight(i) * num / den)
}

/// Nodes of T_{i,<h} (depth < h), breadth-first with i first.
fn region_below(source: &TreeSource, i: &NodeWord, h: usize) -> Result<Vec<NodeWord>> {
    let mut out = vec![i.clone()];
    let mut k = 0;
    while k < out.len() {
        let v = out[k].clone();
        if v.depth() + 1 < h {
            for c in source.children(&v) {
                out.push(v.child(c));
            }
        }
        k += 1;
        if out.len() > 1 << 12 {
            return Err(Error::ResourceLimit {
                what: "dense region".into(),
                cap: 1 << 12,
            });
        }
    }
    Ok(out)
}

/// Geometric fit of the last increments: (limit, remaining tail). A plateau
/// has tail 0; increments that are not geometric with ratio < 0.999 give None.
fn extrapolate(values: &[(usize, f64)]) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let p = values[n - 1].1;
    let d2 = p - values[n - 2].1;
    let d1 = values[n - 2].1 - values[n - 3].1;
    if d2.abs() <= 1e-14 && d1.abs() <= 1e-14 {
        return Some((p, 0.0));
    }
    if d1 <= 0.0 || d2 < 0.0 || n < 4 {
        return None;
    }
    let d0 = values[n - 3].1 - values[n - 4].1;
    if d0 <= 0.0 {
        return None;
    }
    let (r1, r2) = (d1 / d0, d2 / d1);
    if r2 < 0.999 && (r2 - r1).abs() <= 0.05 * r2 + 1e-12 {
        let tail = d2 * r2 / (1.0 - r2);
        Some((p + tail, tail))
    } else {
        None
    }
}

/// Evaluates [`return_before_level`] for each child of the root and h = 2..=h_max.
pub fn classify_recurrence<T: Scalar>(kernel: &Kernel<T>, cfg: &RecurrenceConfig) -> Verdict {
    let root = NodeWord::root();
    let children = kernel.tree().children(&root);
    if children.is_empty() {
        return Verdict::new(Outcome::Recurrent, Vec::new(), 0, cfg.eps).because("single-node tree");
    }
    let mut evidence = Vec::new();
    let mut depth = cfg.h_max;
    for c in &children {
        let i = root.child(*c);
        let mut values = Vec::new();
        for h in 2..=cfg.h_max {
            match return_before_level(kernel, &i, h, cfg.node_cap) {
                Ok(p) => values.push((h, p.to_f64())),
                Err(_) => break,
            }
        }
        depth = depth.min(values.last().map_or(1, |v| v.0));
        evidence.push(Evidence {
            label: format!("P(return to ∅ before level h | start {i})"),
            values,
        });
    }
    if depth < 2 {
        return Verdict::new(Outcome::Inconclusive, evidence, depth, cfg.eps)
            .because("no truncation fits the node cap");
    }
    let mut all_recurrent = true;
    for ev in &evidence {
        let last = ev.values.last().unwrap().1;
        let fit = extrapolate(&ev.values);
        if let Some((limit, tail)) = fit {
            // the fitted tail is inflated tenfold before comparing with 1
            if last < 1.0 - 10.0 * cfg.eps && limit + 10.0 * tail < 1.0 - 10.0 * cfg.eps {
                let reason = format!("{}: settles at {limit:.6} with tail {tail:.1e}", ev.label);
                return Verdict::new(Outcome::Transient, evidence, depth, cfg.eps).because(reason);
            }
        }
        let reaches_one = last >= 1.0 - cfg.eps || fit.is_some_and(|(limit, _)| limit >= 1.0 - cfg.eps);
        if !(reaches_one && fit.is_some()) {
            all_recurrent = false;
        }
    }
    if all_recurrent {
        return Verdict::new(Outcome::Recurrent, evidence, depth, cfg.eps);
    }
    Verdict::new(Outcome::Inconclusive, evidence, depth, cfg.eps)
        .because("return probabilities neither approach 1 geometrically nor settle below it")
}

fn affordable_depth<T: Scalar>(kernel: &Kernel<T>, depth: usize, cap: usize) -> usize {
    let mut frontier = vec![NodeWord::root()];
    let mut total = 1usize;
    for d in 0..depth {
        let mut next = Vec::new();
        for u in &frontier {
            for c in kernel.tree().children(u) {
                next.push(u.child(c));
            }
        }
        total += next.len();
        if total > cap {
            return d;
        }
        if next.is_empty() {
            return depth;
        }
        frontier = next;
    }
    depth
}

/// Level sums S_k = Σ_{|u|=k} π(u) by leaf addition; geometric decay
/// certifies Σπ < ∞.
pub fn classify_positive_recurrence<T: Scalar>(kernel: &Kernel<T>, cfg: &PositiveConfig) -> Verdict {
    let depth = affordable_depth(kernel, cfg.depth, cfg.node_cap);
    let sums = match level_sums(kernel, depth, cfg.node_cap) {
        Ok(s) => s,
        Err(e) => {
            return Verdict::new(Outcome::Inconclusive, Vec::new(), 0, 0.0).because(e.to_string());
        }
    };
    let values: Vec<(usize, f64)> = sums.iter().enumerate().map(|(k, s)| (k, s.to_f64())).collect();
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut evidence = vec![Evidence {
        label: "S_k = Σ_{|u|=k} π(u)".into(),
        values: values.clone(),
    }];
    if let Some(last) = sums.iter().rposition(|s| !s.is_zero()) {
        if last < depth && kernel.tree().is_finite() {
            let mut v = Verdict::new(Outcome::PositiveRecurrent, evidence, depth, 0.0)
                .because(format!("finite tree, Σπ = {total}"));
            v.heuristic = false;
            return v;
        }
    }
    if depth < cfg.window + 2 {
        return Verdict::new(Outcome::Inconclusive, evidence, depth, 0.0)
            .because(format!("only {depth} levels fit the node cap"));
    }
    let tail = &values[depth - cfg.window..];
    let ratios: Vec<(usize, f64)> = tail
        .windows(2)
        .map(|p| (p[1].0, if p[0].1 > 0.0 { p[1].1 / p[0].1 } else { f64::INFINITY }))
        .collect();
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let min_ratio = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    evidence.push(Evidence {
        label: "S_{k+1}/S_k".into(),
        values: ratios,
    });
    if max_ratio < 0.999 {
        let bound = values[depth].1 * max_ratio / (1.0 - max_ratio);
        return Verdict::new(Outcome::PositiveRecurrent, evidence, depth, max_ratio).because(format!(
            "ratio ≤ {max_ratio:.6} over the last {} levels; Σπ ≈ {total:.6} (tail ≤ {bound:.3e})",
            cfg.window
        ));
    }
    if min_ratio >= 1.0 - 1e-12 {
        return Verdict::new(Outcome::NotPositiveRecurrent, evidence, depth, min_ratio)
            .because(format!("level sums do not decrease over the last {} levels", cfg.window));
    }
    Verdict::new(Outcome::Inconclusive, evidence, depth, max_ratio)
        .because("level sums decay too slowly to certify either way")
}

fn end_outcome(rec: &Verdict, pos: &Verdict) -> Outcome {
    match (rec.outcome, pos.outcome) {
        (Outcome::Transient, _) => Outcome::Transient,
        (_, Outcome::PositiveRecurrent) => Outcome::PositiveRecurrent,
        (Outcome::Recurrent, _) => Outcome::Recurrent,
        _ => Outcome::Inconclusive,
    }
}

/// Classification through the projections onto each end.
pub fn classify_by_ends<T: Scalar>(
    kernel: &Kernel<T>,
    rec: &RecurrenceConfig,
    pos: &PositiveConfig,
) -> Result<Verdict> {
    let rays = match kernel.tree().ends() {
        EndInfo::NoEnds => {
            let mut v = classify_positive_recurrence(kernel, pos);
            v.reason = Some("finite tree".into());
            return Ok(v);
        }
        EndInfo::Uncountable => return Err(Error::InfiniteEnds),
        EndInfo::Unknown => return Err(Error::MissingAnnotation("end structure".into())),
        EndInfo::Rays(r) => r,
    };
    let mut parts = Vec::new();
    for ray in &rays {
        let projected = project_end(kernel, ray)?;
        let r = classify_recurrence(&projected, rec);
        let p = classify_positive_recurrence(&projected, pos);
        let outcome = end_outcome(&r, &p);
        let depth = r.certification_depth.min(p.certification_depth);
        let mut v = Verdict::new(outcome, Vec::new(), depth, rec.eps);
        v.reason = match outcome {
            Outcome::Transient | Outcome::Inconclusive => r.reason.clone(),
            _ => p.reason.clone(),
        };
        v.parts = vec![("recurrence".into(), r), ("positive recurrence".into(), p)];
        parts.push((ray.to_string(), v));
    }
    let outcomes: Vec<Outcome> = parts.iter().map(|p| p.1.outcome).collect();
    let outcome = if outcomes.contains(&Outcome::Transient) {
        Outcome::Transient
    } else if outcomes.iter().all(|o| *o == Outcome::PositiveRecurrent) {
        Outcome::PositiveRecurrent
    } else if outcomes
        .iter()
        .all(|o| matches!(o, Outcome::Recurrent | Outcome::PositiveRecurrent))
    {
        Outcome::Recurrent
    } else {
        Outcome::Inconclusive
    };
    let depth = parts.iter().map(|p| p.1.certification_depth).min().unwrap_or(0);
    let mut v = Verdict::new(outcome, Vec::new(), depth, rec.eps);
    v.reason = Some(format!("combined over {} ends", parts.len()));
    v.parts = parts;
    Ok(v)
}

#[cfg(test)]
mod tests;
