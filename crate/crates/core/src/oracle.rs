//! Brute-force ground truth used to validate the fast routines.
//!
//! Nothing here calls into `linalg`: elimination, path sums and spanning
//! trees are re-derived naively so the cross-checks stay independent.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measure::Measure;
use crate::scalar::Scalar;
use crate::tree::{NodeWord, Truncation};

/// Longest path length accepted by the enumerators.
pub const PATH_GUARD: usize = 24;

/// Largest vertex count for the spanning-tree enumeration.
pub const SPANNING_GUARD: usize = 10;

/// A finite row-stochastic (or substochastic) matrix with optional labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseChain<T> {
    pub nodes: Vec<NodeWord>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> DenseChain<T> {
    /// Rows of the kernel projected on the truncation.
    pub fn from_kernel(kernel: &Kernel<T>, trunc: &Truncation) -> Self {
        DenseChain {
            nodes: trunc.nodes().to_vec(),
            rows: kernel.dense(trunc),
        }
    }

    /// Unlabelled chain; states are named 0, 0.0, 0.0.0, ... by index.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidKernel("matrix is not square".into()));
        }
        let nodes = (0..n).map(|i| NodeWord::new(vec![0; i])).collect();
        Ok(DenseChain { nodes, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn measure(&self, values: &[T]) -> Measure<T> {
        Measure::from_pairs(self.nodes.iter().cloned().zip(values.iter().cloned()))
    }

    fn reach(&self, from: usize, forward: bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { &self.rows[i][j] } else { &self.rows[j][i] };
                if !seen[j] && !w.is_zero() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        self.is_empty() || (self.reach(0, true).iter().all(|&b| b) && self.reach(0, false).iter().all(|&b| b))
    }
}

fn pivot_row<T: Scalar>(a: &[Vec<T>], col: usize, from: usize) -> Option<usize> {
    if T::EXACT {
        (from..a.len()).find(|&r| !a[r][col].is_zero())
    } else {
        (from..a.len())
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
    }
}

/// Determinant by plain Gaussian elimination.
pub fn gauss_det<T: Scalar>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    let mut det = T::one();
    for col in 0..n {
        let Some(p) = pivot_row(&a, col, col) else { return T::zero() };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let piv = a[col][col].clone();
        det = det * piv.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / piv.clone();
            for c in col..n {
                let x = a[col][c].clone();
                a[r][c] = a[r][c].clone() - f.clone() * x;
            }
        }
    }
    det
}

/// Solves `a x = b` by Gauss–Jordan elimination; `None` when singular.
pub fn gauss_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = a.len();
    for col in 0..n {
        let p = pivot_row(&a, col, col)?;
        if !T::EXACT && a[p][col].abs().to_f64() < 1e-300 {
            return None;
        }
        a.swap(p, col);
        b.swap(p, col);
        let piv = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / piv.clone();
            for c in col..n {
                let x = a[col][c].clone();
                a[r][c] = a[r][c].clone() - f.clone() * x;
            }
            let x = b[col].clone();
            b[r] = b[r].clone() - f * x;
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

fn without<T: Clone>(m: &[Vec<T>], r: usize) -> Vec<Vec<T>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != r)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

fn normalize<T: Scalar>(v: Vec<T>) -> Vec<T> {
    let s = v.iter().fold(T::zero(), |a, x| a + x.clone());
    v.into_iter().map(|x| x / s.clone()).collect()
}

/// π(r) ∝ det(Id − K^{(r)}), normalized to a probability.
pub fn stationary_by_determinants<T: Scalar>(chain: &DenseChain<T>) -> Result<Vec<T>> {
    if !chain.is_irreducible() {
        return Err(Error::Reducible);
    }
    let n = chain.len();
    let lap: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { T::one() } else { T::zero() };
                    id - chain.rows[i][j].clone()
                })
                .collect()
        })
        .collect();
    Ok(normalize((0..n).map(|r| gauss_det(without(&lap, r))).collect()))
}

/// π(Id − K) = 0 with π_0 = 1, normalized to a probability.
pub fn stationary_by_solve<T: Scalar>(chain: &DenseChain<T>) -> Result<Vec<T>> {
    if !chain.is_irreducible() {
        return Err(Error::Reducible);
    }
    let n = chain.len();
    // unknowns π_1..π_{n-1}; equations are columns 1..n-1 of π(Id − K) = 0
    let a: Vec<Vec<T>> = (1..n)
        .map(|j| {
            (1..n)
                .map(|i| {
                    let id = if i == j { T::one() } else { T::zero() };
                    id - chain.rows[i][j].clone()
                })
                .collect()
        })
        .collect();
    let b: Vec<T> = (1..n).map(|j| chain.rows[0][j].clone()).collect();
    let rest = gauss_solve(a, b).ok_or(Error::Reducible)?;
    let mut v = vec![T::one()];
    v.extend(rest);
    Ok(normalize(v))
}

/// Stationary distribution by both routes; they must agree.
pub fn stationary_dense<T: Scalar>(chain: &DenseChain<T>) -> Result<Vec<T>> {
    let by_det = stationary_by_determinants(chain)?;
    let by_solve = stationary_by_solve(chain)?;
    let tol = if T::EXACT { 0.0 } else { 1e-9 };
    for (i, (a, b)) in by_det.iter().zip(&by_solve).enumerate() {
        if !(a.clone() - b.clone()).within(tol) {
            return Err(Error::NotInvariant {
                node: chain.nodes[i].to_string(),
                residual: (a.clone() - b.clone()).render(),
            });
        }
    }
    Ok(by_det)
}

/// Weight of spanning trees oriented towards `r`: det(Laplacian(w)^{(r)}).
pub fn spanning_tree_weight<T: Scalar>(w: &[Vec<T>], r: usize) -> T {
    let n = w.len();
    let lap: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        (0..n)
                            .filter(|&k| k != i)
                            .fold(T::zero(), |a, k| a + w[i][k].clone())
                    } else {
                        -w[i][j].clone()
                    }
                })
                .collect()
        })
        .collect();
    gauss_det(without(&lap, r))
}

/// Σ over spanning trees towards `r` of ∏ w_{e1,e2}, by explicit search.
pub fn spanning_tree_enumeration<T: Scalar>(w: &[Vec<T>], r: usize) -> Result<T> {
    let n = w.len();
    if n > SPANNING_GUARD {
        return Err(Error::Guard(format!("{n} vertices exceed {SPANNING_GUARD}")));
    }
    let mut next = vec![usize::MAX; n];
    let order: Vec<usize> = (0..n).filter(|&i| i != r).collect();
    fn search<T: Scalar>(
        w: &[Vec<T>],
        r: usize,
        order: &[usize],
        k: usize,
        next: &mut Vec<usize>,
        weight: T,
        total: &mut T,
    ) {
        if k == order.len() {
            *total = total.clone() + weight;
            return;
        }
        let i = order[k];
        for j in 0..w.len() {
            if j == i || w[i][j].is_zero() {
                continue;
            }
            // reject a choice closing a cycle through i
            let mut cur = j;
            let mut cycle = false;
            while cur != r && next[cur] != usize::MAX {
                if cur == i {
                    cycle = true;
                    break;
                }
                cur = next[cur];
            }
            if cycle || cur == i {
                continue;
            }
            next[i] = j;
            search(w, r, order, k + 1, next, weight.clone() * w[i][j].clone(), total);
            next[i] = usize::MAX;
        }
    }
    let mut total = T::zero();
    search(w, r, &order, 0, &mut next, T::one(), &mut total);
    Ok(total)
}

/// Constraints for weighted path sums.
#[derive(Clone, Debug, Default)]
pub struct PathQuery {
    pub start: usize,
    pub end: usize,
    /// `None` sums over all lengths.
    pub max_length: Option<usize>,
    /// States a path may not enter after time 0.
    pub forbidden: HashSet<usize>,
    /// Stop at the first visit to `end` after time 0.
    pub first_hit: bool,
}

fn guard(q: &PathQuery) -> Result<usize> {
    match q.max_length {
        Some(l) if l <= PATH_GUARD => Ok(l),
        Some(l) => Err(Error::Guard(format!("path length {l} exceeds {PATH_GUARD}"))),
        None => Err(Error::Guard("unbounded length needs the resummed query".into())),
    }
}

/// Coefficients c_n = Σ_{|p|=n} W(p), n = 0..=max_length, by dynamic
/// programming over (length, state).
pub fn enumerate_paths<T: Scalar>(chain: &DenseChain<T>, q: &PathQuery) -> Result<Vec<T>> {
    let len = guard(q)?;
    let n = chain.len();
    let mut coeffs = Vec::with_capacity(len + 1);
    let mut live = vec![T::zero(); n];
    live[q.start] = T::one();
    coeffs.push(if q.start == q.end && !q.first_hit { T::one() } else { T::zero() });
    for _ in 1..=len {
        let mut next = vec![T::zero(); n];
        for (i, mass) in live.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (j, w) in chain.rows[i].iter().enumerate() {
                if w.is_zero() || q.forbidden.contains(&j) {
                    continue;
                }
                next[j] = next[j].clone() + mass.clone() * w.clone();
            }
        }
        coeffs.push(next[q.end].clone());
        if q.first_hit {
            next[q.end] = T::zero();
        }
        live = next;
    }
    Ok(coeffs)
}

/// The same coefficients by literal depth-first enumeration of paths.
pub fn enumerate_paths_dfs<T: Scalar>(chain: &DenseChain<T>, q: &PathQuery) -> Result<Vec<T>> {
    let len = guard(q)?;
    let mut coeffs = vec![T::zero(); len + 1];
    if q.start == q.end && !q.first_hit {
        coeffs[0] = T::one();
    }
    let mut stack: Vec<(usize, usize, T)> = vec![(q.start, 0, T::one())];
    while let Some((i, depth, weight)) = stack.pop() {
        if depth == len {
            continue;
        }
        for (j, w) in chain.rows[i].iter().enumerate() {
            if w.is_zero() || q.forbidden.contains(&j) {
                continue;
            }
            let pw = weight.clone() * w.clone();
            if j == q.end {
                coeffs[depth + 1] = coeffs[depth + 1].clone() + pw.clone();
                if q.first_hit {
                    continue;
                }
            }
            stack.push((j, depth + 1, pw));
        }
    }
    Ok(coeffs)
}

/// Σ_n c_n x^n.
pub fn path_sum<T: Scalar>(chain: &DenseChain<T>, q: &PathQuery, x: &T) -> Result<T> {
    match q.max_length {
        Some(_) => {
            let c = enumerate_paths(chain, q)?;
            Ok(c.iter().rev().fold(T::zero(), |a, ci| a * x.clone() + ci.clone()))
        }
        None => first_hit_all_lengths(chain, q, x),
    }
}

/// First-hit generating function summed over all lengths by a first-step
/// linear solve: f = x K_A f + x K_{·,end}.
pub fn first_hit_all_lengths<T: Scalar>(chain: &DenseChain<T>, q: &PathQuery, x: &T) -> Result<T> {
    if !q.first_hit {
        return Err(Error::Guard("all-length sums are only defined for first-hit queries".into()));
    }
    let n = chain.len();
    let free: Vec<usize> = (0..n)
        .filter(|&i| i != q.end && !q.forbidden.contains(&i))
        .collect();
    let pos: HashMap<usize, usize> = free.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let m = free.len();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut b = vec![T::zero(); m];
    for (r, &i) in free.iter().enumerate() {
        a[r][r] = T::one();
        for (&j, &c) in &pos {
            a[r][c] = a[r][c].clone() - x.clone() * chain.rows[i][j].clone();
        }
        b[r] = x.clone() * chain.rows[i][q.end].clone();
    }
    let f = gauss_solve(a, b).ok_or_else(|| Error::Guard("singular first-hit system".into()))?;
    let value = |j: usize| -> T {
        if j == q.end {
            T::one()
        } else {
            pos.get(&j).map_or_else(T::zero, |&k| f[k].clone())
        }
    };
    if q.start == q.end {
        Ok((0..n)
            .filter(|j| !q.forbidden.contains(j))
            .fold(T::zero(), |acc, j| acc + x.clone() * chain.rows[q.start][j].clone() * value(j)))
    } else if q.forbidden.contains(&q.start) {
        Ok(T::zero())
    } else {
        Ok(value(q.start))
    }
}

/// Nodes deeper than this are counted in `deep_visits` rather than
/// `occupancy`, so long transient runs stay small.
pub const OCCUPANCY_DEPTH: usize = 24;

/// Trajectory statistics of a seeded simulation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimStats {
    pub steps: u64,
    /// Visit counts per node, for nodes of depth at most `OCCUPANCY_DEPTH`.
    pub occupancy: BTreeMap<NodeWord, u64>,
    pub deep_visits: u64,
    /// Gaps between successive visits to the start node.
    pub return_times: Vec<u64>,
    pub final_node: NodeWord,
    pub max_height: usize,
    pub increment_sum: f64,
    pub increment_square_sum: f64,
}

impl SimStats {
    pub fn increment_mean(&self) -> f64 {
        self.increment_sum / self.steps as f64
    }

    pub fn increment_variance(&self) -> f64 {
        let m = self.increment_mean();
        self.increment_square_sum / self.steps as f64 - m * m
    }

    /// Standard error of the mean height increment (independent-step proxy).
    pub fn increment_standard_error(&self) -> f64 {
        (self.increment_variance() / self.steps as f64).sqrt()
    }

    fn visit(&mut self, u: &NodeWord) {
        if u.depth() <= OCCUPANCY_DEPTH {
            *self.occupancy.entry(u.clone()).or_default() += 1;
        } else {
            self.deep_visits += 1;
        }
    }

    pub fn first_return(&self) -> Option<u64> {
        self.return_times.first().copied()
    }
}

pub fn simulate<T: Scalar>(kernel: &Kernel<T>, start: &NodeWord, steps: u64, seed: u64) -> SimStats {
    simulate_until(kernel, start, steps, seed, |_| false)
}

/// Simulation that stops early once `stop` accepts the current node.
pub fn simulate_until<T: Scalar>(
    kernel: &Kernel<T>,
    start: &NodeWord,
    steps: u64,
    seed: u64,
    stop: impl Fn(&NodeWord) -> bool,
) -> SimStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SimStats {
        final_node: start.clone(),
        max_height: start.depth(),
        ..SimStats::default()
    };
    let mut cur = start.clone();
    let mut last_visit = 0u64;
    stats.visit(&cur);
    let start_depth = start.depth();
    for t in 1..=steps {
        let before = cur.depth();
        kernel.step_in_place(&mut cur, &mut rng);
        let depth = cur.depth();
        let inc = depth as f64 - before as f64;
        stats.increment_sum += inc;
        stats.increment_square_sum += inc * inc;
        stats.max_height = stats.max_height.max(depth);
        stats.visit(&cur);
        if depth == start_depth && cur == *start {
            stats.return_times.push(t - last_visit);
            last_visit = t;
        }
        stats.steps = t;
        if stop(&cur) {
            break;
        }
    }
    stats.final_node = cur;
    stats
}

/// For kernels whose rows put all mass on one node: (pre-period, period).
pub fn detect_cycle<T: Scalar>(kernel: &Kernel<T>, start: &NodeWord, max_steps: usize) -> Result<Option<(usize, usize)>> {
    let mut seen: HashMap<NodeWord, usize> = HashMap::new();
    let mut cur = start.clone();
    for t in 0..=max_steps {
        if let Some(&s) = seen.get(&cur) {
            return Ok(Some((s, t - s)));
        }
        seen.insert(cur.clone(), t);
        let support = kernel.support(&cur, cur.depth() + 64);
        let [(next, w)] = support.as_slice() else {
            return Err(Error::InvalidKernel(format!("row {cur} is not deterministic")));
        };
        if !(w.clone() - T::one()).within(1e-12) {
            return Err(Error::InvalidKernel(format!("row {cur} is not deterministic")));
        }
        cur = next.clone();
    }
    Ok(None)
}
