//! Named kernels used by the examples, the CLI and the test suites.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{Kernel, LevelChain, LevelRow, WalkRow};
use crate::scalar::Scalar;
use crate::tree::{FiniteTree, NodeWord, SpineLevel, SpineShape, TreeSource};

fn r<T: Scalar>(n: i64, d: i64) -> T {
    T::from_ratio(n, d)
}

/// The root with three children.
pub fn star4_tree() -> FiniteTree {
    FiniteTree::from_bfs_counts(vec![3, 0, 0, 0]).unwrap()
}

/// A 4-state AUD matrix on [`star4_tree`] with stationary vector
/// (20, 15, 12, 30)/77 and eigenvalues 1, −17/60, 2/3, 2/3.
pub fn star4_matrix<T: Scalar>() -> Vec<Vec<T>> {
    vec![
        vec![r(1, 20), r(1, 4), r(1, 5), r(1, 2)],
        vec![r(1, 3), r(2, 3), r(0, 1), r(0, 1)],
        vec![r(1, 3), r(0, 1), r(2, 3), r(0, 1)],
        vec![r(1, 3), r(0, 1), r(0, 1), r(2, 3)],
    ]
}

pub fn star4<T: Scalar>() -> Kernel<T> {
    Kernel::explicit(star4_tree(), star4_matrix()).unwrap().with_name("star4")
}

/// Walk on ℤ rooted at 0 (letter 0 is the positive ray, letter 1 the
/// negative one) stepping +1 with `plus` and −1 otherwise.
pub fn biased_z_walk<T: Scalar>(plus: T) -> Kernel<T> {
    let minus = T::one() - plus.clone();
    let name = format!("z_walk(plus={})", plus.render());
    Kernel::walk(
        TreeSource::two_rays(),
        &name,
        Arc::new(move |u: &NodeWord, _| {
            if u.is_root() {
                return WalkRow {
                    up: T::zero(),
                    stay: T::zero(),
                    children: vec![plus.clone(), minus.clone()],
                };
            }
            // towards 0 is −1 on the positive ray and +1 on the negative one
            let (up, away) = if u.letters()[0] == 0 {
                (minus.clone(), plus.clone())
            } else {
                (plus.clone(), minus.clone())
            };
            WalkRow {
                up,
                stay: T::zero(),
                children: vec![away],
            }
        }),
    )
}

/// Walk on the complete binary tree: up 9/23, each child 7/23.
pub fn transient_binary_walk<T: Scalar>() -> Kernel<T> {
    Kernel::homogeneous_walk(TreeSource::complete(2), r(9, 23), r(7, 23))
}

/// Simple walk on the binary tree (each neighbour 1/3, root stays 1/3).
pub fn simple_binary_walk<T: Scalar>() -> Kernel<T> {
    Kernel::homogeneous_walk(TreeSource::complete(2), r(1, 3), r(1, 3))
}

/// A spine where every spine node also carries `arity − 1` leaves.
pub fn comb(arity: u32) -> TreeSource {
    let level = SpineLevel {
        spine_child: 0,
        grafts: vec![FiniteTree::single(); arity.saturating_sub(1) as usize],
    };
    TreeSource::spine(SpineShape::new(Vec::new(), vec![level]).unwrap())
}

/// Birth-death chain on heights with geometric up-jumps: down `down`,
/// otherwise jump m ≥ 0 levels with weight (1−down)·(1−q)·q^m truncated at
/// `range` (the last jump absorbs the remainder).
pub fn height_chain<T: Scalar>(down: T, q: T, range: usize) -> LevelChain<T> {
    let row = |down: T| {
        let rest = T::one() - down.clone();
        let mut jumps = Vec::new();
        let mut left = rest.clone();
        for m in 0..range {
            let w = rest.clone() * (T::one() - q.clone()) * q.pow_u(m as u32);
            jumps.push(w.clone());
            left = left - w;
        }
        jumps.push(left);
        LevelRow { down, jumps }
    };
    LevelChain {
        rows: vec![row(T::zero())],
        tail: Some(row(down.clone())),
    }
}

/// Breadth-first tree whose i-th node takes `choices[i]` children (0 once
/// the choices run out) until `max_nodes` is reached.
pub fn bounded_tree(choices: &[u32], max_nodes: usize) -> FiniteTree {
    let mut counts = Vec::new();
    let mut pending = 1usize;
    let mut total = 1usize;
    let mut i = 0;
    while pending > 0 {
        let want = choices.get(i).copied().unwrap_or(0) as usize;
        let c = want.min(max_nodes.saturating_sub(total));
        counts.push(c as u32);
        pending += c;
        pending -= 1;
        total += c;
        i += 1;
    }
    FiniteTree::from_bfs_counts(counts).unwrap()
}

/// Random irreducible AUD rows with small integer weights: every non-root
/// node moves up and every child is entered from its parent.
pub fn random_aud<T: Scalar>(tree: &FiniteTree, seed: u64) -> Kernel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tree.len();
    let mut rows = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        let mut raw = vec![0i64; n];
        if let Some(p) = tree.parent_index(i) {
            raw[p] = rng.gen_range(1..=4);
        }
        for &j in tree.subtree(i) {
            raw[j] = if tree.parent_index(j) == Some(i) {
                rng.gen_range(1..=4)
            } else if j == i {
                rng.gen_range(0..=3)
            } else {
                rng.gen_range(0..=2)
            };
        }
        if raw.iter().all(|&x| x == 0) {
            raw[i] = 1;
        }
        let total: i64 = raw.iter().sum();
        for j in 0..n {
            rows[i][j] = T::from_ratio(raw[j], total);
        }
    }
    Kernel::explicit(tree.clone(), rows).unwrap().with_name("random")
}
