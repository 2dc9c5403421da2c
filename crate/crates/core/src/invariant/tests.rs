use num_traits::Zero;
use proptest::prelude::*;

use super::*;
use crate::fixtures::{
    biased_z_walk, bounded_tree, comb, random_aud, simple_binary_walk, star4, star4_matrix, transient_binary_walk,
};
use crate::kernel::{LevelChain, LevelRow};
use crate::oracle::{stationary_dense, DenseChain};
use crate::scalar::{q, Q};
use crate::tree::{truncate, FiniteTree, Ray};

fn w(s: &str) -> NodeWord {
    s.parse().unwrap()
}

fn one() -> Q {
    q(1, 1)
}

fn size(t: &FiniteTree, u: &NodeWord) -> i64 {
    t.subtree_size(t.index_of(u).unwrap()) as i64
}

/// Full d-ary tree: the i-th node gets d children when `flags[i]` holds
/// and the size stays within `max_nodes`.
fn full_tree(flags: &[bool], d: u32, max_nodes: usize) -> FiniteTree {
    let choices: Vec<u32> = flags.iter().map(|&f| if f { d } else { 0 }).collect();
    let mut counts = Vec::new();
    let (mut pending, mut total, mut i) = (1usize, 1usize, 0usize);
    while pending > 0 {
        let c = choices.get(i).copied().unwrap_or(0) as usize;
        let c = if total + c <= max_nodes { c } else { 0 };
        counts.push(c as u32);
        pending = pending + c - 1;
        total += c;
        i += 1;
    }
    FiniteTree::from_bfs_counts(counts).unwrap()
}

#[test]
fn star4_measure_by_determinants_and_leaf_addition() {
    let k = star4::<Q>();
    let nodes = k.tree().as_finite().unwrap().words();
    let det: Vec<Q> = nodes.iter().map(|u| h_invariant_det(&k, u, &q(20, 1)).unwrap()).collect();
    assert_eq!(det, vec![q(20, 1), q(15, 1), q(12, 1), q(30, 1)]);
    let leaf = h_invariant_leaf_addition(&k, &nodes).unwrap();
    assert_eq!(leaf.values(), vec![one(), q(3, 4), q(3, 5), q(3, 2)]);
    assert_eq!(total_mass(&k, 100).unwrap(), q(77, 20));
}

#[test]
fn uniform_and_geometric_on_a_path() {
    let path = FiniteTree::path(3);
    let k = Kernel::<Q>::uniform(path.clone());
    let m = h_invariant_leaf_addition(&k, &[w("0.0")]).unwrap();
    assert_eq!(m.values(), vec![one(), q(2, 1), q(2, 1)]);
    let k = Kernel::<Q>::geometric(path, q(1, 2)).unwrap();
    let m = h_invariant_leaf_addition(&k, &[w("0.0")]).unwrap();
    assert_eq!(m.values(), vec![one(), q(2, 3), q(2, 3)]);
    assert_eq!(h_invariant_det(&k, &w("0.0"), &one()).unwrap(), q(2, 3));
}

#[test]
fn branch_rows_sum_to_one() {
    for seed in 0..20 {
        let tree = bounded_tree(&[2, 1, 2, 0, 1, 1, 2], 12);
        let k = random_aud::<Q>(&tree, seed);
        for u in tree.words().iter().skip(1) {
            let b = branch_matrix(&k, u).unwrap();
            for row in &b.entries[..u.depth()] {
                assert_eq!(row.iter().fold(q(0, 1), |a, x| a + x.clone()), one());
            }
            let last = &b.entries[u.depth()];
            assert_eq!(last[u.depth() - 1].clone() + last[u.depth()].clone(), one());
        }
    }
}

#[test]
fn line_branch_matrix_is_the_restricted_chain() {
    let k = Kernel::birth_death(q(1, 3), q(1, 2));
    let u = w("0.0.0");
    let b = branch_matrix(&k, &u).unwrap();
    let dense = k.restricted_dense(&truncate(k.tree(), 3).unwrap());
    for i in 0..3 {
        assert_eq!(b.entries[i], dense[i]);
    }
    assert_eq!(b.entries[3], vec![q(0, 1), q(0, 1), q(1, 2), q(1, 2)]);
    assert!(branch_matrix(&k, &NodeWord::root()).is_err());
}

#[test]
fn random_walk_closed_forms() {
    let k = transient_binary_walk::<Q>();
    assert_eq!(rw_invariant(&star4::<Q>(), &w("1")).unwrap(), q(3, 5));
    for u in ["0", "1.0", "0.1.1", "1.1.1.0"] {
        let u = w(u);
        let rw = rw_invariant(&k, &u).unwrap();
        assert_eq!(rw, q(7, 9).pow_u(u.depth() as u32));
        assert_eq!(h_invariant_det(&k, &u, &one()).unwrap(), rw);
    }
    let k = simple_binary_walk::<Q>();
    assert_eq!(rw_invariant(&k, &w("1.0.1.1")).unwrap(), one());
    let leafy = Kernel::<Q>::uniform(FiniteTree::path(3));
    assert_eq!(rw_invariant(&leafy, &w("0")), Err(Error::NotRandomWalk));
}

#[test]
fn balance_residuals() {
    let k = star4::<Q>();
    let nodes = k.tree().as_finite().unwrap().words();
    let pi = h_invariant_leaf_addition(&k, &nodes).unwrap();
    for u in &nodes {
        assert_eq!(balance_residual(&k, pi.lookup(), u).unwrap(), q(0, 1));
    }
    let mut bad = pi.clone();
    bad.insert(w("1"), q(6, 5));
    assert!(balance_residual(&k, bad.lookup(), &w("1")).unwrap() > q(0, 1));
    let partial = Measure::from_pairs([(w(""), one())]);
    assert!(matches!(balance_residual(&k, partial.lookup(), &w("")), Err(Error::MissingAnnotation(_))));
}

fn z_value(u: &NodeWord) -> i64 {
    match u.letters().first() {
        None => 0,
        Some(0) => u.depth() as i64,
        Some(_) => -(u.depth() as i64),
    }
}

fn two_pow(j: i64) -> Q {
    if j >= 0 {
        q(1 << j, 1)
    } else {
        q(1, 1 << -j)
    }
}

#[test]
fn second_measure_on_the_biased_line() {
    let k = biased_z_walk(q(2, 3));
    let x = q(1, 4);
    let rho = |u: &NodeWord| Some(one() - (one() - two_pow(z_value(u))) * x.clone());
    for d in 0..=20usize {
        for first in [0u32, 1] {
            let mut letters = vec![0; d];
            if d > 0 {
                letters[0] = first;
            }
            let u = NodeWord::new(letters);
            assert_eq!(balance_residual(&k, rho, &u).unwrap(), q(0, 1), "at {u}");
        }
    }
}

#[test]
fn explicit_measures_on_the_binary_tree() {
    let k = simple_binary_walk::<Q>();
    for x in [q(1, 4), q(1, 2)] {
        let rho = |u: &NodeWord| {
            let k = u.depth() as i64;
            if k == 0 {
                return Some(one());
            }
            let shift = q((1 << k) - 1, 1 << (k - 1)) * x.clone();
            Some(if u.letters()[0] == 0 { one() + shift } else { one() - shift })
        };
        for d in 0..=20usize {
            for pattern in [0u32, 1, 2] {
                let letters: Vec<u32> = (0..d)
                    .map(|i| match pattern {
                        0 => 0,
                        1 => (i % 2) as u32,
                        _ => 1,
                    })
                    .collect();
                let u = NodeWord::new(letters);
                assert_eq!(balance_residual(&k, rho, &u).unwrap(), q(0, 1), "at {u}");
            }
        }
    }
}

#[test]
fn lambda_branch_vectors() {
    let k = transient_binary_walk::<Q>();
    for u in ["0", "1.1", "0.1.0"] {
        assert_eq!(
            lambda_eigenvector_branch(&k, &one(), &w(u)).unwrap(),
            h_invariant_det(&k, &w(u), &one()).unwrap()
        );
    }
    // the branch formula is not a λ-eigenvector once the tree branches
    let lambda = q(2, 1);
    let f = |u: &NodeWord| lambda_eigenvector_branch(&k, &lambda, u).ok();
    assert_eq!(lambda_eigenvector_branch(&k, &lambda, &w("0")).unwrap(), q(10, 3));
    assert_eq!(eigen_residual(&k, f, &lambda, &w("")).unwrap(), one());
    assert_eq!(eigen_residual(&k, f, &lambda, &w("0")).unwrap(), q(13, 3));

    let line = Kernel::birth_death(q(1, 3), q(1, 2));
    for lambda in [q(3, 2), q(-1, 5), q(1, 7)] {
        let f = |u: &NodeWord| lambda_eigenvector_branch(&line, &lambda, u).ok();
        for d in 0..=15 {
            let u = NodeWord::new(vec![0; d]);
            assert_eq!(eigen_residual(&line, f, &lambda, &u).unwrap(), q(0, 1));
        }
    }
    let leafy = Kernel::<Q>::uniform(FiniteTree::path(3));
    assert_eq!(lambda_eigenvector_branch(&leafy, &one(), &w("0")), Err(Error::LeafyTree));
}

fn proportional(v: &[Q], want: &[i64]) -> bool {
    (0..v.len()).all(|i| v[i].clone() * q(want[0], 1) == v[0].clone() * q(want[i], 1))
}

#[test]
fn finite_eigenvectors_of_star4() {
    let m = star4_matrix::<Q>();
    let r = lambda_eigenvector_finite(&m, &q(-17, 60)).unwrap();
    assert!(proportional(&r.vector, &[-19, 5, 4, 10]), "{:?}", r.vector);
    assert_eq!(r.algebraic_multiplicity, 1);
    let r = lambda_eigenvector_finite(&m, &one()).unwrap();
    assert!(proportional(&r.vector, &[20, 15, 12, 30]));
    assert_eq!(
        lambda_eigenvector_finite(&m, &q(2, 3)),
        Err(Error::NonSimpleEigenvalue {
            lambda: "2/3".into(),
            algebraic: 2,
            geometric: 2
        })
    );
    assert!(matches!(lambda_eigenvector_finite(&m, &q(1, 2)), Err(Error::NotAnEigenvalue(_))));

    let mf = star4_matrix::<f64>();
    let r = lambda_eigenvector_finite(&mf, &(-17.0 / 60.0)).unwrap();
    let scale = r.vector[1] / 5.0;
    for (x, want) in r.vector.iter().zip([-19.0, 5.0, 4.0, 10.0]) {
        assert!((x / scale - want).abs() < 1e-9);
    }
}

#[test]
fn locality_of_the_measure() {
    let tree = FiniteTree::complete(2, 2);
    let base = Kernel::<Q>::geometric(tree.clone(), q(1, 2)).unwrap();
    let t = Truncation::whole(base.tree()).unwrap();
    let mut rows = base.dense(&t);
    let j = tree.index_of(&w("1.0")).unwrap();
    let p = tree.index_of(&w("1")).unwrap();
    rows[j][p] = q(1, 5);
    rows[j][j] = q(4, 5);
    let mutated = Kernel::explicit(tree, rows).unwrap();
    for u in ["0", "0.1", "1"] {
        assert_eq!(
            h_invariant_det(&base, &w(u), &one()).unwrap(),
            h_invariant_det(&mutated, &w(u), &one()).unwrap()
        );
    }
    assert_ne!(
        h_invariant_det(&base, &w("1.0"), &one()).unwrap(),
        h_invariant_det(&mutated, &w("1.0"), &one()).unwrap()
    );
}

#[test]
fn level_sums_of_the_binary_walk() {
    let k = transient_binary_walk::<Q>();
    let sums = level_sums(&k, 6, 1 << 10).unwrap();
    for (i, s) in sums.iter().enumerate() {
        assert_eq!(*s, q(14, 9).pow_u(i as u32));
    }
    assert!(matches!(level_sums(&k, 12, 100), Err(Error::ResourceLimit { .. })));
    assert!(total_mass(&k, 100).is_err());
}

#[test]
fn parallel_determinants_match_leaf_addition() {
    let tree = bounded_tree(&[3, 2, 0, 1, 2, 1, 0, 1], 14);
    let k = random_aud::<Q>(&tree, 99);
    let t = Truncation::whole(k.tree()).unwrap();
    let det = h_invariant_det_all(&k, &t, &one(), 3).unwrap();
    let leaf = h_invariant_leaf_addition(&k, t.nodes()).unwrap();
    assert_eq!(det, leaf);
}

#[test]
fn eigenspace_dimensions() {
    use crate::tree::TreeSource;
    assert_eq!(eigenspace_dimension(&TreeSource::line()).unwrap(), Dimension::Finite(1));
    assert_eq!(eigenspace_dimension(&TreeSource::two_rays()).unwrap(), Dimension::Finite(2));
    assert_eq!(eigenspace_dimension(&TreeSource::complete(2)).unwrap(), Dimension::Infinite);
    assert_eq!(eigenspace_dimension(&comb(3)).unwrap(), Dimension::Finite(1));
    assert_eq!(
        eigenspace_dimension(&TreeSource::finite(FiniteTree::path(4))).unwrap(),
        Dimension::Finite(1)
    );
    let rays = vec![
        Ray::periodic(vec![0], vec![0]).unwrap(),
        Ray::periodic(vec![1, 0], vec![0]).unwrap(),
        Ray::periodic(vec![1, 1], vec![0]).unwrap(),
    ];
    let g = TreeSource::generator(
        "three",
        std::sync::Arc::new(|u: &NodeWord| match u.depth() {
            0 => 2,
            1 if u.letters()[0] == 1 => 2,
            _ => 1,
        }),
        Some(rays),
    );
    assert_eq!(eigenspace_dimension(&g).unwrap(), Dimension::Finite(3));
    let bare = TreeSource::generator("bare", std::sync::Arc::new(|_: &NodeWord| 2), None);
    assert!(eigenspace_dimension(&bare).is_err());
}

/// Stochastic matrices with eigenvalues 1, c·d_1, …, c·d_{n−1}: a lower
/// triangular stochastic L with diagonal d mixed with a positive row w.
fn spectral_matrix(diag: &[i64], fill: &[i64], weights: &[i64], c: i64) -> Vec<Vec<Q>> {
    let n = diag.len() + 1;
    let mut l = vec![vec![q(0, 1); n]; n];
    l[0][0] = one();
    let mut f = fill.iter().cycle();
    for i in 1..n {
        let d = q(diag[i - 1], 10);
        let raw: Vec<i64> = (0..i).map(|_| *f.next().unwrap()).collect();
        let total: i64 = raw.iter().sum();
        for j in 0..i {
            l[i][j] = (one() - d.clone()) * q(raw[j], total);
        }
        l[i][i] = d;
    }
    let wt: i64 = weights[..n].iter().sum();
    let c = q(c, 10);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| c.clone() * l[i][j].clone() + (one() - c.clone()) * q(weights[j], wt))
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn nonunit_eigenvectors_sum_to_zero(
        diag in prop::sample::subsequence((0i64..10).collect::<Vec<_>>(), 1..5).prop_shuffle(),
        fill in prop::collection::vec(1i64..5, 4),
        weights in prop::collection::vec(1i64..5, 6),
        c in 1i64..10,
        pick in 0usize..4,
    ) {
        let m = spectral_matrix(&diag, &fill, &weights, c);
        let lambda = q(c, 10) * q(diag[pick % diag.len()], 10);
        let r = lambda_eigenvector_finite(&m, &lambda).unwrap();
        prop_assert_eq!(r.residual, 0.0);
        prop_assert!(r.vector.iter().any(|x| !x.is_zero()));
        let s = r.vector.iter().fold(q(0, 1), |a, x| a + x.clone());
        prop_assert_eq!(s, q(0, 1));
    }
}

proptest! {
    #[test]
    fn three_routes_agree(choices in prop::collection::vec(0u32..4, 1..12), seed in any::<u64>()) {
        let tree = bounded_tree(&choices, 12);
        let k = random_aud::<Q>(&tree, seed);
        let t = Truncation::whole(k.tree()).unwrap();
        let leaf = h_invariant_leaf_addition(&k, t.nodes()).unwrap();
        let oracle = stationary_dense(&DenseChain::from_kernel(&k, &t)).unwrap();
        let oracle = DenseChain::from_kernel(&k, &t).measure(&oracle).normalized_root();
        prop_assert_eq!(&leaf, &oracle);
        for u in t.nodes() {
            let d = h_invariant_det(&k, u, &one()).unwrap();
            prop_assert!(d > q(0, 1));
            prop_assert_eq!(&d, leaf.get(u).unwrap());
            prop_assert_eq!(h_invariant_det(&k, u, &q(3, 1)).unwrap(), d * q(3, 1));
        }
    }

    #[test]
    fn uniform_closed_form(choices in prop::collection::vec(0u32..4, 1..30)) {
        let tree = bounded_tree(&choices, 30);
        let k = Kernel::<Q>::uniform(tree.clone());
        let words = tree.words();
        let m = h_invariant_leaf_addition(&k, &words).unwrap();
        let all = size(&tree, &NodeWord::root());
        for u in words.iter().skip(1) {
            let inner = u.ancestors()[1..u.depth()].iter().fold(one(), |a, v| a * q(1 + size(&tree, v), 1));
            let su = size(&tree, u);
            prop_assert_eq!(m.get(u).unwrap().clone(), q(su + 1, all) * inner * q(su, 1));
        }
    }

    #[test]
    fn geometric_closed_form(choices in prop::collection::vec(0u32..4, 1..30), p in 1i64..10) {
        let tree = bounded_tree(&choices, 30);
        let p = q(p, 10);
        let k = Kernel::<Q>::geometric(tree.clone(), p.clone()).unwrap();
        let words = tree.words();
        let m = h_invariant_leaf_addition(&k, &words).unwrap();
        let all = size(&tree, &NodeWord::root());
        for u in words.iter().skip(1) {
            let want = q(size(&tree, u), all) * p.clone() / (one() - p.clone()).pow_u(u.depth() as u32);
            prop_assert_eq!(m.get(u).unwrap().clone(), want);
        }
    }

    #[test]
    fn leaf_jump_closed_form(flags in prop::collection::vec(any::<bool>(), 1..20), d in 2u32..4, p in 1i64..10) {
        let tree = full_tree(&flags, d, 40);
        let p = q(p, 10);
        let k = Kernel::<Q>::leaf_jump(TreeSource::finite(tree.clone()), p.clone(), d).unwrap();
        let words = tree.words();
        let m = h_invariant_leaf_addition(&k, &words).unwrap();
        for u in words.iter().skip(1) {
            let h = u.depth() as u32;
            let want = p.clone() / (q(d as i64, 1) * (one() - p.clone())).pow_u(h);
            prop_assert_eq!(m.get(u).unwrap().clone(), want.clone());
            prop_assert_eq!(h_invariant_det(&k, u, &one()).unwrap(), want);
        }
    }

    #[test]
    fn height_driven_closed_form(raw in prop::collection::vec(0i64..4, 20), d in 2u32..4, height in 1usize..4) {
        let height = if d == 3 { height.min(3) } else { height };
        let mut vals = raw.iter().cycle();
        let rows: Vec<LevelRow<Q>> = (0..=height)
            .map(|h| {
                let down = if h == 0 { 0 } else { 1 + vals.next().unwrap() };
                let jumps: Vec<i64> = (h..=height)
                    .map(|j| if j == h + 1 { 1 + vals.next().unwrap() } else { *vals.next().unwrap() })
                    .collect();
                let total = down + jumps.iter().sum::<i64>();
                LevelRow {
                    down: q(down, total),
                    jumps: jumps.into_iter().map(|x| q(x, total)).collect(),
                }
            })
            .collect();
        let dense: Vec<Vec<Q>> = (0..=height)
            .map(|h| (0..=height).map(|j| LevelChain { rows: rows.clone(), tail: None }.weight(h, j)).collect())
            .collect();
        let chain = LevelChain { rows, tail: None };
        let tree = FiniteTree::complete(d, height);
        let k = Kernel::height_driven(TreeSource::finite(tree.clone()), chain, d).unwrap();
        let levels = stationary_dense(&DenseChain::from_rows(dense).unwrap()).unwrap();
        let words = tree.words();
        let m = h_invariant_leaf_addition(&k, &words).unwrap();
        for u in &words {
            let h = u.depth();
            let want = levels[h].clone() / levels[0].clone() / q(d as i64, 1).pow_u(h as u32);
            prop_assert_eq!(m.get(u).unwrap().clone(), want);
        }
    }
}

