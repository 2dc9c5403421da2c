use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{biased_z_walk, bounded_tree, comb, height_chain, random_aud, transient_binary_walk};
use crate::kernel::WalkRow;
use crate::oracle::{path_sum, DenseChain, PathQuery};
use crate::scalar::{q, Q};
use crate::tree::{FiniteTree, Ray, Truncation};

fn w(s: &str) -> NodeWord {
    s.parse().unwrap()
}

fn oracle_return(k: &Kernel<Q>, i: &NodeWord, h: usize) -> Q {
    let t = Truncation::whole(k.tree()).unwrap();
    let chain = DenseChain::from_kernel(k, &t);
    let query = PathQuery {
        start: t.index_of(i).unwrap(),
        end: 0,
        max_length: None,
        forbidden: (0..t.len()).filter(|&j| t.node(j).depth() >= h).collect::<HashSet<_>>(),
        first_hit: true,
    };
    path_sum(&chain, &query, &q(1, 1)).unwrap()
}

#[test]
fn gamblers_ruin_on_the_line() {
    let k = Kernel::birth_death(q(1, 2), q(1, 2));
    for h in 2..10 {
        let p = return_before_level(&k, &w("0"), h, 1 << 10).unwrap();
        assert_eq!(p, q(h as i64 - 1, h as i64));
        assert_eq!(return_before_level_dense(&k, &w("0"), h).unwrap(), p);
    }
    assert!(return_before_level(&k, &w("0.0"), 3, 10).is_err());
    assert!(return_before_level(&k, &w("0"), 1, 10).is_err());
}

#[test]
fn elimination_matches_dense_determinants_on_jumping_kernels() {
    let k = Kernel::height_driven(TreeSource::complete(2), height_chain(q(1, 2), q(1, 3), 3), 2).unwrap();
    for h in 2..6 {
        for i in ["0", "1"] {
            assert_eq!(
                return_before_level(&k, &w(i), h, 1 << 12).unwrap(),
                return_before_level_dense(&k, &w(i), h).unwrap()
            );
        }
    }
}

#[test]
fn node_cap_is_enforced() {
    let k = transient_binary_walk::<f64>();
    assert!(matches!(
        return_before_level(&k, &w("0"), 12, 100),
        Err(Error::ResourceLimit { .. })
    ));
}

#[test]
fn down_biased_line_is_recurrent() {
    let k = Kernel::birth_death(1.0 / 3.0, 2.0 / 3.0);
    let v = classify_recurrence(&k, &RecurrenceConfig::default());
    assert_eq!(v.outcome, Outcome::Recurrent, "{v:?}");
    assert_eq!(v.certification_depth, 64);
}

#[test]
fn binary_walk_is_transient() {
    let k = transient_binary_walk::<f64>();
    let v = classify_recurrence(&k, &RecurrenceConfig::default());
    assert_eq!(v.outcome, Outcome::Transient, "{v:?}");
    assert_eq!(v.evidence.len(), 2);
    let last = v.evidence[0].values.last().unwrap().1;
    assert!(last < 0.9 && last > 0.5);
}

#[test]
fn symmetric_line_is_the_boundary_case() {
    let k = Kernel::birth_death(0.5, 0.5);
    let v = classify_recurrence(&k, &RecurrenceConfig::default());
    assert_eq!(v.outcome, Outcome::Inconclusive);
    assert!(v.reason.is_some());
}

#[test]
fn level_sums_certify_positive_recurrence() {
    let k = Kernel::birth_death(7.0 / 23.0, 9.0 / 23.0);
    let v = classify_positive_recurrence(&k, &PositiveConfig::default());
    assert_eq!(v.outcome, Outcome::PositiveRecurrent, "{v:?}");
    assert_eq!(classify_recurrence(&k, &RecurrenceConfig::default()).outcome, Outcome::Recurrent);

    let end = project_end(&transient_binary_walk::<f64>(), &Ray::line()).unwrap();
    assert_eq!(classify_positive_recurrence(&end, &PositiveConfig::default()).outcome, Outcome::PositiveRecurrent);

    let k = Kernel::height_driven(TreeSource::complete(2), height_chain(2.0 / 3.0, 1.0 / 3.0, 4), 2).unwrap();
    let v = classify_positive_recurrence(&k, &PositiveConfig::default());
    assert_eq!(v.outcome, Outcome::PositiveRecurrent, "{v:?}");
    assert!(v.certification_depth < 40);
}

#[test]
fn leaf_jump_comb_level_sums() {
    let cfg = PositiveConfig::default();
    for (p, want) in [
        (0.5, Outcome::NotPositiveRecurrent),
        (0.75, Outcome::NotPositiveRecurrent),
        (0.25, Outcome::PositiveRecurrent),
    ] {
        let k = Kernel::leaf_jump(comb(2), p, 2).unwrap();
        assert_eq!(classify_positive_recurrence(&k, &cfg).outcome, want, "p = {p}");
    }
}

#[test]
fn finite_trees_are_positive_recurrent() {
    let k = Kernel::<Q>::uniform(FiniteTree::complete(2, 3));
    let v = classify_positive_recurrence(&k, &PositiveConfig::default());
    assert_eq!(v.outcome, Outcome::PositiveRecurrent);
    assert!(!v.heuristic);
    let v = classify_by_ends(&k, &RecurrenceConfig::default(), &PositiveConfig::default()).unwrap();
    assert_eq!(v.outcome, Outcome::PositiveRecurrent);
}

#[test]
fn one_transient_end_makes_the_chain_transient() {
    let k = biased_z_walk(2.0 / 3.0);
    let v = classify_by_ends(&k, &RecurrenceConfig::default(), &PositiveConfig::default()).unwrap();
    assert_eq!(v.outcome, Outcome::Transient);
    let parts: Vec<(&str, Outcome)> = v.parts.iter().map(|(n, p)| (n.as_str(), p.outcome)).collect();
    assert_eq!(parts, vec![("0.(0)", Outcome::Transient), ("1.(0)", Outcome::PositiveRecurrent)]);
}

fn inward_z_walk(toward: f64) -> Kernel<f64> {
    Kernel::walk(
        TreeSource::two_rays(),
        "inward",
        Arc::new(move |u: &NodeWord, _| {
            if u.is_root() {
                WalkRow { up: 0.0, stay: 0.0, children: vec![0.5, 0.5] }
            } else {
                WalkRow { up: toward, stay: 0.0, children: vec![1.0 - toward] }
            }
        }),
    )
}

#[test]
fn both_ends_pulled_inwards() {
    let k = inward_z_walk(2.0 / 3.0);
    let v = classify_by_ends(&k, &RecurrenceConfig::default(), &PositiveConfig::default()).unwrap();
    assert_eq!(v.outcome, Outcome::PositiveRecurrent);
    for (_, end) in &v.parts {
        assert_eq!(end.parts[0].1.outcome, Outcome::Recurrent);
        assert_eq!(end.parts[1].1.outcome, Outcome::PositiveRecurrent);
    }
}

#[test]
fn single_end_matches_direct_classification() {
    let k = Kernel::birth_death(1.0 / 3.0, 2.0 / 3.0);
    let by_ends = classify_by_ends(&k, &RecurrenceConfig::default(), &PositiveConfig::default()).unwrap();
    let direct = classify_positive_recurrence(&k, &PositiveConfig::default());
    assert_eq!(by_ends.outcome, direct.outcome);
    assert_eq!(by_ends.parts[0].1.parts[1].1, direct);
}

#[test]
fn uncountable_ends_are_refused() {
    let k = transient_binary_walk::<f64>();
    assert_eq!(
        classify_by_ends(&k, &RecurrenceConfig::default(), &PositiveConfig::default()),
        Err(Error::InfiniteEnds)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn return_probability_is_monotone(choices in prop::collection::vec(0u32..4, 1..12), seed in any::<u64>()) {
        let tree = bounded_tree(&choices, 12);
        let k = random_aud::<Q>(&tree, seed);
        for c in k.tree().children(&NodeWord::root()) {
            let i = NodeWord::new(vec![c]);
            let mut prev = q(0, 1);
            for h in 2..7 {
                let p = return_before_level(&k, &i, h, 1 << 10).unwrap();
                prop_assert!(p >= prev && p <= q(1, 1));
                prev = p;
            }
        }
    }
}

proptest! {
    #[test]
    fn elimination_matches_path_enumeration(choices in prop::collection::vec(0u32..4, 1..12), seed in any::<u64>(), h in 2usize..6) {
        let tree = bounded_tree(&choices, 12);
        let k = random_aud::<Q>(&tree, seed);
        for c in k.tree().children(&NodeWord::root()) {
            let i = NodeWord::new(vec![c]);
            let p = return_before_level(&k, &i, h, 1 << 10).unwrap();
            prop_assert_eq!(&p, &oracle_return(&k, &i, h));
            prop_assert_eq!(p, return_before_level_dense(&k, &i, h).unwrap());
        }
    }
}
