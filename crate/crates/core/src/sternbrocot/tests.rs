use num_traits::Zero;
use proptest::prelude::*;

use super::*;
use crate::classify::{classify_positive_recurrence, classify_recurrence, Outcome, PositiveConfig, RecurrenceConfig};
use crate::invariant::rw_invariant;

fn r(s: &str) -> PosRational {
    s.parse().unwrap()
}

fn words(max_len: usize) -> Vec<NodeWord> {
    let mut out = vec![NodeWord::root()];
    let mut k = 0;
    while k < out.len() {
        let u = out[k].clone();
        if u.depth() < max_len {
            out.push(u.child(0));
            out.push(u.child(1));
        }
        k += 1;
    }
    out
}

#[test]
fn maps_at_small_rationals() {
    assert_eq!(sb_maps(&r("1/1")), (r("1/2"), r("2/1"), r("1/1")));
    assert_eq!(sb_maps(&r("2/3")), (r("2/5"), r("5/3"), r("2/1")));
    assert_eq!(r("6/4"), r("3/2"));
    assert_eq!(r("5"), r("5/1"));
    assert!("0/3".parse::<PosRational>().is_err());
    assert!("-1/3".parse::<PosRational>().is_err());
}

#[test]
fn encoding_of_short_words() {
    assert_eq!(sb_encode(&NodeWord::root()).unwrap(), PosRational::one());
    assert_eq!(sb_encode(&"0".parse().unwrap()).unwrap(), r("1/2"));
    assert_eq!(sb_encode(&"1".parse().unwrap()).unwrap(), r("2/1"));
    assert!(sb_encode(&"2".parse().unwrap()).is_err());
    assert_eq!(sb_decode(&r("7/5")).to_string(), "1.0.0.1");
}

#[test]
fn round_trip_on_all_words_up_to_length_12() {
    let all = words(12);
    assert_eq!(all.len(), (1 << 13) - 1);
    let mut seen = std::collections::HashSet::new();
    for u in &all {
        let x = sb_encode(u).unwrap();
        assert_eq!(sb_decode(&x), *u);
        assert_eq!(sb_depth(&x), u.depth());
        assert!(seen.insert(x));
    }
}

#[test]
fn left_descent_is_deterministic() {
    let fam = TransitionFamily::constant(0.0, 1.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = r("3/2");
    for _ in 0..5 {
        let next = sb_step(&fam, &x, &mut rng);
        assert_eq!(next, x.left());
        x = next;
    }
    assert_eq!(x, r("3/17"));
}

#[test]
fn family_checks() {
    assert!(TransitionFamily::constant(0.5, 0.5, 0.5).is_err());
    let fam = TransitionFamily::constant(0.25, 0.25, 0.5).unwrap();
    assert_eq!(fam.at(&PosRational::one()), Moves { r: 0.25, l: 0.25, p: 0.0, s: 0.5 });
    assert!(fam.validate(&r("7/5")).is_ok());
}

#[test]
fn simple_family_returns_to_one() {
    let fam = TransitionFamily::constant(0.25, 0.25, 0.5).unwrap();
    let run = simulate_sb(&fam, &r("7/5"), &SbConfig { steps: 100_000, seed: 1, ..Default::default() });
    assert!(run.visits_to_root > 0);
    assert!(run.first_return.unwrap() >= 4);
    let hits = return_count(&fam, &r("7/5"), 100_000, 0..50);
    assert!(hits >= 45);
}

#[test]
fn tree_image_carries_the_classification() {
    let fam = TransitionFamily::constant(1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0).unwrap();
    let k = family_to_walk(&fam);
    assert_eq!(classify_recurrence(&k, &RecurrenceConfig::default()).outcome, Outcome::Recurrent);
    assert_eq!(classify_positive_recurrence(&k, &PositiveConfig::default()).outcome, Outcome::PositiveRecurrent);

    let up = TransitionFamily::constant(0.3, 0.3, 0.4).unwrap();
    assert_eq!(
        classify_recurrence(&family_to_walk(&up), &RecurrenceConfig::default()).outcome,
        Outcome::Transient
    );
}

#[test]
fn occupancy_matches_the_invariant_measure() {
    let fam = TransitionFamily::constant(1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0).unwrap();
    let k = family_to_walk(&fam);
    let batches = 20;
    let per_batch = 50_000;
    let cfg = SbConfig { steps: batches * per_batch, seed: 11, track_depth: 4, stop_at_root: false };
    // batch means from a single trajectory
    let mut counts: Vec<HashMap<PosRational, usize>> = vec![HashMap::new(); batches];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = PosRational::one();
    for t in 0..cfg.steps {
        x = sb_step(&fam, &x, &mut rng);
        if sb_depth(&x) <= 4 {
            *counts[t / per_batch].entry(x.clone()).or_insert(0) += 1;
        }
    }
    // total mass: each level holds half the previous one, so 2
    let total = 2.0;
    for u in words(4) {
        let pi = rw_invariant(&k, &u).unwrap() / total;
        let x = sb_encode(&u).unwrap();
        let freqs: Vec<f64> = counts
            .iter()
            .map(|c| *c.get(&x).unwrap_or(&0) as f64 / per_batch as f64)
            .collect();
        let mean = freqs.iter().sum::<f64>() / batches as f64;
        let var = freqs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!((mean - pi).abs() <= 3.0 * se + 1e-12, "{u}: {mean} vs {pi} (se {se})");
    }
    let whole = simulate_sb(&fam, &PosRational::one(), &cfg);
    assert_eq!(whole.occupancy.values().sum::<usize>(), counts.iter().map(|c| c.values().sum::<usize>()).sum::<usize>());
    assert!(!whole.occupancy.is_empty() && !whole.steps.is_zero());
}

proptest! {
    #[test]
    fn parent_inverts_children(a in 1u64..10_000, b in 1u64..10_000) {
        let x = PosRational::from_u64(a, b).unwrap();
        prop_assert_eq!(x.left().parent(), x.clone());
        prop_assert_eq!(x.right().parent(), x.clone());
        let size = |y: &PosRational| y.numer() + y.denom();
        prop_assert!(size(&x.left()) > size(&x) && size(&x.right()) > size(&x));
        prop_assert_eq!(sb_encode(&sb_decode(&x)).unwrap(), x);
    }
}
