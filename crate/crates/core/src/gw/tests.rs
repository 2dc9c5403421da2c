use super::*;
use crate::classify::{classify_positive_recurrence, PositiveConfig};
use crate::invariant::{rw_invariant, total_mass};
use crate::scalar::q;

fn binary_law() -> OffspringLaw {
    OffspringLaw::new(vec![q(1, 2), q(0, 1), q(1, 2)]).unwrap()
}

fn params(f: f64, g2: f64) -> HomogeneousParams<f64> {
    HomogeneousParams { f: vec![f, f, f], g: vec![g2, g2, g2] }
}

#[test]
fn law_validation() {
    assert!(OffspringLaw::new(vec![q(1, 2), q(1, 2)]).is_err());
    assert!(OffspringLaw::new(vec![q(0, 1), q(1, 1)]).is_err());
    assert!(OffspringLaw::new(vec![q(1, 2), q(1, 4), q(1, 4)]).is_err());
    assert!(OffspringLaw::new(vec![q(1, 3), q(1, 3), q(1, 3)]).is_ok());
    assert_eq!(binary_law().support(), vec![0, 2]);
}

#[test]
fn binary_law_has_a_binary_spine() {
    let s = sample_kesten(&binary_law(), 50, 7, &KestenConfig::default()).unwrap();
    assert!(s.spine_degrees.iter().all(|&c| c == 2));
    assert!(s.grafts.iter().all(|g| g.len() == 1));
    let again = sample_kesten(&binary_law(), 50, 7, &KestenConfig::default()).unwrap();
    assert_eq!(s.spine_letters, again.spine_letters);
    assert_eq!(s.size(), again.size());
}

#[test]
fn spine_degrees_follow_the_biased_law() {
    let law = OffspringLaw::new(vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10_000;
    let mut hist = [0usize; 3];
    for _ in 0..n {
        hist[law.sample_biased(&mut rng) as usize] += 1;
    }
    assert_eq!(hist[0], 0);
    // two cells with expected n/2 each: chi-square with one degree of freedom
    let e = n as f64 / 2.0;
    let chi2 = (hist[1] as f64 - e).powi(2) / e + (hist[2] as f64 - e).powi(2) / e;
    assert!(chi2 < 9.0, "chi2 = {chi2}");
}

#[test]
fn graft_sizes_have_a_stable_median() {
    let law = binary_law();
    let median = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes: Vec<usize> = (0..2001).map(|_| grow(&law, &mut rng, 1 << 20).map_or(1 << 20, |t| t.len())).collect();
        sizes.sort();
        sizes[1000]
    };
    // half the trees are a single leaf
    assert!(median(1) <= 3 && median(2) <= 3);
}

#[test]
fn classifier_statistics() {
    let law = binary_law();
    let pr = gw_classifier(&law, &params(0.5, 0.25)).unwrap();
    assert!((pr.f - 0.5).abs() < 1e-15);
    assert!((pr.m - 4.0).abs() < 1e-12);
    assert!((pr.l - 0.5f64.ln()).abs() < 1e-15);
    assert_eq!(pr.verdict.outcome, Outcome::PositiveRecurrent);

    let npr = gw_classifier(&law, &params(0.25, 0.375)).unwrap();
    assert!((npr.l - 1.5f64.ln()).abs() < 1e-15);
    assert_eq!(npr.verdict.outcome, Outcome::NotPositiveRecurrent);

    let flat = gw_classifier(&law, &params(0.3, 0.3)).unwrap();
    assert_eq!(flat.verdict.outcome, Outcome::Inconclusive);
    assert!(flat.verdict.reason.is_some());

    assert!(gw_classifier(&law, &params(0.5, 0.5)).is_err());
}

#[test]
fn spine_masses_match_the_walk_product() {
    let law = OffspringLaw::new(vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
    let p = HomogeneousParams { f: vec![0.5, 0.4, 0.3], g: vec![0.1, 0.3, 0.3] };
    let s = sample_kesten(&law, 12, 3, &KestenConfig::default()).unwrap();
    let k = sample_kernel(&s, &p, 1 << 16).unwrap();
    let table = estimate_total(&s, &p).unwrap();
    for (j, u) in s.spine().iter().take(12).enumerate() {
        let direct = rw_invariant(&k, u).unwrap();
        assert!((table.log_pi[j] - direct.ln()).abs() < 1e-12, "spine node {j}");
    }
    for hanging in &s.grafts {
        for (_, t) in hanging {
            let gk = Kernel::degree_homogeneous(TreeSource::finite(t.clone()), p.clone()).unwrap();
            let by_leaves = total_mass(&gk, 1 << 16).unwrap();
            assert!((graft_log_mass(t, &p) - by_leaves.ln()).abs() < 1e-10);
        }
    }
}

#[test]
fn cumulative_mass_equals_the_frozen_total() {
    let law = OffspringLaw::new(vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
    let p = HomogeneousParams { f: vec![0.5, 0.4, 0.3], g: vec![0.1, 0.3, 0.3] };
    let s = sample_kesten(&law, 8, 9, &KestenConfig::default()).unwrap();
    let table = estimate_total(&s, &p).unwrap();
    let k = sample_kernel(&s, &p, 1 << 16).unwrap();
    // the frozen tree also holds u_n, which the table leaves out
    let un = s.spine()[8].clone();
    let total = total_mass(&k, 1 << 16).unwrap() - rw_invariant(&k, &un).unwrap();
    let last = *table.cumulative.last().unwrap();
    assert!((total - last).abs() < 1e-9 * total, "{total} vs {last}");
}

#[test]
fn single_spine_node_without_grafts() {
    let law = binary_law();
    let s = KestenSample {
        seed: 0,
        spine_degrees: vec![1],
        spine_letters: vec![0],
        grafts: vec![Vec::new()],
        resamples: 0,
    };
    let p = params(0.5, 0.25);
    let t = estimate_total(&s, &p).unwrap();
    assert_eq!(t.cumulative, vec![1.0]);
    assert_eq!(law.max_degree(), 2);
}

#[test]
fn lazy_trees_agree_with_the_classifier() {
    let law = binary_law();
    let src = kesten_source(&law, 4);
    // truncations are reproducible
    let a = crate::tree::truncate(&src, 6).unwrap();
    let b = crate::tree::truncate(&src, 6).unwrap();
    assert_eq!(a.nodes(), b.nodes());
    let cfg = PositiveConfig { depth: 30, ..Default::default() };
    for (p, want) in [
        (params(0.5, 0.25), Outcome::PositiveRecurrent),
        (params(0.25, 0.375), Outcome::NotPositiveRecurrent),
    ] {
        assert_eq!(gw_classifier(&law, &p).unwrap().verdict.outcome, want);
        let k = Kernel::degree_homogeneous(src.clone(), p).unwrap();
        assert_eq!(classify_positive_recurrence(&k, &cfg).outcome, want);
    }
}

#[test]
fn log_mass_slopes_track_l() {
    let law = binary_law();
    let cfg = KestenConfig { graft_cap: 100_000, ..Default::default() };
    let mc = monte_carlo(&law, &params(0.5, 0.25), 20, 100, 1, &cfg).unwrap();
    let l = 0.5f64.ln();
    assert!(((mc.log_pi_slope - l) / l).abs() < 1e-9);
    assert!(((mc.log_increment_slope - l) / l).abs() < 0.2, "{}", mc.log_increment_slope);
    let mc = monte_carlo(&law, &params(0.25, 0.375), 20, 100, 1, &cfg).unwrap();
    assert!(((mc.log_pi_slope - 1.5f64.ln()) / 1.5f64.ln()).abs() < 1e-9);
    assert!(slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) == 2.0);
}
