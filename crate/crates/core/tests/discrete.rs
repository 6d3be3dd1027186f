mod common;

use proptest::prelude::*;

use hybrid_bn::data::default_ground_truth;
use hybrid_bn::data::schema::{tabular_structure, PNEU};
use hybrid_bn::discrete::{Assignment, Cpt, DiscreteBn};

use common::{max_abs_diff, oracle_posterior, random_network, rng};

const NAMES: [&str; 8] = ["season", "pneu", "inf", "dysp", "cough", "nasal", "fever", "pain"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elimination_matches_enumeration(seed in any::<u64>(), mask in 0u32..256, query in 0usize..8, levels in prop::collection::vec(0usize..3, 8)) {
        let mut r = rng(seed);
        let bn = random_network(&mut r);
        let mut ev = Assignment::new();
        for (i, name) in NAMES.iter().enumerate() {
            if i != query && mask & (1 << i) != 0 {
                let card = bn.variable(name).unwrap().levels.len();
                ev.set(name, levels[i] % card);
            }
        }
        let ve = bn.posterior(NAMES[query], &ev).unwrap();
        let oracle = oracle_posterior(&bn, NAMES[query], &ev);
        prop_assert!(max_abs_diff(&ve, &oracle) < 1e-9, "{ve:?} vs {oracle:?}");
        prop_assert!((ve.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fitted_rows_are_distributions(seed in any::<u64>(), n in 0usize..200) {
        let bn = random_network(&mut rng(seed));
        let samples = bn.ancestral_sample(n, seed);
        let fitted = bn.structure().fit(&samples).unwrap();
        for cpt in fitted.cpts() {
            for row in &cpt.rows {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&p| p > 0.0));
            }
        }
    }
}

#[test]
fn uniform_tabular_joint_is_one_over_64() {
    let s = tabular_structure();
    let uniform = s.fit(&[]).unwrap();
    let full = NAMES[..6].iter().fold(Assignment::new(), |a, n| a.with(n, 1));
    assert!((uniform.joint_prob(&full).unwrap() - 1.0 / 64.0).abs() < 1e-15);
}

#[test]
fn random_joint_is_product_of_factors() {
    let bn = random_network(&mut rng(9));
    let full = NAMES.iter().fold(Assignment::new(), |a, n| a.with(n, 1));
    let mut expected = 1.0;
    for cpt in bn.cpts() {
        let row = match cpt.parents.len() {
            0 => 0,
            1 => 1,
            _ => 3, // two binary parents at (1, 1)
        };
        expected *= cpt.rows[row][1];
    }
    assert!((bn.joint_prob(&full).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn ground_truth_marginal_within_three_sigma() {
    let gt = default_ground_truth();
    let p = gt.posterior(PNEU, &Assignment::new()).unwrap()[1];
    let n = 100_000;
    let hits = gt.ancestral_sample(n, 77).iter().filter(|a| a.get(PNEU) == Some(1)).count() as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((hits - n as f64 * p).abs() < 3.0 * sd, "hits {hits}, expected {}", n as f64 * p);
}

#[test]
fn masked_records_count_only_observed_families() {
    let s = tabular_structure();
    let full = Assignment::new().with("season", 1).with("pneu", 0).with("inf", 1).with("dysp", 0).with("cough", 1).with("nasal", 1);
    let mut masked = full.clone();
    for sym in ["dysp", "cough", "nasal"] {
        masked.remove(sym);
    }
    let a = s.count(std::slice::from_ref(&full)).unwrap();
    let b = s.count(&[full, masked]).unwrap();
    for (fa, fb) in a.iter().zip(&b) {
        let added: f64 = fb.counts.iter().flatten().sum::<f64>() - fa.counts.iter().flatten().sum::<f64>();
        let expected = if ["dysp", "cough", "nasal"].contains(&fa.child.name.as_str()) { 0.0 } else { 1.0 };
        assert_eq!(added, expected, "{}", fa.child.name);
    }
}

#[test]
fn file_roundtrip_preserves_posteriors() {
    let bn = random_network(&mut rng(3)).with_note("random");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bn.json");
    bn.save(&path).unwrap();
    let back = DiscreteBn::load(&path).unwrap();
    let ev = Assignment::new().with("cough", 1).with("season", 0);
    assert_eq!(bn.posterior("pneu", &ev).unwrap(), back.posterior("pneu", &ev).unwrap());
    assert_eq!(back.note(), Some("random"));
}

#[test]
fn load_reports_missing_file() {
    let err = DiscreteBn::load(std::path::Path::new("/nonexistent/gt.json")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/gt.json"), "{err}");
}

#[test]
fn deterministic_cpts_give_exact_posteriors() {
    let s = tabular_structure();
    let mut bn_cpts: Vec<Cpt> = s.fit(&[]).unwrap().cpts().to_vec();
    for cpt in &mut bn_cpts {
        if cpt.child == "dysp" {
            cpt.rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        }
    }
    let bn = DiscreteBn::new(s.variables.clone(), bn_cpts).unwrap();
    let post = bn.posterior("pneu", &Assignment::new().with("dysp", 1)).unwrap();
    assert_eq!(post, vec![0.0, 1.0]);
}
