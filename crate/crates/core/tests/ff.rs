mod common;

use proptest::prelude::*;

use hybrid_bn::data::{Dataset, Diagnosis, PatientRecord};
use hybrid_bn::ff::{encode_values, interaction_tuples, train_ff, FfConfig, FfEvidence, FfModel, BASE_DIM, INTERACTION_DIM};
use hybrid_bn::neural::{Activation, DenseNet, LayerSpec};
use hybrid_bn::Embedding;

use common::{rng, split};

fn quick() -> FfConfig {
    FfConfig { epochs: 3, pneu_hidden: 8, ..FfConfig::default() }
}

#[test]
fn base_encoding_examples() {
    let e = encode_values(1, Some([1, 0, 1]), false).unwrap();
    assert_eq!(e.base, [0., 1., 0., 1., 0., 1., 0., 0., 0., 1., 0.]);
    let e = encode_values(0, None, false).unwrap();
    assert_eq!(e.base, [1., 0., 0., 0., 1., 0., 0., 1., 0., 0., 1.]);
    assert!(e.interactions.is_none());
}

proptest! {
    #[test]
    fn interactions_are_products_of_the_one_hot_blocks(season in 0usize..2, symptoms in prop::option::of(prop::array::uniform3(0usize..2))) {
        let e = encode_values(season, symptoms, true).unwrap();
        let inter = e.interactions.clone().unwrap();
        prop_assert_eq!(inter.len(), INTERACTION_DIM);
        prop_assert_eq!(e.dim(), BASE_DIM + INTERACTION_DIM);
        // exactly one active cell per variable tuple
        prop_assert_eq!(inter.iter().sum::<f64>(), interaction_tuples().len() as f64);
        prop_assert!(inter.iter().all(|&v| v == 0.0 || v == 1.0));
        // the quadruple block (last 54 slots) lights up the row-major index
        let levels = [season, symptoms.map_or(2, |s| s[0]), symptoms.map_or(2, |s| s[1]), symptoms.map_or(2, |s| s[2])];
        let idx = ((levels[0] * 3 + levels[1]) * 3 + levels[2]) * 3 + levels[3];
        prop_assert_eq!(inter[INTERACTION_DIM - 54 + idx], 1.0);
    }
}

#[test]
fn single_layer_model_is_a_logistic_dot_product() {
    let mut r = rng(3);
    let d = 5;
    let spec = [LayerSpec::new(BASE_DIM + d, 1, Activation::Sigmoid, 0.0)];
    let net = DenseNet::new(&spec, &mut r).unwrap();
    let empty = common::random_embedding(&mut r, d);
    let model = FfModel { diagnosis: Diagnosis::Pneu, interactions: false, net: net.clone(), empty_text: empty };
    let text = common::random_embedding(&mut r, d);
    let record = PatientRecord {
        id: 0,
        season: 1,
        pneu: 0,
        inf: 0,
        symptoms: Some([0, 1, 1]),
        fever: None,
        pain: None,
        text_present: true,
        embedding: Some(text.clone()),
    };
    let mut x = vec![0., 1., 1., 0., 0., 0., 1., 0., 0., 1., 0.];
    x.extend_from_slice(text.as_slice());
    let layer = &net.layers()[0];
    let z: f64 = layer.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + layer.bias[0];
    let want = 1.0 / (1.0 + (-z).exp());
    assert!((model.predict(&record, FfEvidence::Full).unwrap() - want).abs() < 1e-10);
}

#[test]
fn evidence_modes_substitute_inputs() {
    let s = split(300, 60, 6, 1);
    let m = train_ff(&s.train, Diagnosis::Inf, &quick()).unwrap();
    assert!(m.interactions);
    for r in &s.test.records {
        let mut no_note = r.clone();
        no_note.embedding = None;
        no_note.text_present = false;
        assert_eq!(m.predict(r, FfEvidence::NoText).unwrap(), m.predict(&no_note, FfEvidence::Full).unwrap());
        let mut masked = r.clone();
        masked.symptoms = None;
        assert_eq!(m.predict(r, FfEvidence::NoSymptoms).unwrap(), m.predict(&masked, FfEvidence::Full).unwrap());
    }
}

#[test]
fn learns_a_separable_toy_problem() {
    // label = cough, readable from the tabular encoding alone
    let s = split(800, 400, 4, 2);
    let relabel = |d: &Dataset| Dataset {
        records: d
            .records
            .iter()
            .filter(|r| r.symptoms.is_some())
            .map(|r| PatientRecord { pneu: r.symptoms.unwrap()[1], ..r.clone() })
            .collect(),
        empty_text: d.empty_text.clone(),
    };
    let (train, test) = (relabel(&s.train), relabel(&s.test));
    let cfg = FfConfig { epochs: 60, pneu_hidden: 16, pneu_dropout: 0.0, learning_rate: 0.02, ..FfConfig::default() };
    let m = train_ff(&train, Diagnosis::Pneu, &cfg).unwrap();
    let correct = test
        .records
        .iter()
        .filter(|r| (m.predict(r, FfEvidence::Full).unwrap() > 0.5) == (r.pneu == 1))
        .count();
    assert!(correct as f64 / test.len() as f64 > 0.95, "{correct}/{}", test.len());
}

#[test]
fn training_twice_gives_identical_checkpoints() {
    let s = split(300, 0, 4, 3);
    let a = train_ff(&s.train, Diagnosis::Pneu, &quick()).unwrap();
    let b = train_ff(&s.train, Diagnosis::Pneu, &quick()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    a.save(&dir.path().join("a.hbnn"), 0).unwrap();
    b.save(&dir.path().join("b.hbnn"), 0).unwrap();
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.hbnn"), read("b.hbnn"));
    let back = FfModel::load(&dir.path().join("a.hbnn")).unwrap();
    assert_eq!(back, a);
}

#[test]
fn wrong_text_dimension_is_rejected() {
    let s = split(60, 0, 4, 4);
    let m = train_ff(&s.train, Diagnosis::Pneu, &quick()).unwrap();
    assert!(m.input(0, None, &Embedding::zeros(3)).is_err());
}
