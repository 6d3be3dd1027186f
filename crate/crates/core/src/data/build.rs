use rand::seq::SliceRandom;

use super::embedder::{EmbedderSpec, SymptomState};
use super::record::{Dataset, PatientRecord};
use super::schema::{self, *};
use crate::discrete::DiscreteBn;
use crate::error::Result;
use crate::rng;

/// Sizes of the three training partitions: symptoms masked, text masked,
/// fully observed. The remainder of `n / 3` goes to the last one.
pub fn partition_sizes(n_train: usize) -> [usize; 3] {
    let third = n_train / 3;
    [third, third, n_train - 2 * third]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
}

/// Samples a train/test split from the ground truth, attaches embeddings
/// derived from the full five-symptom state and masks the training set.
///
/// Records keep fever and pain; use [`Dataset::standard`] for the variant
/// without them. Train ids are `0..n_train`, test ids follow.
pub fn build_dataset(
    gt: &DiscreteBn,
    embedder: &EmbedderSpec,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<Split> {
    schema::validate_ground_truth(gt)?;
    let idx = |n: &str| gt.var_index(n).expect("validated");
    let (season, pneu, inf) = (idx(SEASON), idx(PNEU), idx(INF));
    let (dysp, cough, nasal) = (idx(DYSP), idx(COUGH), idx(NASAL));
    let (fever, pain) = (idx(FEVER), idx(PAIN));

    let mut data_rng = rng::stream(seed, "data");
    let mut records = Vec::with_capacity(n_train + n_test);
    for id in 0..(n_train + n_test) as u64 {
        let s = gt.sample_dense(&mut data_rng);
        let state = SymptomState {
            dysp: s[dysp],
            cough: s[cough],
            fever: s[fever],
            pain: s[pain],
            nasal: s[nasal],
        };
        let embedding = match embedder {
            EmbedderSpec::Synthetic(e) => {
                e.embed(&state, true, &mut rng::indexed_stream(seed, "embed", id))
            }
            EmbedderSpec::File(t) => t.get(id)?.clone(),
        };
        records.push(PatientRecord {
            id,
            season: s[season],
            pneu: s[pneu],
            inf: s[inf],
            symptoms: Some([s[dysp], s[cough], s[nasal]]),
            fever: Some(s[fever]),
            pain: Some(s[pain]),
            text_present: true,
            embedding: Some(embedding),
        });
    }
    let test_records = records.split_off(n_train);

    let mut order: Vec<usize> = (0..n_train).collect();
    order.shuffle(&mut rng::stream(seed, "mask"));
    let [n_sym, n_txt, _] = partition_sizes(n_train);
    for (rank, &i) in order.iter().enumerate() {
        let r = &mut records[i];
        if rank < n_sym {
            r.symptoms = None;
        } else if rank < n_sym + n_txt {
            r.text_present = false;
            r.embedding = None;
        }
    }

    let empty_text = embedder.empty();
    Ok(Split {
        train: Dataset { records, empty_text: empty_text.clone() },
        test: Dataset { records: test_records, empty_text },
    })
}
