use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[u8]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), actual: labels.len() });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {i}")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::InvalidArgument("average precision needs at least one positive".into()));
    }
    Ok(positives)
}

/// Indices sorted by descending score; ties keep input order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Mean of precision@k over the ranks k of the positives, ranking by
/// descending score with ties in input order.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let positives = check(scores, labels)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, i) in ranking(scores).into_iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Area under the ROC curve (ties count one half). Debugging aid only.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let positives = check(scores, labels)?;
    let negatives = labels.len() - positives;
    if negatives == 0 {
        return Err(Error::InvalidArgument("ROC AUC needs at least one negative".into()));
    }
    // Mann-Whitney with midranks, ascending.
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * mid;
        i = j + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}
