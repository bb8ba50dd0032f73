//! Similarity, synonym and nearest-neighbour evaluation.

mod induction;
mod knn;
mod scws;
mod synonym;

pub use induction::{
    accuracy_from_occurrences, decode_labeled, evaluate_pseudowords, LabeledOccurrence, PseudowordAccuracy,
    PseudowordReport,
};
pub use knn::{knn_senses, Metric, Neighbor};
pub use scws::{avg_sim_c, evaluate_scws, max_sim_c, read_scws, ScwsItem, ScwsReport};
pub use synonym::{answer_synonym, evaluate_synonyms, read_synonyms, SynonymQuestion, SynonymReport};

use crate::error::{Error, Result};

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(model: &[f64], human: &[f64]) -> Result<f64> {
    if model.len() != human.len() {
        return Err(Error::Usage(format!(
            "spearman: length mismatch ({} vs {})",
            model.len(),
            human.len()
        )));
    }
    if model.is_empty() {
        return Err(Error::Usage("spearman: empty input".into()));
    }
    let rx = average_ranks(model);
    let ry = average_ranks(human);
    pearson(&rx, &ry).ok_or_else(|| Error::Undefined("spearman: zero variance".into()))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
