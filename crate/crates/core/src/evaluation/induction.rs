use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{tokenize, ContextWindow, MergePair, Vocabulary};
use crate::error::Result;
use crate::params::ModelParams;
use crate::selection::score_senses;

/// A labeled pseudoword token and the sense greedy selection gave it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledOccurrence {
    pub position: u64,
    pub pseudoword: String,
    pub original: String,
    pub sense: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudowordAccuracy {
    pub pseudoword: String,
    pub occurrences: u64,
    /// `Σ_sense max_label count / occurrences`.
    pub accuracy: f64,
    /// `sense -> original word -> count`
    pub confusion: BTreeMap<u32, BTreeMap<String, u64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PseudowordReport {
    pub results: Vec<PseudowordAccuracy>,
}

impl PseudowordReport {
    pub fn get(&self, pseudoword: &str) -> Option<&PseudowordAccuracy> {
        self.results.iter().find(|r| r.pseudoword == pseudoword)
    }

    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.results.iter().filter(|r| r.accuracy >= threshold).count()
    }

    pub fn mean_accuracy(&self) -> f64 {
        if self.results.is_empty() {
            return 0.0;
        }
        self.results.iter().map(|r| r.accuracy).sum::<f64>() / self.results.len() as f64
    }
}

/// Greedy senses for every labeled pseudoword token of a held-out corpus.
///
/// `labels` holds `(position, original)` with positions counting all
/// whitespace tokens of the file; OOV tokens are dropped before windowing.
pub fn decode_labeled(
    corpus: &Path,
    labels: &[(u64, String)],
    params: &ModelParams,
    vocab: &Vocabulary,
    radius: usize,
    lowercase: bool,
) -> Result<Vec<LabeledOccurrence>> {
    let label_at: HashMap<u64, &str> = labels.iter().map(|(p, w)| (*p, w.as_str())).collect();
    let reader = BufReader::new(File::open(corpus)?);
    let mut position: u64 = 0;
    let mut out = Vec::new();
    let mut seq = Vec::new();
    let mut marked: Vec<(usize, u64, String)> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        seq.clear();
        marked.clear();
        for tok in tokenize(&line, lowercase) {
            if let Some(id) = vocab.id(&tok) {
                if let Some(orig) = label_at.get(&position) {
                    marked.push((seq.len(), position, orig.to_string()));
                }
                seq.push(id);
            }
            position += 1;
        }
        for (idx, pos, orig) in marked.drain(..) {
            let window = ContextWindow::around(&seq, idx, radius);
            let sense = score_senses(&window, params).greedy();
            out.push(LabeledOccurrence {
                position: pos,
                pseudoword: vocab.word(seq[idx]).to_string(),
                original: orig,
                sense,
            });
        }
    }
    Ok(out)
}

/// Majority-mapping accuracy from decoded occurrences.
pub fn accuracy_from_occurrences(pseudoword: &str, occurrences: &[LabeledOccurrence]) -> PseudowordAccuracy {
    let mut confusion: BTreeMap<u32, BTreeMap<String, u64>> = BTreeMap::new();
    let mut total = 0;
    for occ in occurrences.iter().filter(|o| o.pseudoword == pseudoword) {
        *confusion.entry(occ.sense).or_default().entry(occ.original.clone()).or_default() += 1;
        total += 1;
    }
    let correct: u64 = confusion.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    PseudowordAccuracy {
        pseudoword: pseudoword.to_string(),
        occurrences: total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        confusion,
    }
}

/// Sense-induction accuracy for each merged pair on a held-out corpus.
pub fn evaluate_pseudowords(
    corpus: &Path,
    labels: &[(u64, String)],
    merges: &[MergePair],
    params: &ModelParams,
    vocab: &Vocabulary,
    radius: usize,
    lowercase: bool,
) -> Result<PseudowordReport> {
    let occ = decode_labeled(corpus, labels, params, vocab, radius, lowercase)?;
    Ok(PseudowordReport {
        results: merges
            .iter()
            .map(|m| accuracy_from_occurrences(&m.pseudoword, &occ))
            .collect(),
    })
}
