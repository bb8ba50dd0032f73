use rand::Rng;

use super::Vocabulary;
use crate::error::{Error, Result};

/// Cumulative negative-sampling distribution over flat sense indices.
///
/// Each word's smoothed unigram mass `count^power / Z` is split evenly
/// across its `senses` senses.
#[derive(Clone, Debug)]
pub struct UnigramTable {
    cumulative: Vec<f64>,
    power: f64,
    senses: usize,
}

impl UnigramTable {
    pub fn new(vocab: &Vocabulary, senses: usize, power: f64) -> Result<Self> {
        Self::from_counts(vocab.counts(), senses, power)
    }

    pub fn from_counts(counts: &[u64], senses: usize, power: f64) -> Result<Self> {
        if senses == 0 {
            return Err(Error::config("senses per word must be at least 1"));
        }
        if !(power > 0.0 && power <= 1.0) {
            return Err(Error::config(format!("unigram power {power} outside (0, 1]")));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let z: f64 = weights.iter().sum();
        if !(z > 0.0) {
            return Err(Error::config("unigram table needs at least one positive count"));
        }
        let mut cumulative = Vec::with_capacity(counts.len() * senses);
        let mut acc = 0.0;
        for w in &weights {
            let per_sense = w / z / senses as f64;
            for _ in 0..senses {
                acc += per_sense;
                cumulative.push(acc);
            }
        }
        // pin the tail so a draw of u < 1 always lands inside the table
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(UnigramTable {
            cumulative,
            power,
            senses,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn senses_per_word(&self) -> usize {
        self.senses
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability mass of one flat sense index.
    pub fn probability(&self, flat: usize) -> f64 {
        let prev = if flat == 0 { 0.0 } else { self.cumulative[flat - 1] };
        self.cumulative[flat] - prev
    }

    /// Draws a flat sense index in O(log S).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}
