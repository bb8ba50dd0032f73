use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusOptions, StreamOptions};
use crate::error::{Error, Result};
use crate::representation::RewardKind;
use crate::selection::{Strategy, StrategyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    PolicyGradient,
    QLearning,
}

/// Which sense pair the Bernoulli reward scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardDirection {
    /// `σ(U[target]·V[colloc])`, the quantity the skip-gram module learns.
    TargetToColloc,
    /// `σ(U[colloc]·V[target])`.
    CollocToTarget,
}

/// How per-sample selector gradients of a mini-batch are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchReduction {
    Mean,
    Sum,
}

/// Every hyperparameter of a training run. Serialized into model files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub dim: usize,
    pub senses: usize,
    pub window: usize,
    pub lr0: f64,
    pub negatives: usize,
    pub epsilon: f64,
    pub batch_size: usize,
    pub learner: Learner,
    pub strategy: StrategyKind,
    pub reward: RewardKind,
    pub reward_direction: RewardDirection,
    pub batch_reduction: BatchReduction,
    pub epochs: usize,
    /// `None` disables subsampling.
    pub subsample: Option<f64>,
    pub min_count: u64,
    pub min_sentence_len: usize,
    pub lowercase: bool,
    pub all_offsets: bool,
    pub unigram_power: f64,
    pub seed: u64,
    pub threads: usize,
    pub strict: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 300,
            senses: 3,
            window: 5,
            lr0: 0.025,
            negatives: 25,
            epsilon: 0.05,
            batch_size: 2048,
            learner: Learner::QLearning,
            strategy: StrategyKind::Boltzmann,
            reward: RewardKind::BernoulliLik,
            reward_direction: RewardDirection::TargetToColloc,
            batch_reduction: BatchReduction::Sum,
            epochs: 1,
            subsample: Some(1e-4),
            min_count: 5,
            min_sentence_len: 10,
            lowercase: false,
            all_offsets: false,
            unigram_power: 0.75,
            seed: 1,
            threads: 1,
            strict: true,
        }
    }
}

impl TrainingConfig {
    /// Rejects inconsistent settings and forces on-policy sampling for policy gradient.
    pub fn validate(mut self) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 || self.senses == 0 {
            return bad("dim and senses must be at least 1".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr0));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.batch_size == 0 || self.threads == 0 {
            return bad("batch size and threads must be at least 1".into());
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return bad(format!("subsampling threshold {t} must be positive"));
            }
        }
        if self.strict && self.threads != 1 {
            return bad("strict mode runs a single worker; pass relaxed mode for threads > 1".into());
        }
        if self.reward == RewardKind::ExactCategorical {
            return bad("the exact categorical likelihood is a diagnostic, not a training reward".into());
        }
        if self.learner == Learner::PolicyGradient {
            match self.strategy {
                StrategyKind::PolicySample | StrategyKind::Boltzmann => {
                    self.strategy = StrategyKind::PolicySample
                }
                other => {
                    return bad(format!(
                        "policy gradient needs on-policy sampling, got strategy {other:?}"
                    ))
                }
            }
        }
        Ok(self)
    }

    pub fn selection_strategy(&self) -> Strategy {
        Strategy {
            kind: self.strategy,
            epsilon: self.epsilon,
        }
    }

    pub fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            min_sentence_len: self.min_sentence_len,
            lowercase: self.lowercase,
        }
    }

    pub fn stream_options(&self) -> StreamOptions {
        StreamOptions {
            window: self.window,
            subsample: self.subsample,
            all_offsets: self.all_offsets,
            corpus: self.corpus_options(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(format!("config echo: {e}")))
    }
}
