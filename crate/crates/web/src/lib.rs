//! Browser bindings for three small interactive views of the model:
//! the single-context selector trajectory, the sampling frequencies of each
//! selection strategy, and sense-induction accuracy on a toy corpus.
//!
//! Every export returns a JSON string. The plain functions underneath are
//! ordinary Rust so they can be tested natively.

use std::io::Cursor;

use muse::corpus::synthetic::{anchor_word, topic_corpus, TopicCorpusSpec};
use muse::corpus::{tokenize, Vocabulary};
use muse::evaluation::{accuracy_from_occurrences, LabeledOccurrence};
use muse::selection::{decode_sequence, select_sense, SelectionScores};
use muse::trainer::{collinear_diagnostic_setup, run_appendix_a_diagnostic, DiagnosticConfig};
use muse::{BatchReduction, Learner, ModelParams, RewardKind, Strategy, StrategyKind, Trainer, TrainingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const PSEUDOWORD: &str = "anchor0_1";

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub learner: &'static str,
    /// Policy before each step, plus the final one.
    pub policies: Vec<Vec<f64>>,
    pub selected: Vec<u32>,
    pub max_probs: Vec<f64>,
}

/// Frozen-reward trajectory of one context with three senses.
///
/// Policy gradient gets reward -1 for every sense (every log-likelihood is
/// negative); Q-learning gets target probabilities 0.9, 0.2, 0.2.
pub fn trajectory(learner: &str, steps: usize, lr: f64, seed: u64) -> Result<Trajectory, String> {
    let (learner, name, a, rewards) = match learner {
        "policy" => (Learner::PolicyGradient, "policy", [1.0, 0.2, -0.3], [-1.0; 3]),
        "qlearning" => (Learner::QLearning, "qlearning", [0.0; 3], [0.9, 0.2, 0.2]),
        other => return Err(format!("unknown learner {other:?}")),
    };
    if steps > 100_000 {
        return Err("at most 100000 steps".into());
    }
    let (mut params, window) = collinear_diagnostic_setup(8, 4, &a, 3.0, seed).map_err(|e| e.to_string())?;
    let cfg = DiagnosticConfig {
        learner,
        strategy: Strategy::GREEDY,
        window,
        rewards: rewards.to_vec(),
        lr,
        seed,
    };
    let trace = run_appendix_a_diagnostic(&mut params, &cfg, steps).map_err(|e| e.to_string())?;
    Ok(Trajectory {
        learner: name,
        max_probs: trace.max_probs(),
        policies: trace.policies,
        selected: trace.selected,
    })
}

#[derive(Debug, Serialize)]
pub struct Frequencies {
    pub policy: Vec<f64>,
    pub qvalues: Vec<f64>,
    pub counts: Vec<u64>,
    pub draws: u64,
}

/// Counts how often each sense is picked from fixed logits.
pub fn strategy_frequencies(
    logits: &[f64],
    strategy: &str,
    epsilon: f64,
    draws: u64,
    seed: u64,
) -> Result<Frequencies, String> {
    if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
        return Err("logits must be finite and non-empty".into());
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err("epsilon must lie in [0, 1]".into());
    }
    let strategy = match strategy {
        "greedy" => Strategy::GREEDY,
        "egreedy" => Strategy::epsilon_greedy(epsilon),
        "boltzmann" => Strategy::boltzmann(),
        "policy" => Strategy::policy_sample(),
        other => return Err(format!("unknown strategy {other:?}")),
    };
    let scores = SelectionScores::from_logits(0, logits.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; logits.len()];
    for _ in 0..draws.min(10_000_000) {
        counts[select_sense(&scores, strategy, &mut rng).sense as usize] += 1;
    }
    Ok(Frequencies {
        policy: scores.policy.clone(),
        qvalues: scores.qvalues.clone(),
        draws: counts.iter().sum(),
        counts,
    })
}

#[derive(Debug, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub accuracy: f64,
    pub mean_reward: f64,
    pub mean_entropy: f64,
}

#[derive(Debug, Serialize)]
pub struct ToyRun {
    pub pseudoword: &'static str,
    pub occurrences: u64,
    /// Accuracy of labelling every occurrence with one sense.
    pub majority: f64,
    pub epochs: Vec<EpochPoint>,
}

/// Generates a four-topic corpus, merges the anchors of topics 0 and 1 into
/// one pseudoword, trains a two-sense model and reports after every epoch how
/// well greedy decoding separates the two original words.
pub fn toy_training(strategy: &str, epochs: usize, sentences: usize, seed: u64) -> Result<ToyRun, String> {
    let strategy = match strategy {
        "greedy" => StrategyKind::Greedy,
        "egreedy" => StrategyKind::EpsilonGreedy,
        "boltzmann" => StrategyKind::Boltzmann,
        other => return Err(format!("unknown strategy {other:?}")),
    };
    if epochs == 0 || epochs > 50 || sentences == 0 || sentences > 50_000 {
        return Err("epochs must be in 1..=50 and sentences in 1..=50000".into());
    }
    let spec = TopicCorpusSpec {
        sentences,
        seed,
        ..TopicCorpusSpec::default()
    };
    let (a, b) = (anchor_word(0), anchor_word(1));
    let mut text = String::new();
    let mut originals = Vec::new();
    for line in topic_corpus(&spec).lines() {
        let merged: Vec<&str> = line
            .split(' ')
            .map(|t| {
                if t == a || t == b {
                    originals.push(t.to_string());
                    PSEUDOWORD
                } else {
                    t
                }
            })
            .collect();
        text.push_str(&merged.join(" "));
        text.push('\n');
    }

    let config = TrainingConfig {
        dim: 20,
        senses: 2,
        lr0: 0.025,
        negatives: 5,
        batch_size: 2048,
        learner: Learner::QLearning,
        strategy,
        reward: RewardKind::BernoulliLik,
        batch_reduction: BatchReduction::Sum,
        epochs,
        subsample: Some(1e-3),
        min_count: 1,
        min_sentence_len: 0,
        seed,
        ..TrainingConfig::default()
    }
    .validate()
    .map_err(|e| e.to_string())?;
    let err = |e: muse::Error| e.to_string();
    let vocab = Vocabulary::from_reader(Cursor::new(&text), 1, &config.corpus_options()).map_err(err)?;
    let mut trainer = Trainer::new(&vocab, config.clone()).map_err(err)?;
    let mut params = trainer.init_params();

    let majority = {
        let first = originals.iter().filter(|o| **o == a).count();
        first.max(originals.len() - first) as f64 / originals.len().max(1) as f64
    };
    let mut points = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let stats = trainer
            .train_epoch_from_reader(Cursor::new(&text), &mut params, None)
            .map_err(err)?;
        let occurrences = label_pseudoword(&text, &originals, &params, &vocab, config.window);
        points.push(EpochPoint {
            epoch,
            accuracy: accuracy_from_occurrences(PSEUDOWORD, &occurrences).accuracy,
            mean_reward: stats.mean_reward(),
            mean_entropy: stats.mean_entropy(),
        });
    }
    Ok(ToyRun {
        pseudoword: PSEUDOWORD,
        occurrences: originals.len() as u64,
        majority,
        epochs: points,
    })
}

fn label_pseudoword(
    text: &str,
    originals: &[String],
    params: &ModelParams,
    vocab: &Vocabulary,
    radius: usize,
) -> Vec<LabeledOccurrence> {
    let mut out = Vec::with_capacity(originals.len());
    let mut position = 0u64;
    for line in text.lines() {
        let ids: Vec<u32> = tokenize(line, false).filter_map(|t| vocab.id(&t)).collect();
        for (id, sense) in ids.iter().zip(decode_sequence(&ids, params, radius)) {
            if vocab.word(*id) == PSEUDOWORD {
                out.push(LabeledOccurrence {
                    position,
                    pseudoword: PSEUDOWORD.to_string(),
                    original: originals[out.len()].clone(),
                    sense: sense.sense,
                });
            }
            position += 1;
        }
    }
    out
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = trajectory)]
pub fn js_trajectory(learner: &str, steps: u32, lr: f64, seed: u32) -> Result<String, JsValue> {
    to_js(trajectory(learner, steps as usize, lr, seed as u64))
}

#[wasm_bindgen(js_name = strategyFrequencies)]
pub fn js_strategy_frequencies(
    logits: Vec<f64>,
    strategy: &str,
    epsilon: f64,
    draws: u32,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(strategy_frequencies(&logits, strategy, epsilon, draws as u64, seed as u64))
}

#[wasm_bindgen(js_name = toyTraining)]
pub fn js_toy_training(strategy: &str, epochs: u32, sentences: u32, seed: u32) -> Result<String, JsValue> {
    to_js(toy_training(strategy, epochs as usize, sentences as usize, seed as u64))
}
