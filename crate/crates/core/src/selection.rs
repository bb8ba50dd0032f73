//! Sense selection: a linear scorer over summed context word embeddings,
//! read either as a softmax policy or as independent sigmoid Q-values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ContextWindow;
use crate::math::{argmax, dot, sigmoid, softmax};
use crate::params::{ModelParams, SenseRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Greedy,
    EpsilonGreedy,
    Boltzmann,
    PolicySample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Only read by `EpsilonGreedy`.
    pub epsilon: f64,
}

impl Strategy {
    pub const GREEDY: Strategy = Strategy {
        kind: StrategyKind::Greedy,
        epsilon: 0.0,
    };

    pub fn epsilon_greedy(epsilon: f64) -> Self {
        assert!((0.0..=1.0).contains(&epsilon), "epsilon must be in [0, 1]");
        Strategy {
            kind: StrategyKind::EpsilonGreedy,
            epsilon,
        }
    }

    pub fn boltzmann() -> Self {
        Strategy {
            kind: StrategyKind::Boltzmann,
            epsilon: 0.0,
        }
    }

    pub fn policy_sample() -> Self {
        Strategy {
            kind: StrategyKind::PolicySample,
            epsilon: 0.0,
        }
    }
}

/// Per-sense scores of one word in one context.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionScores {
    pub word: u32,
    pub logits: Vec<f64>,
    pub policy: Vec<f64>,
    pub qvalues: Vec<f64>,
}

impl SelectionScores {
    pub fn from_logits(word: u32, logits: Vec<f64>) -> Self {
        let policy = softmax(&logits);
        let qvalues = logits.iter().map(|&l| sigmoid(l)).collect();
        SelectionScores {
            word,
            logits,
            policy,
            qvalues,
        }
    }

    pub fn senses(&self) -> usize {
        self.logits.len()
    }

    /// Highest-scoring sense, lowest index on ties.
    ///
    /// Policy, Q-values and logits share this argmax; logits are compared
    /// because they do not saturate.
    pub fn greedy(&self) -> u32 {
        argmax(&self.logits) as u32
    }
}

/// `Σ P_j` over the context words of the window (target excluded).
pub fn encode_context(window: &ContextWindow, params: &ModelParams) -> Vec<f32> {
    let mut c = vec![0f32; params.dim()];
    for w in window.context() {
        for (ci, pi) in c.iter_mut().zip(params.p_row(w)) {
            *ci += pi;
        }
    }
    c
}

pub fn score_senses(window: &ContextWindow, params: &ModelParams) -> SelectionScores {
    let c = encode_context(window, params);
    score_with_context(window.target, &c, params)
}

/// Scores against a precomputed context vector.
pub fn score_with_context(word: u32, context: &[f32], params: &ModelParams) -> SelectionScores {
    let logits = (0..params.senses() as u32)
        .map(|k| dot(params.q_row(word, k), context))
        .collect();
    SelectionScores::from_logits(word, logits)
}

pub fn select_sense<R: Rng + ?Sized>(scores: &SelectionScores, strategy: Strategy, rng: &mut R) -> SenseRef {
    let n = scores.senses();
    let sense = match strategy.kind {
        StrategyKind::Greedy => scores.greedy(),
        StrategyKind::EpsilonGreedy => {
            if strategy.epsilon > 0.0 && rng.random::<f64>() < strategy.epsilon {
                rng.random_range(0..n) as u32
            } else {
                scores.greedy()
            }
        }
        // temperature-1 Boltzmann over the same logits is the policy itself
        StrategyKind::Boltzmann | StrategyKind::PolicySample => sample_categorical(&scores.policy, rng) as u32,
    };
    SenseRef::new(scores.word, sense, n)
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Greedy, position-independent decoding of a token sequence: `O(n·L)` scoring.
pub fn decode_sequence(tokens: &[u32], params: &ModelParams, radius: usize) -> Vec<SenseRef> {
    let d = params.dim();
    let n = params.senses();
    let mut out = Vec::with_capacity(tokens.len());
    // sliding sum of P over [lo, hi)
    let mut window_sum = vec![0f64; d];
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut context = vec![0f32; d];
    for (t, &word) in tokens.iter().enumerate() {
        let want_lo = t.saturating_sub(radius);
        let want_hi = (t + radius + 1).min(tokens.len());
        while hi < want_hi {
            for (s, p) in window_sum.iter_mut().zip(params.p_row(tokens[hi])) {
                *s += *p as f64;
            }
            hi += 1;
        }
        while lo < want_lo {
            for (s, p) in window_sum.iter_mut().zip(params.p_row(tokens[lo])) {
                *s -= *p as f64;
            }
            lo += 1;
        }
        for ((c, s), p) in context.iter_mut().zip(&window_sum).zip(params.p_row(word)) {
            *c = (*s - *p as f64) as f32;
        }
        let mut best = 0u32;
        let mut best_logit = f64::NEG_INFINITY;
        for k in 0..n as u32 {
            let l = dot(params.q_row(word, k), &context);
            if l > best_logit {
                best_logit = l;
                best = k;
            }
        }
        out.push(SenseRef::new(word, best, n));
    }
    out
}
