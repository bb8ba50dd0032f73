//! Sense-level skip-gram with negative sampling, and the collocation
//! likelihoods handed to the selector as rewards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::UnigramTable;
use crate::error::{Error, Result};
use crate::math::{axpy, dot, log_sigmoid, sigmoid};
use crate::params::{ModelParams, SenseRef};

/// Largest `|W|·n` for which the exact categorical likelihood may be evaluated.
pub const EXACT_REWARD_MAX_SENSES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    /// Sampled negative-sampling log-likelihood `log L̄`.
    ApproxLogLik,
    /// Single-pair Bernoulli likelihood `L̂ = σ(u·v)`.
    BernoulliLik,
    /// Full softmax over every sense; diagnostics only.
    ExactCategorical,
}

/// Result of one skip-gram step, measured before the parameters moved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgnsOutcome {
    /// Realized `log σ(u·v⁺) + Σ log σ(-u·v⁻)`.
    pub log_likelihood: f64,
    /// `σ(u·v⁺)`.
    pub positive_prob: f64,
}

/// Draws `count` negatives, redrawing any that hit the positive sense.
pub fn draw_negatives<R: Rng + ?Sized>(
    table: &UnigramTable,
    positive: usize,
    count: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    if table.len() <= 1 {
        return;
    }
    while out.len() < count {
        let z = table.sample(rng);
        if z != positive {
            out.push(z);
        }
    }
}

/// Realized negative-sampling log-likelihood for fixed negatives.
pub fn sgns_objective(target: SenseRef, colloc: SenseRef, negatives: &[usize], params: &ModelParams) -> f64 {
    let u = params.u_row(target.flat);
    let mut value = log_sigmoid(dot(u, params.v_row(colloc.flat)));
    for &neg in negatives {
        value += log_sigmoid(-dot(u, params.v_row(neg)));
    }
    value
}

/// One gradient-ascent step on the negative-sampling objective with fixed negatives.
///
/// All coefficients are computed from the pre-update rows, so repeated
/// negatives accumulate their gradient exactly.
pub fn sgns_step(
    target: SenseRef,
    colloc: SenseRef,
    negatives: &[usize],
    params: &mut ModelParams,
    lr: f64,
) -> Result<SgnsOutcome> {
    let dim = params.dim();
    let mut grad_u = vec![0f32; dim];

    let pos_dot = dot(params.u_row(target.flat), params.v_row(colloc.flat));
    let mut log_likelihood = log_sigmoid(pos_dot);
    let pos_coef = lr * (1.0 - sigmoid(pos_dot));
    axpy(pos_coef, params.v_row(colloc.flat), &mut grad_u);

    let mut neg_coefs = Vec::with_capacity(negatives.len());
    for &neg in negatives {
        let d = dot(params.u_row(target.flat), params.v_row(neg));
        log_likelihood += log_sigmoid(-d);
        let coef = -lr * sigmoid(d);
        axpy(coef, params.v_row(neg), &mut grad_u);
        neg_coefs.push(coef);
    }
    if !log_likelihood.is_finite() {
        return Err(Error::NonFinite(format!(
            "skip-gram log-likelihood for senses {} / {}",
            target.flat, colloc.flat
        )));
    }

    // V rows move along the old U row, then U takes its accumulated step
    let (u, v) = (&params.u, &mut params.v);
    let u_old = &u[target.flat * dim..(target.flat + 1) * dim];
    axpy(pos_coef, u_old, &mut v[colloc.flat * dim..(colloc.flat + 1) * dim]);
    for (&neg, &coef) in negatives.iter().zip(&neg_coefs) {
        axpy(coef, u_old, &mut v[neg * dim..(neg + 1) * dim]);
    }
    for (ui, gi) in params.u_row_mut(target.flat).iter_mut().zip(&grad_u) {
        *ui += gi;
    }

    Ok(SgnsOutcome {
        log_likelihood,
        positive_prob: sigmoid(pos_dot),
    })
}

/// Draws `negatives` senses from `table` and takes one skip-gram step.
pub fn sgns_update<R: Rng + ?Sized>(
    target: SenseRef,
    colloc: SenseRef,
    params: &mut ModelParams,
    table: &UnigramTable,
    negatives: usize,
    lr: f64,
    rng: &mut R,
) -> Result<SgnsOutcome> {
    let mut negs = Vec::with_capacity(negatives);
    draw_negatives(table, colloc.flat, negatives, rng, &mut negs);
    sgns_step(target, colloc, &negs, params, lr)
}

/// `L̂(colloc | target) = σ(U[target]·V[colloc])`.
pub fn reward_bernoulli(target: SenseRef, colloc: SenseRef, params: &ModelParams) -> f64 {
    sigmoid(dot(params.u_row(target.flat), params.v_row(colloc.flat)))
}

/// Exact categorical likelihood: softmax of `U[target]·V[z]` over all senses `z`.
pub fn reward_exact(target: SenseRef, colloc: SenseRef, params: &ModelParams) -> Result<f64> {
    let total = params.num_senses_total();
    if total > EXACT_REWARD_MAX_SENSES {
        return Err(Error::Config(format!(
            "exact likelihood over {total} senses exceeds the limit of {EXACT_REWARD_MAX_SENSES}"
        )));
    }
    let u = params.u_row(target.flat);
    let scores: Vec<f64> = (0..total).map(|z| dot(u, params.v_row(z))).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    Ok((scores[colloc.flat] - max).exp() / z)
}
