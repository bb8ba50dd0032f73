//! Joint training of the selection and representation modules.
//!
//! Each mini-batch runs three phases: senses are selected for every sample
//! with the parameters as of the batch start, the skip-gram rows are
//! updated sample by sample, and finally the selector takes one combined
//! step. Only the target word's selection receives the reward.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufRead;
use std::ops::ControlFlow;
use std::path::Path;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BatchReduction, Learner, RewardDirection, TrainingConfig};
use crate::corpus::{CollocationSample, ContextWindow, SampleStream, UnigramTable, Vocabulary};
use crate::error::{Error, Result};
use crate::math::{entropy, sigmoid};
use crate::params::{ModelParams, SenseRef};
use crate::representation::{draw_negatives, reward_bernoulli, sgns_step, RewardKind};
use crate::selection::{encode_context, score_senses, score_with_context, select_sense, SelectionScores};

/// Learning rate never decays below this fraction of its initial value.
pub const MIN_LR_FRACTION: f64 = 1e-4;

/// Running training statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub samples_seen: u64,
    pub reward_sum: f64,
    pub entropy_sum: f64,
    pub lr: f64,
    /// Set when a non-finite value was detected; training stops at that point.
    pub non_finite: bool,
}

impl TrainStats {
    pub fn mean_reward(&self) -> f64 {
        if self.samples_seen == 0 {
            0.0
        } else {
            self.reward_sum / self.samples_seen as f64
        }
    }

    pub fn mean_entropy(&self) -> f64 {
        if self.samples_seen == 0 {
            0.0
        } else {
            self.entropy_sum / self.samples_seen as f64
        }
    }

    pub fn merge(&mut self, other: &TrainStats) {
        self.samples_seen += other.samples_seen;
        self.reward_sum += other.reward_sum;
        self.entropy_sum += other.entropy_sum;
        self.lr = other.lr;
        self.non_finite |= other.non_finite;
    }

    /// `samples=<n> lr=<v> reward=<mean> entropy=<mean>`
    pub fn progress_line(&self) -> String {
        format!(
            "samples={} lr={:.6} reward={:.6} entropy={:.6}",
            self.samples_seen,
            self.lr,
            self.mean_reward(),
            self.mean_entropy()
        )
    }
}

/// Gradient of a selector objective for one target occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectorGradient {
    pub word: u32,
    /// `(sense, ∂/∂Q[word, sense])` for every row with a nonzero gradient.
    pub q_rows: Vec<(u32, Vec<f64>)>,
    /// `∂/∂c` for the summed context vector; each context occurrence's `P`
    /// row receives it once.
    pub context: Vec<f64>,
}

impl SelectorGradient {
    /// `Θ += step · ∇`
    pub fn apply(&self, window: &ContextWindow, params: &mut ModelParams, step: f64) {
        for (sense, g) in &self.q_rows {
            crate::math::axpy_f64(step, g, params.q_row_mut(self.word, *sense));
        }
        for w in window.context() {
            crate::math::axpy_f64(step, &self.context, params.p_row_mut(w));
        }
    }

    fn is_finite(&self) -> bool {
        self.context.iter().all(|x| x.is_finite())
            && self.q_rows.iter().all(|(_, g)| g.iter().all(|x| x.is_finite()))
    }
}

/// `∂ log π(sense | c) / ∂Θ` for the softmax policy.
///
/// `∂/∂Q_k = (1[k = sense] − π_k)·c` and `∂/∂c = Q_sense − Σ_k π_k Q_k`.
pub fn policy_log_gradient(
    sense: u32,
    scores: &SelectionScores,
    context: &[f32],
    params: &ModelParams,
) -> SelectorGradient {
    let word = scores.word;
    let n = scores.senses();
    let d = params.dim();
    let mut q_rows = Vec::with_capacity(n);
    let mut dc = vec![0f64; d];
    for k in 0..n {
        let indicator = if k as u32 == sense { 1.0 } else { 0.0 };
        let coef = indicator - scores.policy[k];
        q_rows.push((k as u32, context.iter().map(|&c| coef * c as f64).collect()));
        for (g, &q) in dc.iter_mut().zip(params.q_row(word, k as u32)) {
            *g += coef * q as f64;
        }
    }
    SelectorGradient {
        word,
        q_rows,
        context: dc,
    }
}

/// `∂H(p, σ(Q_sense·c)) / ∂Θ` for the Bernoulli cross-entropy; only the
/// selected sense's row appears.
pub fn cross_entropy_gradient(
    sense: u32,
    target_prob: f64,
    scores: &SelectionScores,
    context: &[f32],
    params: &ModelParams,
) -> SelectorGradient {
    let word = scores.word;
    let q = sigmoid(scores.logits[sense as usize]);
    let delta = q - target_prob;
    SelectorGradient {
        word,
        q_rows: vec![(sense, context.iter().map(|&c| delta * c as f64).collect())],
        context: params
            .q_row(word, sense)
            .iter()
            .map(|&w| delta * w as f64)
            .collect(),
    }
}

/// One REINFORCE ascent step: `Θ += lr · reward · ∂ log π(z | c)/∂Θ`.
pub fn policy_gradient_update(
    selected: SenseRef,
    reward: f64,
    window: &ContextWindow,
    params: &mut ModelParams,
    lr: f64,
) {
    if reward == 0.0 {
        return;
    }
    let c = encode_context(window, params);
    let scores = score_with_context(window.target, &c, params);
    let g = policy_log_gradient(selected.sense, &scores, &c, params);
    g.apply(window, params, lr * reward);
}

/// One descent step on the cross-entropy between `target_prob` and the
/// selected sense's Q-value. Other senses' rows are untouched.
pub fn qlearning_update(
    selected: SenseRef,
    target_prob: f64,
    window: &ContextWindow,
    params: &mut ModelParams,
    lr: f64,
) {
    let c = encode_context(window, params);
    let scores = score_with_context(window.target, &c, params);
    let g = cross_entropy_gradient(selected.sense, target_prob, &scores, &c, params);
    g.apply(window, params, -lr);
}

/// Sparse sum of selector gradients over a mini-batch.
#[derive(Default)]
struct SelectorAccumulator {
    q: HashMap<(u32, u32), Vec<f64>>,
    p: HashMap<u32, Vec<f64>>,
}

impl SelectorAccumulator {
    fn add(&mut self, g: &SelectorGradient, window: &ContextWindow, coef: f64) {
        for (sense, row) in &g.q_rows {
            let acc = self.q.entry((g.word, *sense)).or_insert_with(|| vec![0.0; row.len()]);
            for (a, x) in acc.iter_mut().zip(row) {
                *a += coef * x;
            }
        }
        for w in window.context() {
            let acc = self.p.entry(w).or_insert_with(|| vec![0.0; g.context.len()]);
            for (a, x) in acc.iter_mut().zip(&g.context) {
                *a += coef * x;
            }
        }
    }

    fn apply(&mut self, params: &mut ModelParams, step: f64) {
        for ((word, sense), g) in self.q.drain() {
            crate::math::axpy_f64(step, &g, params.q_row_mut(word, sense));
        }
        for (word, g) in self.p.drain() {
            crate::math::axpy_f64(step, &g, params.p_row_mut(word));
        }
    }
}

/// Per-sample state carried from phase 1 to phase 3.
struct Selected {
    target: SenseRef,
    colloc: SenseRef,
    context: Vec<f32>,
    reward: f64,
}

/// Expected number of samples one epoch produces, from subsampling rates.
pub fn expected_samples_per_epoch(vocab: &Vocabulary, config: &TrainingConfig) -> f64 {
    let kept: f64 = (0..vocab.len() as u32)
        .map(|id| vocab.count(id) as f64 * vocab.keep_probability(id, config.subsample))
        .sum();
    if config.all_offsets {
        kept * 2.0 * config.window as f64
    } else {
        kept
    }
}

/// Callback invoked between batches with the statistics so far.
pub type ProgressHook<'h> = &'h mut dyn FnMut(&TrainStats, &ModelParams) -> ControlFlow<()>;

/// Training driver; owns the sampling table and the random state.
pub struct Trainer<'v> {
    vocab: &'v Vocabulary,
    table: UnigramTable,
    config: TrainingConfig,
    rng: ChaCha8Rng,
    planned_samples: f64,
    samples_seen: u64,
    epochs_done: usize,
    negatives: Vec<usize>,
}

impl<'v> Trainer<'v> {
    pub fn new(vocab: &'v Vocabulary, config: TrainingConfig) -> Result<Self> {
        let config = config.validate()?;
        let table = UnigramTable::new(vocab, config.senses, config.unigram_power)?;
        let planned_samples = (expected_samples_per_epoch(vocab, &config) * config.epochs as f64).max(1.0);
        Ok(Trainer {
            vocab,
            table,
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d75_7365),
            config,
            planned_samples,
            samples_seen: 0,
            epochs_done: 0,
            negatives: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn table(&self) -> &UnigramTable {
        &self.table
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// Overrides the sample count the linear decay is spread over.
    pub fn set_planned_samples(&mut self, planned: u64) {
        self.planned_samples = planned.max(1) as f64;
    }

    pub fn learning_rate(&self) -> f64 {
        learning_rate(self.config.lr0, self.samples_seen, self.planned_samples)
    }

    /// A fresh model shaped for this trainer's vocabulary and config.
    pub fn init_params(&self) -> ModelParams {
        ModelParams::init(self.vocab.len(), self.config.dim, self.config.senses, self.config.seed)
    }

    /// A mini-batch of one sample.
    pub fn train_step(&mut self, sample: &CollocationSample, params: &mut ModelParams) -> Result<TrainStats> {
        self.train_batch(std::slice::from_ref(sample), params)
    }

    pub fn train_batch(&mut self, batch: &[CollocationSample], params: &mut ModelParams) -> Result<TrainStats> {
        let mut stats = TrainStats::default();
        if batch.is_empty() {
            stats.lr = self.learning_rate();
            return Ok(stats);
        }
        let strategy = self.config.selection_strategy();

        // phase 1: select senses with the batch-start parameters
        let mut selected = Vec::with_capacity(batch.len());
        for sample in batch {
            let context = encode_context(&sample.target_window, params);
            let scores = score_with_context(sample.target_window.target, &context, params);
            let target = select_sense(&scores, strategy, &mut self.rng);
            let colloc_scores = score_senses(&sample.colloc_window, params);
            let colloc = select_sense(&colloc_scores, strategy, &mut self.rng);
            stats.entropy_sum += entropy(&scores.policy);
            selected.push(Selected {
                target,
                colloc,
                context,
                reward: 0.0,
            });
        }

        // phase 2: skip-gram updates, rewards read before each step
        for s in &mut selected {
            let lr = self.learning_rate();
            let reverse = match (self.config.learner, self.config.reward_direction) {
                (Learner::QLearning, RewardDirection::CollocToTarget) => Some(reward_bernoulli(s.colloc, s.target, params)),
                _ => None,
            };
            draw_negatives(&self.table, s.colloc.flat, self.config.negatives, &mut self.rng, &mut self.negatives);
            let outcome = sgns_step(s.target, s.colloc, &self.negatives, params, lr)?;
            s.reward = match self.config.learner {
                Learner::PolicyGradient => outcome.log_likelihood,
                Learner::QLearning => match self.config.reward {
                    RewardKind::BernoulliLik => reverse.unwrap_or(outcome.positive_prob),
                    RewardKind::ApproxLogLik => outcome.log_likelihood.exp(),
                    RewardKind::ExactCategorical => unreachable!("rejected by validate"),
                },
            };
            stats.reward_sum += s.reward;
            self.samples_seen += 1;
        }
        stats.samples_seen = batch.len() as u64;

        // phase 3: one combined selector step
        let mut acc = SelectorAccumulator::default();
        for (sample, s) in batch.iter().zip(&selected) {
            let scores = score_with_context(s.target.word, &s.context, params);
            let (g, coef) = match self.config.learner {
                Learner::PolicyGradient => (policy_log_gradient(s.target.sense, &scores, &s.context, params), s.reward),
                Learner::QLearning => (
                    cross_entropy_gradient(s.target.sense, s.reward, &scores, &s.context, params),
                    -1.0,
                ),
            };
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("selector gradient for word {}", s.target.word)));
            }
            acc.add(&g, &sample.target_window, coef);
        }
        let lr = self.learning_rate();
        let step = match self.config.batch_reduction {
            BatchReduction::Mean => lr / batch.len() as f64,
            BatchReduction::Sum => lr,
        };
        acc.apply(params, step);
        stats.lr = lr;
        Ok(stats)
    }

    /// One pass over the corpus. `hook` runs after every `hook_every` samples
    /// (strict mode) and may stop the epoch early.
    pub fn train_epoch(
        &mut self,
        corpus: &Path,
        params: &mut ModelParams,
        mut hook: Option<(u64, ProgressHook<'_>)>,
    ) -> Result<TrainStats> {
        let epoch = self.epochs_done;
        self.epochs_done += 1;
        let stats = if self.config.threads > 1 {
            let stats = self.train_epoch_relaxed(corpus, params, epoch)?;
            if let Some((_, f)) = hook.as_mut() {
                let _ = f(&stats, params);
            }
            stats
        } else {
            let seed = stream_seed(self.config.seed, epoch, 0);
            let stream = SampleStream::open(corpus, self.vocab, self.config.stream_options(), seed)?;
            self.consume(stream, params, hook)?
        };
        if !params.all_finite() {
            return Err(Error::NonFinite("parameters after epoch".into()));
        }
        Ok(stats)
    }

    /// One strict-mode pass over an in-memory or streamed corpus.
    pub fn train_epoch_from_reader<R: BufRead>(
        &mut self,
        reader: R,
        params: &mut ModelParams,
        hook: Option<(u64, ProgressHook<'_>)>,
    ) -> Result<TrainStats> {
        let epoch = self.epochs_done;
        self.epochs_done += 1;
        let seed = stream_seed(self.config.seed, epoch, 0);
        let stream = SampleStream::from_reader(reader, self.vocab, self.config.stream_options(), seed);
        let stats = self.consume(stream, params, hook)?;
        if !params.all_finite() {
            return Err(Error::NonFinite("parameters after epoch".into()));
        }
        Ok(stats)
    }

    fn consume<R: BufRead>(
        &mut self,
        mut stream: SampleStream<'_, R>,
        params: &mut ModelParams,
        mut hook: Option<(u64, ProgressHook<'_>)>,
    ) -> Result<TrainStats> {
        let mut stats = TrainStats::default();
        let mut batch = Vec::with_capacity(self.config.batch_size);
        let mut next_report = hook.as_ref().map(|(every, _)| *every).unwrap_or(u64::MAX);
        loop {
            batch.clear();
            if stream.fill(&mut batch, self.config.batch_size)? == 0 {
                break;
            }
            let batch_stats = self.train_batch(&batch, params)?;
            stats.merge(&batch_stats);
            if stats.samples_seen >= next_report {
                if let Some((every, f)) = hook.as_mut() {
                    next_report += *every * ((stats.samples_seen - next_report) / *every + 1);
                    if f(&stats, params).is_break() {
                        break;
                    }
                }
            }
        }
        Ok(stats)
    }

    /// All configured epochs.
    pub fn train(
        &mut self,
        corpus: &Path,
        params: &mut ModelParams,
        mut hook: Option<(u64, ProgressHook<'_>)>,
    ) -> Result<TrainStats> {
        let mut total = TrainStats::default();
        for _ in 0..self.config.epochs {
            let h = hook.as_mut().map(|(every, f)| (*every, &mut **f as ProgressHook<'_>));
            let stats = self.train_epoch(corpus, params, h)?;
            total.merge(&stats);
        }
        Ok(total)
    }

    /// Hogwild epoch: byte-range shards, lock-free row updates.
    fn train_epoch_relaxed(&mut self, corpus: &Path, params: &mut ModelParams, epoch: usize) -> Result<TrainStats> {
        let threads = self.config.threads;
        let len = File::open(corpus)?.metadata()?.len();
        let shared = SharedParams(params as *mut ModelParams);
        let results: Mutex<Vec<Result<(TrainStats, u64)>>> = Mutex::new(Vec::new());
        let base_seen = self.samples_seen;
        let per_thread_plan = self.planned_samples;
        let vocab = self.vocab;
        std::thread::scope(|scope| {
            for worker in 0..threads {
                let shared = &shared;
                let results = &results;
                let mut trainer = Trainer {
                    vocab,
                    table: self.table.clone(),
                    config: self.config.clone(),
                    rng: ChaCha8Rng::seed_from_u64(stream_seed(self.config.seed ^ 0x6d75_7365, epoch, worker + 1)),
                    planned_samples: per_thread_plan,
                    samples_seen: base_seen,
                    epochs_done: epoch + 1,
                    negatives: Vec::new(),
                };
                let start = len * worker as u64 / threads as u64;
                let end = len * (worker as u64 + 1) / threads as u64;
                scope.spawn(move || {
                    // SAFETY: Hogwild. Workers write disjoint-or-racy f32 rows of
                    // the same allocation; no worker resizes or frees it, and the
                    // scope joins every worker before `params` is used again.
                    let params = unsafe { &mut *shared.0 };
                    let r = trainer.run_shard(corpus, params, epoch, worker, start, end, threads);
                    results.lock().unwrap().push(r);
                });
            }
        });
        let mut stats = TrainStats::default();
        for r in results.into_inner().unwrap() {
            let (s, _) = r?;
            stats.merge(&s);
        }
        self.samples_seen = base_seen + stats.samples_seen;
        stats.lr = self.learning_rate();
        Ok(stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_shard(
        &mut self,
        corpus: &Path,
        params: &mut ModelParams,
        epoch: usize,
        worker: usize,
        start: u64,
        end: u64,
        threads: usize,
    ) -> Result<(TrainStats, u64)> {
        let seed = stream_seed(self.config.seed, epoch, worker);
        let mut stream = SampleStream::open_range(corpus, self.vocab, self.config.stream_options(), seed, start, end)?;
        let mut stats = TrainStats::default();
        let mut batch = Vec::with_capacity(self.config.batch_size);
        let base = self.samples_seen;
        loop {
            batch.clear();
            if stream.fill(&mut batch, self.config.batch_size)? == 0 {
                break;
            }
            // approximate global progress for the decay schedule
            let local = self.samples_seen - base;
            self.samples_seen = base + local * threads as u64;
            let s = self.train_batch(&batch, params)?;
            self.samples_seen = base + local + s.samples_seen;
            stats.merge(&s);
        }
        Ok((stats, self.samples_seen))
    }
}

struct SharedParams(*mut ModelParams);

// SAFETY: see `train_epoch_relaxed`; the pointer outlives every worker.
unsafe impl Sync for SharedParams {}
unsafe impl Send for SharedParams {}

pub fn learning_rate(lr0: f64, seen: u64, planned: f64) -> f64 {
    let frac = 1.0 - seen as f64 / planned;
    lr0 * frac.max(MIN_LR_FRACTION)
}

fn stream_seed(seed: u64, epoch: usize, worker: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((epoch as u64) << 32)
        .wrapping_add(worker as u64)
}

/// Setup for the single-context selector diagnostic.
#[derive(Clone, Debug)]
pub struct DiagnosticConfig {
    pub learner: Learner,
    pub strategy: crate::selection::Strategy,
    pub window: ContextWindow,
    /// Frozen reward per sense: `log L̄` for the policy gradient learner,
    /// the target probability `L̂` for Q-learning.
    pub rewards: Vec<f64>,
    pub lr: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticTrace {
    /// Policy before each step, plus the final policy.
    pub policies: Vec<Vec<f64>>,
    pub selected: Vec<u32>,
}

impl DiagnosticTrace {
    /// `π(selected)` before each step.
    pub fn selected_probs(&self) -> Vec<f64> {
        self.selected
            .iter()
            .zip(&self.policies)
            .map(|(&k, pi)| pi[k as usize])
            .collect()
    }

    pub fn max_probs(&self) -> Vec<f64> {
        self.policies
            .iter()
            .map(|pi| pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Argmax sense of each recorded policy.
    pub fn greedy_senses(&self) -> Vec<usize> {
        self.policies.iter().map(|pi| crate::math::argmax(pi)).collect()
    }
}

/// Model for the single-context diagnostic: word 0 is the target, words
/// `1..=context_len` its context. All Q rows of the target and the context
/// sum lie on one random unit direction `ĉ`, with `Q_k = a_k·ĉ` and
/// `Σ P_j = norm·ĉ`, so the starting logits are `a_k·norm`.
pub fn collinear_diagnostic_setup(
    dim: usize,
    context_len: usize,
    a: &[f64],
    norm: f64,
    seed: u64,
) -> Result<(ModelParams, ContextWindow)> {
    use rand::Rng;
    if dim == 0 || context_len == 0 || a.is_empty() {
        return Err(Error::Config("diagnostic needs dim, context and senses of at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    dir.iter_mut().for_each(|x| *x /= len);
    let mut params = ModelParams::zeros(context_len + 1, dim, a.len());
    let mut rest = vec![0.0f64; dim];
    for j in 1..context_len as u32 {
        for (i, r) in rest.iter_mut().enumerate() {
            let x: f64 = rng.random_range(-0.5..0.5);
            params.p_row_mut(j)[i] = x as f32;
            *r += x;
        }
    }
    for i in 0..dim {
        params.p_row_mut(context_len as u32)[i] = (norm * dir[i] - rest[i]) as f32;
    }
    for (k, ak) in a.iter().enumerate() {
        for i in 0..dim {
            params.q_row_mut(0, k as u32)[i] = (ak * dir[i]) as f32;
        }
    }
    let context: Vec<u32> = (1..=context_len as u32).collect();
    let half = context_len / 2;
    let window = ContextWindow {
        target: 0,
        left: context[..half].to_vec(),
        right: context[half..].to_vec(),
        radius: context_len - half,
    };
    Ok((params, window))
}

/// Repeated selector updates on one fixed context with U and V frozen.
///
/// With every reward negative the policy gradient learner pushes down
/// whichever sense it picks, so a good sense is never locked in.
pub fn run_appendix_a_diagnostic(
    params: &mut ModelParams,
    config: &DiagnosticConfig,
    steps: usize,
) -> Result<DiagnosticTrace> {
    let n = params.senses();
    if config.rewards.len() != n {
        return Err(Error::Config(format!(
            "diagnostic needs one reward per sense ({n}), got {}",
            config.rewards.len()
        )));
    }
    if config.learner == Learner::QLearning && config.rewards.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::Config("Q-learning diagnostic rewards must lie in (0,1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = DiagnosticTrace::default();
    let word = config.window.target;
    for _ in 0..steps {
        let scores = score_senses(&config.window, params);
        let z = select_sense(&scores, config.strategy, &mut rng);
        let reward = config.rewards[z.sense as usize];
        match config.learner {
            Learner::PolicyGradient => policy_gradient_update(z, reward, &config.window, params, config.lr),
            Learner::QLearning => qlearning_update(z, reward, &config.window, params, config.lr),
        }
        trace.policies.push(scores.policy);
        trace.selected.push(z.sense);
    }
    trace.policies.push(score_senses(&config.window, params).policy);
    if !params.p.iter().chain(&params.q).all(|x| x.is_finite()) {
        return Err(Error::NonFinite(format!("selector rows of word {word}")));
    }
    Ok(trace)
}
