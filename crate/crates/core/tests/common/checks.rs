//! Randomized oracle comparisons; each returns the worst error it saw.

use std::collections::BTreeSet;

use muse::corpus::{ContextWindow, Vocabulary};
use muse::evaluation::{self, knn_senses, Metric, ScwsItem, SynonymQuestion};
use muse::params::{ModelParams, SenseRef};
use muse::representation::{reward_bernoulli, reward_exact, sgns_step};
use muse::selection::{encode_context, score_with_context};
use muse::trainer::{cross_entropy_gradient, policy_log_gradient};
use rand::Rng;

use super::*;

const H: f32 = 1e-3;

fn random_window(rng: &mut impl Rng, vocab: usize) -> ContextWindow {
    let target = rng.random_range(0..vocab as u32);
    let left: Vec<u32> = (0..rng.random_range(0..3)).map(|_| rng.random_range(0..vocab as u32)).collect();
    let right: Vec<u32> = (0..rng.random_range(1..3)).map(|_| rng.random_range(0..vocab as u32)).collect();
    window(target, &left, &right)
}

fn selector_coords(w: &ContextWindow, p: &ModelParams) -> Vec<(Slot, usize)> {
    let d = p.dim();
    let n = p.senses();
    let mut out = Vec::new();
    let words: BTreeSet<u32> = w.left.iter().chain(&w.right).copied().collect();
    for j in words {
        out.extend((0..d).map(|i| (Slot::P, j as usize * d + i)));
    }
    let base = w.target as usize * n * d;
    out.extend((0..n * d).map(|i| (Slot::Q, base + i)));
    out
}

fn read(p: &ModelParams, slot: Slot, i: usize) -> f64 {
    (match slot {
        Slot::P => p.p[i],
        Slot::Q => p.q[i],
        Slot::U => p.u[i],
        Slot::V => p.v[i],
    }) as f64
}

/// Skip-gram objective with frozen negatives against central differences.
pub fn sgns_gradient_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let vocab = 5;
    let n = r.random_range(1..4);
    let d = r.random_range(3..8);
    let p = random_params(vocab, d, n, 0.8, &mut r);
    let total = vocab * n;
    let target = SenseRef::from_flat(r.random_range(0..total), n);
    let colloc = SenseRef::from_flat(r.random_range(0..total), n);
    let negs: Vec<usize> = (0..3)
        .map(|_| loop {
            let z = r.random_range(0..total);
            if z != colloc.flat {
                break z;
            }
        })
        .collect();
    let mut stepped = p.clone();
    sgns_step(target, colloc, &negs, &mut stepped, 1.0).unwrap();
    let mut coords: Vec<(Slot, usize)> = (0..d).map(|i| (Slot::U, target.flat * d + i)).collect();
    let rows: BTreeSet<usize> = negs.iter().copied().chain([colloc.flat]).collect();
    for row in rows {
        coords.extend((0..d).map(|i| (Slot::V, row * d + i)));
    }
    let f = |q: &ModelParams| sgns_value(target, colloc, &negs, q);
    let analytic: Vec<f64> = coords.iter().map(|&(s, i)| read(&stepped, s, i) - read(&p, s, i)).collect();
    let numeric: Vec<f64> = coords.iter().map(|&(s, i)| central_difference(&p, s, i, H, &f)).collect();
    relative_error(&analytic, &numeric)
}

/// `∂ log π / ∂(P, Q)` against central differences.
pub fn log_policy_gradient_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let vocab = 6;
    let n = r.random_range(2..5);
    let d = r.random_range(3..8);
    let p = random_params(vocab, d, n, 0.6, &mut r);
    let w = random_window(&mut r, vocab);
    let sense = r.random_range(0..n as u32);
    let c = encode_context(&w, &p);
    let scores = score_with_context(w.target, &c, &p);
    let g = policy_log_gradient(sense, &scores, &c, &p);
    let mut tensor = ModelParams::zeros(vocab, d, n);
    g.apply(&w, &mut tensor, 1.0);
    let coords = selector_coords(&w, &p);
    let f = |q: &ModelParams| log_policy(sense, &w, q);
    let analytic: Vec<f64> = coords.iter().map(|&(s, i)| read(&tensor, s, i)).collect();
    let numeric: Vec<f64> = coords.iter().map(|&(s, i)| central_difference(&p, s, i, H, &f)).collect();
    relative_error(&analytic, &numeric)
}

/// `∂H(p, σ(Q_k·c)) / ∂(P, Q)` against central differences.
pub fn cross_entropy_gradient_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let vocab = 6;
    let n = r.random_range(1..4);
    let d = r.random_range(3..8);
    let p = random_params(vocab, d, n, 0.6, &mut r);
    let w = random_window(&mut r, vocab);
    let sense = r.random_range(0..n as u32);
    let target: f64 = r.random_range(0.01..0.99);
    let c = encode_context(&w, &p);
    let scores = score_with_context(w.target, &c, &p);
    let g = cross_entropy_gradient(sense, target, &scores, &c, &p);
    let mut tensor = ModelParams::zeros(vocab, d, n);
    g.apply(&w, &mut tensor, 1.0);
    let coords = selector_coords(&w, &p);
    let f = |q: &ModelParams| cross_entropy(sense, target, &w, q);
    let analytic: Vec<f64> = coords.iter().map(|&(s, i)| read(&tensor, s, i)).collect();
    let numeric: Vec<f64> = coords.iter().map(|&(s, i)| central_difference(&p, s, i, H, &f)).collect();
    relative_error(&analytic, &numeric)
}

/// Pairwise ordering of exact categorical vs Bernoulli likelihood; returns
/// the number of disagreements.
pub fn ordering_violations(seed: u64) -> usize {
    let mut r = rng(seed);
    let n = r.random_range(1..3);
    let vocab = r.random_range(2..=10 / n);
    let d = r.random_range(2..6);
    let p = random_params(vocab, d, n, 1.0, &mut r);
    let total = vocab * n;
    let target = SenseRef::from_flat(r.random_range(0..total), n);
    let mut violations = 0;
    for a in 0..total {
        for b in 0..total {
            let (za, zb) = (SenseRef::from_flat(a, n), SenseRef::from_flat(b, n));
            let exact = reward_exact(target, za, &p).unwrap() < reward_exact(target, zb, &p).unwrap();
            let bern = reward_bernoulli(target, za, &p) < reward_bernoulli(target, zb, &p);
            if exact != bern {
                violations += 1;
            }
        }
    }
    violations
}

/// `Σ_k π_k r_k ∇log π_k` against the closed form of `∇ Σ_k π_k r_k`.
pub fn reinforce_expectation_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (vocab, n) = (5, 3);
    let d = r.random_range(2..7);
    let p = random_params(vocab, d, n, 0.7, &mut r);
    let w = random_window(&mut r, vocab);
    let rewards: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..0.0)).collect();
    let c = encode_context(&w, &p);
    let scores = score_with_context(w.target, &c, &p);

    let mut q_exp = vec![vec![0.0; d]; n];
    let mut c_exp = vec![0.0; d];
    for k in 0..n {
        let g = policy_log_gradient(k as u32, &scores, &c, &p);
        let weight = scores.policy[k] * rewards[k];
        for (sense, row) in &g.q_rows {
            for (acc, x) in q_exp[*sense as usize].iter_mut().zip(row) {
                *acc += weight * x;
            }
        }
        for (acc, x) in c_exp.iter_mut().zip(&g.context) {
            *acc += weight * x;
        }
    }

    // ∂J/∂ℓ_j = π_j (r_j − r̄)
    let c64 = context_sum(&w, &p);
    let pi = softmax(&logits(&w, &p));
    let rbar: f64 = pi.iter().zip(&rewards).map(|(a, b)| a * b).sum();
    let mut worst: f64 = 0.0;
    let mut c_true = vec![0.0; d];
    for j in 0..n {
        let coef = pi[j] * (rewards[j] - rbar);
        for i in 0..d {
            worst = worst.max((q_exp[j][i] - coef * c64[i]).abs());
            c_true[i] += coef * p.q_row(w.target, j as u32)[i] as f64;
        }
    }
    for i in 0..d {
        worst = worst.max((c_exp[i] - c_true[i]).abs());
    }
    worst
}

fn toy_vocab(words: usize) -> Vocabulary {
    Vocabulary::from_ordered((0..words).map(|i| (format!("w{i}"), 10)).collect(), 1).unwrap()
}

fn oracle_window(tokens: &[String], target: usize, target_word: &str, vocab: &Vocabulary, m: usize) -> ContextWindow {
    let ids: Vec<u32> = tokens.iter().map(|t| vocab.id(t).unwrap()).collect();
    let lo = target.saturating_sub(m);
    let hi = (target + m + 1).min(ids.len());
    window(vocab.id(target_word).unwrap(), &ids[lo..target], &ids[target + 1..hi])
}

/// MaxSimC, AvgSimC, answer_synonym and k-NN against brute-force oracles;
/// returns the largest absolute deviation (index mismatches count as 1).
pub fn metric_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let words = 8;
    let n = r.random_range(1..4);
    let d = r.random_range(2..6);
    let vocab = toy_vocab(words);
    let p = random_params(words, d, n, 1.0, &mut r);
    let m = 2;
    let mut worst: f64 = 0.0;

    let tokens = |r: &mut ChaCha8Rng| -> Vec<String> {
        (0..r.random_range(1..7)).map(|_| format!("w{}", r.random_range(0..words))).collect()
    };
    let (wi, wj) = (r.random_range(0..words), r.random_range(0..words));
    let mut ci = tokens(&mut r);
    let mut cj = tokens(&mut r);
    let ti = r.random_range(0..ci.len());
    let tj = r.random_range(0..cj.len());
    ci[ti] = format!("w{wi}");
    cj[tj] = format!("w{wj}");
    let item = ScwsItem {
        word_i: format!("w{wi}"),
        word_j: format!("w{wj}"),
        context_i: ci.clone(),
        target_i: ti,
        context_j: cj.clone(),
        target_j: tj,
        human_score: 5.0,
    };
    let win_i = oracle_window(&ci, ti, &item.word_i, &vocab, m);
    let win_j = oracle_window(&cj, tj, &item.word_j, &vocab, m);
    let (li, lj) = (logits(&win_i, &p), logits(&win_j, &p));
    let (pi, pj) = (softmax(&li), softmax(&lj));
    let u = |w: u32, k: usize| p.u_row(w as usize * n + k);
    let max_oracle = cos64(u(win_i.target, argmax_lowest(&li)), u(win_j.target, argmax_lowest(&lj)));
    let mut avg_oracle = 0.0;
    for k in 0..n {
        for l in 0..n {
            avg_oracle += pi[k] * pj[l] * cos64(u(win_i.target, k), u(win_j.target, l));
        }
    }
    worst = worst.max((evaluation::max_sim_c(&item, &p, &vocab, m).unwrap() - max_oracle).abs());
    worst = worst.max((evaluation::avg_sim_c(&item, &p, &vocab, m).unwrap() - avg_oracle).abs());

    // synonym: exhaustive sense pairs, first maximum wins
    let mut cands: Vec<usize> = (0..words).collect();
    for i in (1..cands.len()).rev() {
        cands.swap(i, r.random_range(0..=i));
    }
    let q = cands.pop().unwrap();
    let four: Vec<usize> = cands[..4].to_vec();
    let line = format!("w{q} | w{} w{} w{} w{} | a", four[0], four[1], four[2], four[3]);
    let question = SynonymQuestion::parse(&line).unwrap();
    let mut best = (0, f64::NEG_INFINITY);
    for (idx, &c) in four.iter().enumerate() {
        let mut s = f64::NEG_INFINITY;
        for k in 0..n {
            for l in 0..n {
                s = s.max(cos64(u(q as u32, k), u(c as u32, l)));
            }
        }
        if s > best.1 {
            best = (idx, s);
        }
    }
    if evaluation::answer_synonym(&question, &p, &vocab) != Some(best.0) {
        worst = worst.max(1.0);
    }

    // k-NN: full sort, own senses excluded, ties by flat index
    let query = SenseRef::from_flat(r.random_range(0..words * n), n);
    for metric in [Metric::Cosine, Metric::Collocation] {
        let mut all: Vec<(usize, f64)> = (0..words * n)
            .filter(|f| f / n != query.word as usize)
            .map(|f| {
                let s = match metric {
                    Metric::Cosine => cos64(p.u_row(query.flat), p.u_row(f)),
                    Metric::Collocation => dot64(p.u_row(query.flat), p.v_row(f)),
                };
                (f, s)
            })
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got = knn_senses(query, &p, 5, metric);
        for (g, o) in got.iter().zip(&all) {
            if g.sense.flat != o.0 {
                worst = worst.max(1.0);
            }
            worst = worst.max((g.score - o.1).abs());
        }
    }
    worst
}

/// Spearman against `1 − 6Σd²/(n(n²−1))` on tie-free permutations.
pub fn spearman_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let len = r.random_range(2..30);
    let mut a: Vec<usize> = (0..len).collect();
    let mut b: Vec<usize> = (0..len).collect();
    for v in [&mut a, &mut b] {
        for i in (1..len).rev() {
            v.swap(i, r.random_range(0..=i));
        }
    }
    let d2: f64 = a.iter().zip(&b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum();
    let n = len as f64;
    let oracle = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    // strictly increasing transforms must not matter
    let fa: Vec<f64> = a.iter().map(|&x| (x as f64 * 0.37).exp()).collect();
    let fb: Vec<f64> = b.iter().map(|&x| x as f64 * 3.0 - 1.0).collect();
    (evaluation::spearman(&fa, &fb).unwrap() - oracle).abs()
}
