//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

pub mod bench;
pub mod checks;

use muse::corpus::ContextWindow;
use muse::params::{ModelParams, SenseRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Model with every tensor filled uniformly in `[-scale, scale]`.
pub fn random_params(vocab: usize, dim: usize, senses: usize, scale: f32, rng: &mut impl Rng) -> ModelParams {
    let mut p = ModelParams::zeros(vocab, dim, senses);
    for t in [&mut p.p, &mut p.q, &mut p.u, &mut p.v] {
        for x in t.iter_mut() {
            *x = rng.random_range(-scale..scale);
        }
    }
    p
}

/// Window for `target` with the given context ids split left/right.
pub fn window(target: u32, left: &[u32], right: &[u32]) -> ContextWindow {
    ContextWindow {
        target,
        left: left.to_vec(),
        right: right.to_vec(),
        radius: left.len().max(right.len()).max(1),
    }
}

pub fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

pub fn cos64(a: &[f32], b: &[f32]) -> f64 {
    let na = dot64(a, a).sqrt();
    let nb = dot64(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot64(a, b) / (na * nb)
    }
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `Σ_j P_j` over the context, in f64.
pub fn context_sum(w: &ContextWindow, p: &ModelParams) -> Vec<f64> {
    let mut c = vec![0.0; p.dim()];
    for j in w.left.iter().chain(&w.right) {
        for (ci, x) in c.iter_mut().zip(p.p_row(*j)) {
            *ci += *x as f64;
        }
    }
    c
}

pub fn logits(w: &ContextWindow, p: &ModelParams) -> Vec<f64> {
    let c = context_sum(w, p);
    (0..p.senses() as u32)
        .map(|k| p.q_row(w.target, k).iter().zip(&c).map(|(q, c)| *q as f64 * c).sum())
        .collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

pub fn log_policy(sense: u32, w: &ContextWindow, p: &ModelParams) -> f64 {
    softmax(&logits(w, p))[sense as usize].ln()
}

pub fn cross_entropy(sense: u32, target: f64, w: &ContextWindow, p: &ModelParams) -> f64 {
    let q = sig(logits(w, p)[sense as usize]);
    -target * q.ln() - (1.0 - target) * (1.0 - q).ln()
}

pub fn sgns_value(target: SenseRef, colloc: SenseRef, negs: &[usize], p: &ModelParams) -> f64 {
    let u = p.u_row(target.flat);
    let mut v = sig(dot64(u, p.v_row(colloc.flat))).ln();
    for &n in negs {
        v += sig(-dot64(u, p.v_row(n))).ln();
    }
    v
}

/// Which tensor a coordinate lives in.
#[derive(Clone, Copy, Debug)]
pub enum Slot {
    P,
    Q,
    U,
    V,
}

fn tensor(p: &mut ModelParams, s: Slot) -> &mut Vec<f32> {
    match s {
        Slot::P => &mut p.p,
        Slot::Q => &mut p.q,
        Slot::U => &mut p.u,
        Slot::V => &mut p.v,
    }
}

/// Central difference of `f` at `(slot, index)`, dividing by the step
/// actually representable in f32.
pub fn central_difference(p: &ModelParams, slot: Slot, index: usize, h: f32, f: &dyn Fn(&ModelParams) -> f64) -> f64 {
    let mut plus = p.clone();
    let mut minus = p.clone();
    let x = tensor(&mut plus, slot)[index];
    tensor(&mut plus, slot)[index] = x + h;
    tensor(&mut minus, slot)[index] = x - h;
    let span = (tensor(&mut plus, slot)[index] as f64) - (tensor(&mut minus, slot)[index] as f64);
    (f(&plus) - f(&minus)) / span
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Closed-form trajectory of the single-context diagnostic when every Q row
/// and the context sum lie on one unit direction: `Q_k = a_k·ĉ`, `c = s·ĉ`.
///
/// Greedy selection of `k*`, then simultaneously
/// `a_j += η r (1[j=k*] − π_j) s` and `s += L η r (a_k* − Σ π_j a_j)`.
/// Returns the policy before each step plus the final one.
pub fn collinear_policy_gradient_oracle(a0: &[f64], s0: f64, context_len: usize, lr: f64, reward: f64, steps: usize) -> Vec<Vec<f64>> {
    let mut a = a0.to_vec();
    let mut s = s0;
    let mut out = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let logits: Vec<f64> = a.iter().map(|x| x * s).collect();
        let pi = softmax(&logits);
        let k = argmax_lowest(&logits);
        let abar: f64 = pi.iter().zip(&a).map(|(p, x)| p * x).sum();
        let ds = context_len as f64 * lr * reward * (a[k] - abar);
        for j in 0..a.len() {
            let ind = if j == k { 1.0 } else { 0.0 };
            a[j] += lr * reward * (ind - pi[j]) * s;
        }
        s += ds;
        out.push(pi);
    }
    out.push(softmax(&a.iter().map(|x| x * s).collect::<Vec<_>>()));
    out
}

pub fn argmax_lowest(x: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}
