//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use proxsdca::{FeatureVec, InstanceMatrix, Loss, LossParam, Problem, Regularizer, Targets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `max_a a b - phi(a)` over `a` in `[-50, 50]` with step `1e-3`.
pub fn grid_conj(loss: Loss, p: LossParam<'_>, b: f64) -> f64 {
    (0..=100_000)
        .map(|t| -50.0 + t as f64 * 1e-3)
        .map(|a| a * b - loss.value(&[a], p))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Projection onto the capped simplex by enumerating supports and whether
/// the sum constraint binds.
pub fn project_oracle(mu: &[f64]) -> Vec<f64> {
    let k = mu.len();
    let mut best = vec![0.0; k];
    let mut best_d = sq_dist(&best, mu);
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
        let sum: f64 = support.iter().map(|&j| mu[j]).sum();
        let thetas = [0.0, (sum - 1.0) / support.len() as f64];
        for theta in thetas {
            if theta < 0.0 {
                continue;
            }
            let mut b = vec![0.0; k];
            for &j in &support {
                b[j] = mu[j] - theta;
            }
            let feasible = b.iter().all(|&x| x >= -1e-15) && b.iter().sum::<f64>() <= 1.0 + 1e-12;
            let d = sq_dist(&b, mu);
            if feasible && d < best_d {
                best_d = d;
                best = b;
            }
        }
    }
    best
}

/// Projection onto `{a >= 0, sum a = beta}` by the sort-and-threshold rule.
pub fn scaled_simplex(mu: &[f64], beta: f64) -> Vec<f64> {
    if beta == 0.0 {
        return vec![0.0; mu.len()];
    }
    let mut s = mu.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, v) in s.iter().enumerate() {
        cum += v;
        let t = (cum - beta) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    mu.iter().map(|m| (m - theta).max(0.0)).collect()
}

pub fn optimize_dual_objective(a: &[f64], mu: &[f64], c: f64) -> f64 {
    let beta: f64 = a.iter().sum();
    sq_dist(a, mu) + c * beta * beta
}

/// Grid over `beta` in `[0, 1]` (step `1e-3`) with the exact inner projection.
pub fn optimize_dual_oracle(mu: &[f64], c: f64) -> f64 {
    (0..=1000)
        .map(|t| t as f64 * 1e-3)
        .map(|beta| optimize_dual_objective(&scaled_simplex(mu, beta), mu, c))
        .fold(f64::INFINITY, f64::min)
}

/// Golden-section maximization of a concave function on `[lo, hi]`.
pub fn argmax_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-12 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

/// Random dense-ish instances with entries in `[-1, 1]`, optionally unit-normalized.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, unit: bool) -> Vec<FeatureVec> {
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if unit {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= norm);
            }
            FeatureVec::from_dense(x)
        })
        .collect()
}

/// Smooth-hinge problem on random unit-norm instances.
pub fn random_svm(seed: u64, n: usize, d: usize, lambda: f64, reg: Regularizer) -> Problem {
    let mut r = rng(seed);
    let rows = random_rows(&mut r, n, d, true);
    let data = InstanceMatrix::new(d, rows).unwrap();
    Problem::new(data, Loss::SmoothHinge { gamma: 1.0 }, Targets::None, reg, lambda).unwrap()
}

/// Linear least squares fit quality helper: least-squares slope of `ys` on `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
