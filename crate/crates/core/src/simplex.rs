//! Sort-based solvers over the capped simplex `S = {b >= 0 : sum(b) <= 1}`.
//!
//! [`project`] is the Euclidean projection onto `S`; [`optimize_dual`] solves
//! `min ||a - mu||^2 + C beta^2` over `a >= 0, sum(a) = beta <= 1`, the
//! per-instance subproblem of the multiclass coordinate step.

use std::cmp::Ordering;

const INTERVAL_TOL: f64 = 1e-12;

/// A point of `S`: non-negative with coordinates summing to at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedSimplexPoint(pub Vec<f64>);

impl CappedSimplexPoint {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.0.iter().all(|&b| b >= 0.0) && self.l1() <= 1.0 + tol
    }
}

/// Indices of `values` sorted by decreasing value; ties keep index order.
fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    order
}

/// Euclidean projection of `mu` onto `S`.
pub fn project(mu: &[f64]) -> CappedSimplexPoint {
    let clipped: Vec<f64> = mu.iter().map(|&m| m.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return CappedSimplexPoint(clipped);
    }
    let order = order_desc(mu);
    let mut cumsum = 0.0;
    let mut best_j = 1;
    let mut best_sum = clipped[order[0]];
    for (j, &idx) in order.iter().enumerate() {
        cumsum += clipped[idx];
        let rank = (j + 1) as f64;
        if rank * clipped[idx] + 1.0 - cumsum > 0.0 {
            best_j = j + 1;
            best_sum = cumsum;
        }
    }
    let theta = (best_sum - 1.0) / best_j as f64;
    CappedSimplexPoint(mu.iter().map(|&m| (m - theta).max(0.0)).collect())
}

/// Objective of the multiclass subproblem, `||a - mu||^2 + C (sum a)^2`.
pub fn optimize_dual_objective(a: &[f64], mu: &[f64], c: f64) -> f64 {
    let beta: f64 = a.iter().sum();
    crate::linalg::dist2(a, mu) + c * beta * beta
}

/// Minimizes `||a - mu||^2 + C beta^2` subject to `a >= 0`, `sum(a) = beta <= 1`.
///
/// Scans the breakpoints `z_j = min(cumsum_j - j * mu_(j), 1)` of the sorted,
/// clipped `mu` for the first interval containing the stationary mass
/// `cumsum_j / (1 + j C)`. When no interval does, the optimum sits on an
/// endpoint: mass one (projection with the active set ending where the
/// breakpoints first reach one) or `a = 0`.
pub fn optimize_dual(mu: &[f64], c: f64) -> Vec<f64> {
    debug_assert!(c >= 0.0);
    let m = mu.len();
    if m == 0 {
        return Vec::new();
    }
    let order = order_desc(mu);
    let sorted: Vec<f64> = order.iter().map(|&i| mu[i].max(0.0)).collect();
    let mut cumsum = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &s in &sorted {
        acc += s;
        cumsum.push(acc);
    }
    // z[j - 1] holds the 1-based breakpoint z_j; z[m] = 1.
    let mut z: Vec<f64> = (0..m)
        .map(|j| (cumsum[j] - (j + 1) as f64 * sorted[j]).min(1.0))
        .collect();
    z.push(1.0);

    let threshold = |active: usize, mass: f64| (cumsum[active - 1] - mass) / active as f64;
    let shrink = |theta: f64| -> Vec<f64> { mu.iter().map(|&x| (x - theta).max(0.0)).collect() };

    for j in 1..=m {
        let candidate = cumsum[j - 1] / (1.0 + j as f64 * c);
        if candidate >= z[j - 1] - INTERVAL_TOL && candidate <= z[j] + INTERVAL_TOL {
            return shrink(threshold(j, candidate));
        }
    }

    // Boundary: sum(a) = 1. z_1 = 0 < 1, so the first binding index is >= 2
    // and the active set is everything before it.
    let first_binding = (1..=m + 1).find(|&j| z[j - 1] >= 1.0).unwrap_or(m + 1);
    let active = (first_binding - 1).max(1);
    let a = shrink(threshold(active, 1.0));
    if crate::linalg::dist2(&a, mu) + c <= crate::linalg::norm2(mu) {
        a
    } else {
        vec![0.0; m]
    }
}
