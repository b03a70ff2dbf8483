//! FISTA on the composite split `[avg loss + lambda/2 ||w||^2 - lambda z^T w] + lambda sigma' ||w||_1`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{dual_value, primal_value, ConvergenceTrace, Problem, TraceRow};
use crate::regularizers::Regularizer;
use crate::sdca::SolveOutcome;

#[derive(Debug, Clone, PartialEq)]
pub struct FistaState {
    pub w: Vec<f64>,
    /// Extrapolated point where the next gradient is taken.
    pub u: Vec<f64>,
    pub t_k: f64,
    /// `1 / L` with `L = R^2 / gamma + lambda`.
    pub step: f64,
}

/// `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
pub fn next_momentum(t_k: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt())
}

pub fn fista_init(problem: &Problem) -> Result<FistaState> {
    let gamma = problem
        .loss()
        .gamma()
        .ok_or_else(|| Error::Unsupported("FISTA needs a smooth loss".into()))?;
    let l = problem.data().r2() / gamma + problem.lambda();
    let w = vec![0.0; problem.dim()];
    Ok(FistaState { u: w.clone(), w, t_k: 1.0, step: 1.0 / l })
}

/// Gradient of the smooth part at `u`.
pub fn smooth_grad(problem: &Problem, u: &[f64]) -> Result<Vec<f64>> {
    let k = problem.k();
    let n = problem.n() as f64;
    let data = problem.data();
    let mut g = vec![0.0; problem.dim()];
    let mut a = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..problem.n() {
        data.margins(i, u, &mut a);
        problem.loss().grad_into(&a, problem.param(i), &mut d)?;
        if d.iter().any(|x| *x != 0.0) {
            data.add_image(i, &d, 1.0 / n, &mut g);
        }
    }
    let lambda = problem.lambda();
    for (j, (gj, uj)) in g.iter_mut().zip(u).enumerate() {
        *gj += lambda * (uj - problem.reg().shift(j));
    }
    Ok(g)
}

pub fn fista_step(problem: &Problem, state: &FistaState) -> Result<FistaState> {
    let g = smooth_grad(problem, &state.u)?;
    let shrink = Regularizer::Elastic { sigma: state.step * problem.lambda() * problem.reg().l1_weight() };
    let target: Vec<f64> = state.u.iter().zip(&g).map(|(u, g)| u - state.step * g).collect();
    let w = shrink.conj_grad(&target);
    let t_next = next_momentum(state.t_k);
    let m = (state.t_k - 1.0) / t_next;
    let u = w.iter().zip(&state.w).map(|(a, b)| a + m * (a - b)).collect();
    Ok(FistaState { w, u, t_k: t_next, step: state.step })
}

/// Dual point `alpha_i = -grad phi_i(X_i^T w)`.
pub fn gradient_dual(problem: &Problem, w: &[f64]) -> Result<Vec<f64>> {
    let k = problem.k();
    let mut alpha = vec![0.0; problem.n() * k];
    let mut a = vec![0.0; k];
    for i in 0..problem.n() {
        problem.data().margins(i, w, &mut a);
        let out = &mut alpha[i * k..(i + 1) * k];
        problem.loss().grad_into(&a, problem.param(i), out)?;
        out.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaOptions {
    /// One epoch is one full gradient.
    pub max_epochs: usize,
    /// Stop once the gap to the best dual bound reaches this value.
    pub epsilon: Option<f64>,
    pub timing: bool,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self { max_epochs: 100, epsilon: None, timing: true }
    }
}

pub fn fista_solve(problem: &Problem, options: &FistaOptions) -> Result<SolveOutcome> {
    let clock = Instant::now();
    let mut state = fista_init(problem)?;
    let mut trace = ConvergenceTrace::new();
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_alpha = vec![0.0; problem.n() * problem.k()];
    let mut epoch = 0;
    loop {
        let primal = primal_value(problem, &state.w)?;
        let alpha = gradient_dual(problem, &state.w)?;
        let dual = dual_value(problem, &alpha)?;
        if dual > best_dual {
            best_dual = dual;
            best_alpha = alpha;
        }
        let gap = primal - best_dual;
        let wall_ms = if options.timing { clock.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        trace.push(TraceRow { epoch: epoch as f64, primal, dual: best_dual, gap, wall_ms });
        let converged = options.epsilon.is_some_and(|e| gap <= e);
        if converged || epoch >= options.max_epochs {
            return Ok(SolveOutcome {
                w: state.w,
                alpha: best_alpha,
                gap,
                trace,
                iterations: epoch as u64,
                epochs: epoch as f64,
                converged,
            });
        }
        state = fista_step(problem, &state)?;
        epoch += 1;
    }
}
