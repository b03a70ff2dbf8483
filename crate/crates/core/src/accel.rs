//! Accelerated Prox-SDCA: an outer proximal-point loop whose subproblems
//! `P(w) + kappa/2 ||w - y||^2` are solved by warm-started Prox-SDCA.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    compute_v, dual_value_with_v, duality_gap, primal_value, zero_state, ConvergenceTrace,
    InstanceMatrix, Problem, Targets, TraceRow,
};
use crate::regularizers::Regularizer;
use crate::losses::Loss;
use crate::sdca::{self, SolveOptions, SolveOutcome, StepOption, StoppingStrategy};

/// Acceleration pays off only when `R^2 / (gamma lambda)` exceeds this multiple of `n`.
pub const GUARD_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelParams {
    pub kappa: f64,
    pub mu: f64,
    pub rho: f64,
    pub eta: f64,
    pub beta: f64,
}

impl AccelParams {
    /// `xi_1 = (1 + eta^-2) (P(0) - D(0))`.
    pub fn xi1(&self, gap0: f64) -> f64 {
        (1.0 + self.eta.powi(-2)) * gap0
    }

    /// `xi_t = (1 - eta/2)^(t-1) xi_1`.
    pub fn xi(&self, xi1: f64, t: usize) -> f64 {
        (1.0 - self.eta / 2.0).powi(t as i32 - 1) * xi1
    }

    /// Inner accuracy requested at outer step `t` given `xi_{t-1}`.
    pub fn inner_target(&self, xi_prev: f64) -> f64 {
        self.eta / (2.0 * (1.0 + self.eta.powi(-2))) * xi_prev
    }

    /// Outer iteration count after which the schedule guarantees `epsilon`.
    pub fn outer_bound(&self, xi1: f64, epsilon: f64) -> f64 {
        1.0 + (2.0 / self.eta) * (xi1 / epsilon).ln()
    }

    /// `(1 + rho/mu) eps_t + rho kappa / (2 mu) ||w_t - y_{t-1}||^2`.
    pub fn certificate(&self, eps_t: f64, dist2: f64) -> f64 {
        (1.0 + self.rho / self.mu) * eps_t + self.rho * self.kappa / (2.0 * self.mu) * dist2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceleration {
    Enabled(AccelParams),
    /// The problem is well conditioned; plain Prox-SDCA is the better choice.
    Disabled { condition: f64, threshold: f64 },
}

pub fn accel_params(lambda: f64, gamma: f64, r2: f64, n: usize) -> Acceleration {
    let nf = n as f64;
    let condition = r2 / (gamma * lambda);
    if condition <= GUARD_FACTOR * nf {
        return Acceleration::Disabled { condition, threshold: GUARD_FACTOR * nf };
    }
    let kappa = r2 / (gamma * nf) - lambda;
    let mu = lambda / 2.0;
    let rho = mu + kappa;
    let eta = (mu / rho).sqrt();
    let beta = (1.0 - eta) / (1.0 + eta);
    Acceleration::Enabled(AccelParams { kappa, mu, rho, eta, beta })
}

/// `lambda g(w) + kappa/2 ||w||^2 - kappa w^T y` rewritten as `lambda~ g~(w)`.
pub fn build_shifted_problem(problem: &Problem, kappa: f64, y: &[f64]) -> Result<Problem> {
    let lambda = problem.lambda();
    let lt = lambda + kappa;
    let z: Vec<f64> = y.iter().map(|v| kappa / lt * v).collect();
    let reg = match problem.reg() {
        Regularizer::L2 => Regularizer::L2Shift { z },
        Regularizer::Elastic { sigma } => Regularizer::ElasticShift { sigma: sigma * lambda / lt, z },
        other => {
            return Err(Error::Unsupported(format!(
                "acceleration needs an l2 or elastic base regularizer, got {}",
                other.id()
            )))
        }
    };
    problem.with_reg(reg, lt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelOptions {
    pub epsilon: f64,
    pub seed: u64,
    pub inner_option: StepOption,
    /// Cap on each inner call, in epochs.
    pub inner_max_epochs: f64,
    /// Cap on the total number of inner epochs.
    pub max_epochs: f64,
    pub timing: bool,
}

impl Default for AccelOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            seed: 0,
            inner_option: StepOption::AnalyticS,
            inner_max_epochs: 20.0,
            max_epochs: f64::INFINITY,
            timing: true,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelIterate {
    pub t: usize,
    pub xi: f64,
    pub target: f64,
    /// Gap reached by the inner solve.
    pub eps_t: f64,
    pub certificate: f64,
    /// Original objective at `w_t`.
    pub primal: f64,
    pub inner_epochs: f64,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelStop {
    /// `t` reached the schedule's guaranteed count.
    OuterBound,
    /// The computable suboptimality certificate fell below epsilon.
    Certificate,
    /// The epoch budget ran out first.
    Budget,
    /// Acceleration was not applicable and plain Prox-SDCA ran instead.
    Vanilla,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelOutcome {
    /// Final `w`, `alpha`, and an upper bound on `P(w) - P(w*)` in `gap`.
    pub outcome: SolveOutcome,
    pub params: Option<AccelParams>,
    pub xi1: f64,
    pub iterates: Vec<AccelIterate>,
    pub stop: AccelStop,
}

fn vanilla(problem: &Problem, options: &AccelOptions) -> Result<AccelOutcome> {
    let opts = SolveOptions {
        option: options.inner_option,
        stopping: StoppingStrategy::FinalIterate,
        epsilon: options.epsilon,
        max_epochs: if options.max_epochs.is_finite() { options.max_epochs } else { 1e4 },
        max_iterations: None,
        seed: options.seed,
        timing: options.timing,
    };
    let outcome = sdca::solve(problem, None, &opts)?;
    Ok(AccelOutcome { outcome, params: None, xi1: f64::NAN, iterates: Vec::new(), stop: AccelStop::Vanilla })
}

pub fn accelerated_solve(problem: &Problem, options: &AccelOptions) -> Result<AccelOutcome> {
    let gamma = problem
        .loss()
        .gamma()
        .ok_or_else(|| Error::Unsupported("acceleration needs a smooth loss".into()))?;
    if !(options.epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let params = match accel_params(problem.lambda(), gamma, problem.data().r2(), problem.n()) {
        Acceleration::Enabled(p) => p,
        Acceleration::Disabled { condition, threshold } => {
            log::info!(
                "condition number {condition:.3e} <= {threshold:.3e}; running plain Prox-SDCA"
            );
            return vanilla(problem, options);
        }
    };
    let clock = Instant::now();
    let wall = || if options.timing { clock.elapsed().as_secs_f64() * 1e3 } else { 0.0 };

    let start = zero_state(problem);
    let gap0 = duality_gap(problem, &start)?;
    let p0 = primal_value(problem, start.w())?;
    let xi1 = params.xi1(gap0);
    let bound = params.outer_bound(xi1, options.epsilon);

    let mut trace = ConvergenceTrace::new();
    let mut best_dual = p0 - gap0;
    trace.push(TraceRow { epoch: 0.0, primal: p0, dual: best_dual, gap: gap0, wall_ms: wall() });
    let (mut alpha, mut w_prev) = start.into_parts();
    let mut y = w_prev.clone();
    let mut xi_prev = xi1;
    let mut epochs = 0.0;
    let mut iterations = 0;
    let mut iterates = Vec::new();
    let mut t = 1;
    loop {
        t += 1;
        let shifted = build_shifted_problem(problem, params.kappa, &y)?;
        let target = params.inner_target(xi_prev);
        let inner_opts = SolveOptions {
            option: options.inner_option,
            stopping: StoppingStrategy::FinalIterate,
            epsilon: target,
            max_epochs: options.inner_max_epochs.min(options.max_epochs - epochs).max(0.0),
            max_iterations: None,
            seed: options.seed.wrapping_add(t as u64),
            timing: false,
        };
        let inner = sdca::solve(&shifted, Some(&alpha), &inner_opts)?;
        if !inner.converged {
            log::warn!(
                "inner solve at outer step {t} stopped with gap {:.3e} above its target {target:.3e}",
                inner.gap
            );
        }
        epochs += inner.epochs;
        iterations += inner.iterations;
        alpha = inner.alpha;
        let w = inner.w;
        let eps_t = inner.gap;
        let certificate = params.certificate(eps_t, linalg::dist2(&w, &y));
        let xi = params.xi(xi1, t);

        let primal = primal_value(problem, &w)?;
        let v = compute_v(problem, &alpha);
        best_dual = best_dual.max(dual_value_with_v(problem, &alpha, &v)?);
        trace.push(TraceRow { epoch: epochs, primal, dual: best_dual, gap: primal - best_dual, wall_ms: wall() });
        iterates.push(AccelIterate {
            t,
            xi,
            target,
            eps_t,
            certificate,
            primal,
            inner_epochs: inner.epochs,
            inner_converged: inner.converged,
        });

        let stop = if certificate <= options.epsilon {
            Some(AccelStop::Certificate)
        } else if t as f64 >= bound {
            Some(AccelStop::OuterBound)
        } else if epochs >= options.max_epochs {
            Some(AccelStop::Budget)
        } else {
            None
        };
        if let Some(stop) = stop {
            let gap = certificate.min(primal - best_dual);
            let outcome = SolveOutcome {
                w,
                alpha,
                gap,
                trace,
                iterations,
                epochs,
                converged: stop != AccelStop::Budget,
            };
            return Ok(AccelOutcome { outcome, params: Some(params), xi1, iterates, stop });
        }

        // y_t = w_t + beta (w_t - w_{t-1})
        y = w.iter().zip(&w_prev).map(|(a, b)| a + params.beta * (a - b)).collect();
        w_prev = w;
        xi_prev = xi;
    }
}

/// Result of [`lipschitz_driver`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedOutcome {
    pub gamma: f64,
    /// Accuracy requested on the smoothed problem.
    pub target: f64,
    pub smoothed: Problem,
    pub result: AccelOutcome,
}

/// Solves a hinge-type problem to `epsilon` by smoothing with `gamma = epsilon`
/// and solving the smooth problem to `epsilon / 2`.
pub fn lipschitz_driver(problem: &Problem, options: &AccelOptions) -> Result<SmoothedOutcome> {
    let epsilon = options.epsilon;
    let loss = problem.loss();
    if loss.lipschitz().is_none() {
        return Err(Error::Unsupported(format!("{} loss is not Lipschitz", loss.id())));
    }
    let smoothed = problem.with_loss(loss.smooth(epsilon)?)?;
    let target = epsilon / 2.0;
    let result = accelerated_solve(&smoothed, &AccelOptions { epsilon: target, ..options.clone() })?;
    Ok(SmoothedOutcome { gamma: epsilon, target, smoothed, result })
}

/// `lambda = epsilon (sigma / ybar)^2` and `sigma' = sigma / lambda`.
pub fn lasso_params(ybar: f64, sigma: f64, epsilon: f64) -> (f64, f64) {
    let lambda = epsilon * (sigma / ybar).powi(2);
    (lambda, sigma / lambda)
}

/// `(1/2n) sum (x_i^T w - y_i)^2 + sigma ||w||_1`.
pub fn lasso_objective(data: &InstanceMatrix, y: &[f64], sigma: f64, w: &[f64]) -> f64 {
    let r: Vec<f64> = data.rows().iter().zip(y).map(|(x, yi)| (x.dot(w) - yi).powi(2)).collect();
    linalg::pairwise_sum(&r) / (2.0 * data.n() as f64) + sigma * w.iter().map(|x| x.abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoOutcome {
    pub w: Vec<f64>,
    /// `(lambda, sigma')`, absent when every target is zero.
    pub params: Option<(f64, f64)>,
    pub result: Option<AccelOutcome>,
}

/// Solves the L1-regularized least squares problem to `epsilon` through an
/// elastic-net surrogate.
pub fn lasso_driver(
    data: &InstanceMatrix,
    y: &[f64],
    sigma: f64,
    options: &AccelOptions,
) -> Result<LassoOutcome> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if y.len() != data.n() {
        return Err(Error::Dimension(format!("{} targets for {} instances", y.len(), data.n())));
    }
    let ybar = y.iter().map(|v| v * v).sum::<f64>() / (2.0 * data.n() as f64);
    if ybar == 0.0 {
        return Ok(LassoOutcome { w: vec![0.0; data.dim()], params: None, result: None });
    }
    let (lambda, sigma_prime) = lasso_params(ybar, sigma, options.epsilon);
    let problem = Problem::new(
        data.clone(),
        Loss::Squared,
        Targets::Labels(y.to_vec()),
        Regularizer::Elastic { sigma: sigma_prime },
        lambda,
    )?;
    let result = accelerated_solve(&problem, &AccelOptions { epsilon: options.epsilon / 2.0, ..options.clone() })?;
    Ok(LassoOutcome { w: result.outcome.w.clone(), params: Some((lambda, sigma_prime)), result: Some(result) })
}
