//! Prox-SDCA: randomized dual coordinate ascent with a duality-gap stopping rule.

mod solver;
mod steps;

pub use solver::{restart_amplify, solve, theorem1_budget, window_length, Amplified};
pub use steps::{
    coordinate_step, dual_change, logistic_step, multiclass_delta_alpha, ridge_delta_alpha,
    scaled_step, smooth_hinge_delta_alpha,
};

use crate::model::ConvergenceTrace;

/// How `delta alpha_i` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepOption {
    /// Exact maximizer of the quadratic lower bound (squared, smooth hinge,
    /// smooth max-of-hinge on a multiclass design).
    ClosedForm,
    /// `s` maximizing the bound along `u - alpha`, by golden-section search.
    LineSearch,
    /// Closed-form `s` using `||X_i||`.
    AnalyticS,
    /// Closed-form `s` using `R` in place of `||X_i||`.
    RBound,
    /// `s = lambda n gamma / (R^2 + lambda n gamma)`.
    FixedS,
}

impl StepOption {
    pub const ALL: [StepOption; 5] = [
        StepOption::ClosedForm,
        StepOption::LineSearch,
        StepOption::AnalyticS,
        StepOption::RBound,
        StepOption::FixedS,
    ];
}

/// Which iterate the gap test is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingStrategy {
    FinalIterate,
    /// Average over a trailing window of at least `window` iterations
    /// (default `n + ceil(R^2 / (lambda gamma))`).
    Averaged { window: Option<u64> },
    /// Best of `m` iterates sampled uniformly from such a window.
    RandomSample { m: usize, window: Option<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub option: StepOption,
    pub stopping: StoppingStrategy,
    pub epsilon: f64,
    /// Passes over the data before giving up.
    pub max_epochs: f64,
    /// Hard cap on coordinate steps; the tighter of this and `max_epochs` applies.
    pub max_iterations: Option<u64>,
    pub seed: u64,
    /// Record wall-clock time in the trace; off gives reproducible traces.
    pub timing: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            option: StepOption::AnalyticS,
            stopping: StoppingStrategy::FinalIterate,
            epsilon: 1e-6,
            max_epochs: 100.0,
            max_iterations: None,
            seed: 0,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub w: Vec<f64>,
    /// Row-major `n x k`.
    pub alpha: Vec<f64>,
    pub gap: f64,
    pub trace: ConvergenceTrace,
    pub iterations: u64,
    pub epochs: f64,
    pub converged: bool,
}
