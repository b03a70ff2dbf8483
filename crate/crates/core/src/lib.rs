//! Proximal stochastic dual coordinate ascent for regularized loss minimization.
//!
//! The crate solves `min_w (1/n) sum_i phi_i(X_i^T w) + lambda g(w)` through its
//! dual, with an accelerated outer loop for ill-conditioned problems and an
//! accelerated proximal gradient baseline.

pub mod accel;
pub mod data;
pub mod error;
pub mod fista;
pub mod linalg;
pub mod losses;
pub mod model;
pub mod regularizers;
pub mod sdca;
pub mod simplex;

pub use accel::{accelerated_solve, lasso_driver, lipschitz_driver, AccelOptions, AccelOutcome, AccelStop};
pub use error::{Error, Result};
pub use fista::{fista_solve, FistaOptions};
pub use linalg::FeatureVec;
pub use losses::{Loss, LossParam};
pub use model::{
    dual_value, duality_gap, primal_value, refresh_state, ConvergenceTrace, DualState,
    InstanceMatrix, Problem, Targets, TraceRow,
};
pub use regularizers::Regularizer;
pub use sdca::{solve, SolveOptions, SolveOutcome, StepOption, StoppingStrategy};
