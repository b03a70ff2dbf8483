//! Workloads shared by the criterion benchmarks.

use proxsdca::data::{preprocess, synthetic, SyntheticSpec, Task};
use proxsdca::{Loss, Problem, Regularizer};

/// Unit-normalized synthetic SVM problem with a smooth hinge and elastic-net regularizer.
pub fn svm_problem(n: usize, d: usize, lambda: f64, sigma: f64, seed: u64) -> Problem {
    let spec = SyntheticSpec { n, d, seed, ..SyntheticSpec::default() };
    let data = synthetic(&spec).expect("valid synthetic spec");
    let (x, targets) = preprocess(&data, Task::Svm, true).expect("binary labels");
    let reg = if sigma > 0.0 { Regularizer::Elastic { sigma: sigma / lambda } } else { Regularizer::L2 };
    Problem::new(x, Loss::SmoothHinge { gamma: 1.0 }, targets, reg, lambda).expect("valid problem")
}

/// Synthetic multiclass problem with the smooth max-of-hinge loss.
pub fn multiclass_problem(n: usize, d: usize, classes: usize, lambda: f64, seed: u64) -> Problem {
    let spec = SyntheticSpec { n, d, classes, seed, ..SyntheticSpec::default() };
    let data = synthetic(&spec).expect("valid synthetic spec");
    let (x, targets) = preprocess(&data, Task::Multiclass, true).expect("class labels");
    Problem::new(x, Loss::SmoothMaxOfHinge { gamma: 1.0 }, targets, Regularizer::L2, lambda)
        .expect("valid problem")
}
