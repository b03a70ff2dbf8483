use criterion::{criterion_group, criterion_main, Criterion};
use proxsdca::fista::{fista_solve, FistaOptions};
use proxsdca::model::zero_state;
use proxsdca::sdca::{coordinate_step, solve, SolveOptions, StepOption};
use proxsdca::{accelerated_solve, AccelOptions};
use proxsdca_bench::{multiclass_problem, svm_problem};

fn epochs(c: &mut Criterion) {
    let problem = svm_problem(2000, 100, 1e-4, 1e-5, 1);
    let mut group = c.benchmark_group("ten_epochs");
    group.sample_size(10);
    for option in [StepOption::ClosedForm, StepOption::AnalyticS, StepOption::LineSearch] {
        group.bench_function(format!("prox_sdca_{option:?}"), |b| {
            let opts = SolveOptions { option, epsilon: 0.0, max_epochs: 10.0, timing: false, ..Default::default() };
            b.iter(|| solve(&problem, None, &opts).unwrap())
        });
    }
    group.bench_function("fista", |b| {
        let opts = FistaOptions { max_epochs: 10, epsilon: None, timing: false };
        b.iter(|| fista_solve(&problem, &opts).unwrap())
    });
    group.bench_function("accel", |b| {
        let opts = AccelOptions { epsilon: 1e-12, max_epochs: 10.0, timing: false, ..Default::default() };
        b.iter(|| accelerated_solve(&problem, &opts).unwrap())
    });
    group.finish();
}

fn steps(c: &mut Criterion) {
    let problem = multiclass_problem(500, 50, 5, 1e-3, 2);
    let state = zero_state(&problem);
    c.bench_function("multiclass_closed_form_step", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % problem.n();
            coordinate_step(&problem, &state, i, StepOption::ClosedForm).unwrap()
        })
    });
}

criterion_group!(benches, epochs, steps);
criterion_main!(benches);
