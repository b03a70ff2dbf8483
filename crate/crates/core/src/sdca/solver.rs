use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{coordinate_step, SolveOptions, SolveOutcome, StoppingStrategy};
use crate::error::{Error, Result};
use crate::model::{
    compute_v, dual_value, objectives, primal_value, refresh_state, zero_state, ConvergenceTrace,
    DualState, Problem, TraceRow,
};

/// Default averaging window `n + ceil(R^2 / (lambda gamma))`.
pub fn window_length(problem: &Problem) -> Result<u64> {
    let cond = problem
        .condition()
        .ok_or_else(|| Error::Unsupported("averaging window needs a smooth loss".into()))?;
    Ok(problem.n() as u64 + cond.ceil() as u64)
}

/// Iterations after which the expected gap is at most `epsilon`:
/// `(n + R^2/(lambda gamma)) log((n + R^2/(lambda gamma)) gap0 / epsilon)`.
pub fn theorem1_budget(problem: &Problem, gap0: f64, epsilon: f64) -> Result<u64> {
    let cond = problem
        .condition()
        .ok_or_else(|| Error::Unsupported("iteration budget needs a smooth loss".into()))?;
    let c = problem.n() as f64 + cond;
    Ok((c * (c * gap0 / epsilon).ln().max(0.0)).ceil() as u64)
}

/// Lazily accumulated sums of `alpha` and `w` over a window of iterates.
struct Window {
    start: u64,
    sum_alpha: Vec<f64>,
    last_alpha: Vec<u64>,
    sum_w: Vec<f64>,
    last_w: Vec<u64>,
}

impl Window {
    fn new(n: usize, k: usize, dim: usize, start: u64) -> Self {
        Self {
            start,
            sum_alpha: vec![0.0; n * k],
            last_alpha: vec![start; n],
            sum_w: vec![0.0; dim],
            last_w: vec![start; dim],
        }
    }

    fn reset(&mut self, start: u64) {
        self.start = start;
        self.sum_alpha.iter_mut().for_each(|x| *x = 0.0);
        self.last_alpha.iter_mut().for_each(|x| *x = start);
        self.sum_w.iter_mut().for_each(|x| *x = 0.0);
        self.last_w.iter_mut().for_each(|x| *x = start);
    }

    /// Called before the step that produces iterate `next` changes instance `i`.
    fn before_step(&mut self, problem: &Problem, state: &DualState, i: usize, delta: &[f64], next: u64) {
        let k = problem.k();
        let held = (next - self.last_alpha[i]) as f64;
        for (s, a) in self.sum_alpha[i * k..(i + 1) * k].iter_mut().zip(state.alpha_i(i)) {
            *s += held * a;
        }
        self.last_alpha[i] = next;
        let w = state.w();
        let (sum_w, last_w) = (&mut self.sum_w, &mut self.last_w);
        problem.data().for_each_image(i, delta, 1.0, |j, _| {
            sum_w[j] += (next - last_w[j]) as f64 * w[j];
            last_w[j] = next;
        });
    }

    /// Averages of `alpha` and `w` over iterates `start..end`.
    fn average(&self, state: &DualState, k: usize, end: u64) -> (Vec<f64>, Vec<f64>) {
        let len = (end - self.start) as f64;
        let alpha = self
            .sum_alpha
            .iter()
            .enumerate()
            .map(|(t, s)| (s + (end - self.last_alpha[t / k]) as f64 * state.alpha()[t]) / len)
            .collect();
        let w = self
            .sum_w
            .iter()
            .enumerate()
            .map(|(j, s)| (s + (end - self.last_w[j]) as f64 * state.w()[j]) / len)
            .collect();
        (alpha, w)
    }
}

/// Iterates sampled uniformly from a window.
struct Samples {
    rng: ChaCha8Rng,
    m: usize,
    start: u64,
    targets: Vec<u64>,
    taken: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Samples {
    fn plan(&mut self, start: u64, end: u64) {
        self.start = start;
        self.taken.clear();
        self.targets = (0..self.m).map(|_| self.rng.random_range(start + 1..=end)).collect();
        self.targets.sort_unstable();
    }

    fn observe(&mut self, t: u64, state: &DualState) {
        let hits = self.targets.iter().filter(|&&x| x == t).count();
        for _ in 0..hits {
            self.taken.push((state.alpha().to_vec(), state.w().to_vec()));
        }
    }
}

enum Tracker {
    Final,
    Averaged { window: Window, len: u64 },
    Random { samples: Samples, len: u64 },
}

/// First epoch boundary at or after `t`.
fn epoch_ceil(t: u64, n: u64) -> u64 {
    t.div_ceil(n) * n
}

/// Runs Prox-SDCA from `alpha0` (zero when `None`).
pub fn solve(problem: &Problem, alpha0: Option<&[f64]>, options: &SolveOptions) -> Result<SolveOutcome> {
    if problem.loss().gamma().is_none() {
        return Err(Error::Unsupported(format!(
            "Prox-SDCA needs a smooth loss; smooth {} first",
            problem.loss().id()
        )));
    }
    if !(options.epsilon >= 0.0) || !(options.max_epochs >= 0.0) {
        return Err(Error::InvalidParameter("epsilon and max_epochs must be non-negative".into()));
    }
    let clock = Instant::now();
    let n = problem.n();
    let nn = n as u64;
    let k = problem.k();
    let mut state = match alpha0 {
        Some(a) => refresh_state(problem, a.to_vec())?,
        None => zero_state(problem),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut cap = (options.max_epochs * n as f64).ceil() as u64;
    if let Some(m) = options.max_iterations {
        cap = cap.min(m);
    }
    let mut tracker = match options.stopping {
        StoppingStrategy::FinalIterate => Tracker::Final,
        StoppingStrategy::Averaged { window } => Tracker::Averaged {
            window: Window::new(n, k, problem.dim(), 0),
            len: window.map_or_else(|| window_length(problem), Ok)?,
        },
        StoppingStrategy::RandomSample { m, window } => {
            if m == 0 {
                return Err(Error::InvalidParameter("random stopping needs m >= 1".into()));
            }
            let len = window.map_or_else(|| window_length(problem), Ok)?;
            let mut srng = ChaCha8Rng::seed_from_u64(options.seed);
            srng.set_stream(1);
            let mut samples = Samples { rng: srng, m, start: 0, targets: Vec::new(), taken: Vec::new() };
            samples.plan(0, epoch_ceil(len, nn).min(cap).max(1));
            Tracker::Random { samples, len }
        }
    };

    let mut trace = ConvergenceTrace::new();
    let mut t: u64 = 0;
    loop {
        let obj = objectives(problem, state.w(), state.alpha(), state.v())?;
        let wall_ms = if options.timing { clock.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        trace.push(TraceRow {
            epoch: t as f64 / n as f64,
            primal: obj.primal,
            dual: obj.dual,
            gap: obj.primal - obj.dual,
            wall_ms,
        });

        // candidate certified pair for this strategy
        let mut candidate: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        if t == 0 || matches!(tracker, Tracker::Final) {
            if obj.gap <= options.epsilon {
                candidate = Some((state.alpha().to_vec(), state.w().to_vec(), obj.gap));
            }
        } else {
            match &mut tracker {
                Tracker::Averaged { window, len } if t - window.start >= *len => {
                    let (alpha, w) = window.average(&state, k, t);
                    let gap = primal_value(problem, &w)? - dual_value(problem, &alpha)?;
                    if gap <= options.epsilon {
                        candidate = Some((alpha, w, gap));
                    }
                    window.reset(t);
                }
                Tracker::Random { samples, len } if t - samples.start >= *len => {
                    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
                    for (alpha, w) in samples.taken.drain(..) {
                        let v = compute_v(problem, &alpha);
                        let gap = objectives(problem, &w, &alpha, &v)?.gap;
                        if best.as_ref().is_none_or(|b| gap < b.2) {
                            best = Some((alpha, w, gap));
                        }
                    }
                    if let Some(b) = best.filter(|b| b.2 <= options.epsilon) {
                        candidate = Some(b);
                    }
                    let end = epoch_ceil(t + *len, nn).min(cap.max(t + 1));
                    samples.plan(t, end);
                }
                _ => {}
            }
        }
        if let Some((alpha, w, gap)) = candidate {
            return Ok(SolveOutcome {
                w,
                alpha,
                gap,
                trace,
                iterations: t,
                epochs: t as f64 / n as f64,
                converged: true,
            });
        }
        if t >= cap {
            log::debug!("Prox-SDCA stopped at the iteration cap with gap {}", obj.gap);
            let (alpha, w) = state.into_parts();
            return Ok(SolveOutcome {
                w,
                alpha,
                gap: obj.gap,
                trace,
                iterations: t,
                epochs: t as f64 / n as f64,
                converged: false,
            });
        }

        let end = (t + nn).min(cap);
        while t < end {
            let i = rng.random_range(0..n);
            let delta = coordinate_step(problem, &state, i, options.option)?;
            let moved = delta.iter().any(|d| *d != 0.0);
            if moved {
                if let Tracker::Averaged { window, .. } = &mut tracker {
                    window.before_step(problem, &state, i, &delta, t + 1);
                }
            }
            state.apply(problem, i, &delta);
            t += 1;
            if let Tracker::Random { samples, .. } = &mut tracker {
                samples.observe(t, &state);
            }
        }
    }
}

/// Result of [`restart_amplify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Amplified {
    pub outcome: SolveOutcome,
    /// Solves run, including the successful one.
    pub attempts: usize,
}

/// Repeats budget-limited solves with fresh seeds until one certifies `epsilon`.
///
/// Each attempt gets `budget(problem, gap0, epsilon)` iterations and succeeds
/// with probability at least 1/2 when the budget is twice the expected-gap
/// bound, so `1 + ceil(log2(1/delta))` attempts fail together with
/// probability at most `delta`.
pub fn restart_amplify(
    problem: &Problem,
    epsilon: f64,
    delta: f64,
    options: &SolveOptions,
    budget: impl Fn(&Problem, f64, f64) -> Result<u64>,
) -> Result<Amplified> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must be in (0, 1), got {delta}")));
    }
    let max_attempts = 1 + (1.0 / delta).log2().ceil() as usize;
    let start = zero_state(problem);
    let gap0 = crate::model::duality_gap(problem, &start)?;
    let iterations = budget(problem, gap0, epsilon)?;
    let mut attempts = 0;
    loop {
        let opts = SolveOptions {
            epsilon,
            stopping: StoppingStrategy::FinalIterate,
            max_iterations: Some(iterations),
            max_epochs: f64::INFINITY,
            seed: options.seed.wrapping_add(attempts as u64),
            ..options.clone()
        };
        let outcome = solve(problem, None, &opts)?;
        attempts += 1;
        if outcome.converged || attempts == max_attempts {
            return Ok(Amplified { outcome, attempts });
        }
        log::debug!("attempt {attempts} ended with gap {}; restarting", outcome.gap);
    }
}
