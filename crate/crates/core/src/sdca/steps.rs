//! Single-coordinate dual updates.

use super::StepOption;
use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{Loss, DOMAIN_TOL};
use crate::model::{DualState, Problem};
use crate::simplex;

const GOLDEN_TOL: f64 = 1e-10;

fn domain(detail: String) -> Error {
    Error::Domain { instance: 0, detail }
}

fn with_instance(e: Error, i: usize) -> Error {
    match e {
        Error::Domain { detail, .. } => Error::Domain { instance: i, detail },
        other => other,
    }
}

/// Exact Option-I maximizer for the squared loss.
pub fn ridge_delta_alpha(alpha: f64, p: f64, y: f64, xnorm2: f64, lambda_n: f64) -> f64 {
    -(alpha + p - y) / (1.0 + xnorm2 / lambda_n)
}

/// Option-I step for the smooth hinge, clipped so that `alpha + delta` stays in `[0, 1]`.
pub fn smooth_hinge_delta_alpha(
    alpha: f64,
    p: f64,
    gamma: f64,
    xnorm2: f64,
    lambda_n: f64,
) -> Result<f64> {
    if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&alpha) {
        return Err(domain(format!("smooth hinge dual {alpha} is outside [0, 1]")));
    }
    let raw = (1.0 - p - gamma * alpha) / (xnorm2 / lambda_n + gamma);
    Ok(raw.min(1.0 - alpha).max(-alpha))
}

/// Option-III step for the logistic loss (`gamma = 4`).
pub fn logistic_step(alpha: f64, p: f64, xnorm2: f64, lambda_n: f64) -> Result<f64> {
    if !(-1.0 - DOMAIN_TOL..=DOMAIN_TOL).contains(&alpha) {
        return Err(domain(format!("logistic dual {alpha} is outside [-1, 0]")));
    }
    let none = crate::losses::LossParam::None;
    let sig = Loss::Logistic.grad(&[p], none)?[0];
    let q = -sig - alpha;
    if q == 0.0 {
        return Ok(0.0);
    }
    let num = Loss::Logistic.value(&[p], none) + Loss::Logistic.conj(&[-alpha], none) + p * alpha
        + 2.0 * q * q;
    let s = (num / (q * q * (4.0 + xnorm2 / lambda_n))).clamp(0.0, 1.0);
    Ok(s * q)
}

/// Option-I step for the smooth max-of-hinge multiclass loss.
///
/// `p_hat` holds `X_i^T w_hat` with `w_hat = w - X_i alpha_i / (lambda n)`, i.e. the
/// primal point with instance `i` removed. Returns the new dual column in the
/// zero-sum convention: `-a_j` off the label and `||a||_1` at the label.
pub fn multiclass_delta_alpha(
    p_hat: &[f64],
    c: &[f64],
    label: usize,
    gamma: f64,
    xnorm2: f64,
    lambda_n: f64,
) -> Vec<f64> {
    let scale = gamma + xnorm2 / lambda_n;
    let mu: Vec<f64> = (0..p_hat.len())
        .filter(|&j| j != label)
        .map(|j| (c[j] + p_hat[j]) / scale)
        .collect();
    let cc = if xnorm2 > 0.0 { 1.0 / (1.0 + gamma * lambda_n / xnorm2) } else { 0.0 };
    let a = simplex::optimize_dual(&mu, cc);
    let mut out = vec![0.0; p_hat.len()];
    let mut it = a.iter();
    for (j, o) in out.iter_mut().enumerate() {
        if j != label {
            *o = -*it.next().unwrap();
        }
    }
    out[label] = a.iter().sum();
    out
}

/// Change in the dual objective if `alpha_i += delta`, from the `i`-th conjugate
/// term and the touched coordinates of `g*` only.
pub fn dual_change(problem: &Problem, state: &DualState, i: usize, delta: &[f64]) -> f64 {
    let ai = state.alpha_i(i);
    let loss = problem.loss();
    let param = problem.param(i);
    let before: Vec<f64> = ai.iter().map(|a| -a).collect();
    let after: Vec<f64> = ai.iter().zip(delta).map(|(a, d)| -(a + d)).collect();
    let c_after = loss.conj(&after, param);
    if !c_after.is_finite() {
        return f64::NEG_INFINITY;
    }
    let c_before = loss.conj(&before, param);
    let reg = problem.reg();
    let v = state.v();
    let mut dg = 0.0;
    problem
        .data()
        .for_each_image(i, delta, 1.0 / problem.lambda_n(), |j, dv| {
            dg += reg.conj_coord_change(j, v[j], dv);
        });
    (c_before - c_after) / problem.n() as f64 - problem.lambda() * dg
}

fn margins(problem: &Problem, state: &DualState, i: usize) -> Vec<f64> {
    let mut p = vec![0.0; problem.k()];
    problem.data().margins(i, state.w(), &mut p);
    p
}

/// `q = -grad phi_i(X_i^T w) - alpha_i` together with the margins.
fn direction(problem: &Problem, state: &DualState, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = margins(problem, state, i);
    let mut q = vec![0.0; p.len()];
    problem.loss().grad_into(&p, problem.param(i), &mut q)?;
    for (qj, aj) in q.iter_mut().zip(state.alpha_i(i)) {
        *qj = -*qj - aj;
    }
    Ok((p, q))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    // the ends are candidates too: the objective is concave but may peak there
    let mid = 0.5 * (lo + hi);
    [0.0, mid, 1.0]
        .into_iter()
        .map(|s| (s, f(s)))
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

/// Step size `s` for Options II-V.
fn step_size(
    problem: &Problem,
    state: &DualState,
    i: usize,
    opt: StepOption,
    p: &[f64],
    q: &[f64],
) -> Result<f64> {
    let gamma = problem
        .loss()
        .gamma()
        .ok_or_else(|| Error::Unsupported(format!("{} loss is not smooth", problem.loss().id())))?;
    let lambda_n = problem.lambda_n();
    let data = problem.data();
    let q2 = linalg::norm2(q);
    let s = match opt {
        StepOption::FixedS => {
            let r2 = data.r2();
            lambda_n * gamma / (r2 + lambda_n * gamma)
        }
        StepOption::AnalyticS | StepOption::RBound => {
            let ai = state.alpha_i(i);
            let param = problem.param(i);
            let neg: Vec<f64> = ai.iter().map(|a| -a).collect();
            let num = problem.loss().value(p, param)
                + problem.loss().conj(&neg, param)
                + linalg::dot(p, ai)
                + 0.5 * gamma * q2;
            let xn = if opt == StepOption::RBound { data.r2() } else { data.norm2(i) };
            num / (q2 * (gamma + xn / lambda_n))
        }
        StepOption::LineSearch => {
            let ai = state.alpha_i(i);
            let param = problem.param(i);
            let pq = linalg::dot(p, q);
            let xq = data.image_norm2(i, q);
            let f = |s: f64| {
                let b: Vec<f64> = ai.iter().zip(q).map(|(a, qj)| -(a + s * qj)).collect();
                -problem.loss().conj(&b, param) - s * pq - s * s * xq / (2.0 * lambda_n)
            };
            golden_max(f, 0.0, 1.0)
        }
        StepOption::ClosedForm => unreachable!("closed forms do not use a step size"),
    };
    Ok(if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) })
}

fn closed_form(problem: &Problem, state: &DualState, i: usize) -> Result<Vec<f64>> {
    let data = problem.data();
    let lambda_n = problem.lambda_n();
    let ai = state.alpha_i(i);
    let p = margins(problem, state, i);
    match (problem.loss(), data.is_multiclass()) {
        (Loss::Squared, false) => {
            let y = match problem.param(i) {
                crate::losses::LossParam::Label(y) => y,
                _ => unreachable!("validated at construction"),
            };
            Ok(vec![ridge_delta_alpha(ai[0], p[0], y, data.norm2(i), lambda_n)])
        }
        (Loss::SmoothHinge { gamma }, false) => {
            Ok(vec![smooth_hinge_delta_alpha(ai[0], p[0], gamma, data.norm2(i), lambda_n)?])
        }
        (Loss::SmoothMaxOfHinge { gamma }, true) => {
            let label = data.label(i).unwrap();
            let xn = data.feature_norm2(i);
            let mut gram = vec![0.0; ai.len()];
            data.gram_apply(i, ai, &mut gram);
            let p_hat: Vec<f64> = p.iter().zip(&gram).map(|(pj, g)| pj - g / lambda_n).collect();
            let c = match problem.param(i) {
                crate::losses::LossParam::Cost(c) => c,
                _ => unreachable!("validated at construction"),
            };
            let mut next = multiclass_delta_alpha(&p_hat, c, label, gamma, xn, lambda_n);
            next[label] = 0.0;
            Ok(next.iter().zip(ai).map(|(n, a)| n - a).collect())
        }
        (loss, _) => Err(Error::Unsupported(format!(
            "no closed-form step for {} loss on this design",
            loss.id()
        ))),
    }
}

/// Proposed `delta alpha_i` for the chosen option, zeroed if it would decrease the dual.
pub fn coordinate_step(
    problem: &Problem,
    state: &DualState,
    i: usize,
    opt: StepOption,
) -> Result<Vec<f64>> {
    let delta = match opt {
        StepOption::ClosedForm => closed_form(problem, state, i).map_err(|e| with_instance(e, i))?,
        StepOption::AnalyticS
            if problem.loss() == Loss::Logistic && !problem.data().is_multiclass() =>
        {
            let p = margins(problem, state, i);
            let d = logistic_step(state.alpha_i(i)[0], p[0], problem.data().norm2(i), problem.lambda_n())
                .map_err(|e| with_instance(e, i))?;
            vec![d]
        }
        _ => {
            let (p, q) = direction(problem, state, i)?;
            if q.iter().all(|x| *x == 0.0) {
                return Ok(q);
            }
            let s = step_size(problem, state, i, opt, &p, &q)?;
            q.iter().map(|x| s * x).collect()
        }
    };
    if delta.iter().any(|d| *d != 0.0) && dual_change(problem, state, i, &delta) < 0.0 {
        return Ok(vec![0.0; delta.len()]);
    }
    Ok(delta)
}

/// `s (u - alpha_i)` for a fixed `s`, without the dual-decrease safeguard.
pub fn scaled_step(problem: &Problem, state: &DualState, i: usize, s: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("step size {s} is outside [0, 1]")));
    }
    let (_, q) = direction(problem, state, i)?;
    Ok(q.iter().map(|x| s * x).collect())
}
