//! Problem definition, dual bookkeeping and duality-gap evaluation.

use crate::error::{Error, Result};
use crate::linalg::{self, FeatureVec};
use crate::losses::{Loss, LossParam};
use crate::regularizers::Regularizer;

/// Number of coordinate updates between from-scratch refreshes of `v`.
pub const REFRESH_INTERVAL: u64 = 1 << 16;

/// The instances `X_1, ..., X_n`.
///
/// Scalar problems store `x_i` directly (`k = 1`). Multiclass problems store
/// the base vector `x_i` and the label `y_i`; the implied `X_i` has columns
/// `vec(x_i (e_j - e_{y_i})^T)` and acts on `w = vec(W)`, class `j` occupying
/// `w[j*d..(j+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMatrix {
    features: usize,
    k: usize,
    rows: Vec<FeatureVec>,
    labels: Option<Vec<usize>>,
    feature_norms: Vec<f64>,
    norms: Vec<f64>,
    r2: f64,
}

impl InstanceMatrix {
    pub fn new(features: usize, rows: Vec<FeatureVec>) -> Result<Self> {
        Self::build(features, 1, rows, None)
    }

    pub fn multiclass(
        features: usize,
        classes: usize,
        rows: Vec<FeatureVec>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "multiclass design needs at least 2 classes, got {classes}"
            )));
        }
        if labels.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} instances",
                labels.len(),
                rows.len()
            )));
        }
        if let Some(bad) = labels.iter().position(|&y| y >= classes) {
            return Err(Error::InvalidParameter(format!(
                "instance {bad} has label {} but there are {classes} classes",
                labels[bad]
            )));
        }
        Self::build(features, classes, rows, Some(labels))
    }

    fn build(
        features: usize,
        k: usize,
        rows: Vec<FeatureVec>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.extent() > features {
                return Err(Error::Dimension(format!(
                    "instance {i} touches feature {} but d = {features}",
                    r.extent() - 1
                )));
            }
        }
        let feature_norms: Vec<f64> = rows.iter().map(FeatureVec::norm2).collect();
        // ||X_i||^2 = k ||x_i||^2 for the multiclass design
        let scale = if labels.is_some() { k as f64 } else { 1.0 };
        let norms: Vec<f64> = feature_norms.iter().map(|x| scale * x).collect();
        let r2 = norms.iter().copied().fold(0.0, f64::max);
        Ok(Self { features, k, rows, labels, feature_norms, norms, r2 })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Feature dimension `d` of each base vector.
    pub fn features(&self) -> usize {
        self.features
    }

    /// Loss output dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of `w` and `v`.
    pub fn dim(&self) -> usize {
        if self.labels.is_some() {
            self.features * self.k
        } else {
            self.features
        }
    }

    pub fn is_multiclass(&self) -> bool {
        self.labels.is_some()
    }

    pub fn row(&self, i: usize) -> &FeatureVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[FeatureVec] {
        &self.rows
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[i])
    }

    /// `||x_i||^2` of the base vector.
    pub fn feature_norm2(&self, i: usize) -> f64 {
        self.feature_norms[i]
    }

    /// Squared operator norm of `X_i`.
    pub fn norm2(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// `out = X_i^T w`.
    pub fn margins(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let x = &self.rows[i];
        match &self.labels {
            None => out[0] = x.dot(w),
            Some(labels) => {
                let d = self.features;
                let y = labels[i];
                let sy = x.dot_at(w, y * d);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = if j == y { 0.0 } else { x.dot_at(w, j * d) - sy };
                }
            }
        }
    }

    /// Coefficients `M a` with which class blocks of `X_i a` scale `x_i`.
    fn class_coefs(&self, i: usize, a: &[f64]) -> Option<Vec<f64>> {
        let y = self.label(i)?;
        let mut m = a.to_vec();
        m[y] = -a.iter().enumerate().filter(|&(j, _)| j != y).map(|(_, v)| v).sum::<f64>();
        Some(m)
    }

    /// Calls `f(index, value)` for every stored entry of `scale * X_i a`.
    pub fn for_each_image(&self, i: usize, a: &[f64], scale: f64, mut f: impl FnMut(usize, f64)) {
        let x = &self.rows[i];
        match self.class_coefs(i, a) {
            None => {
                let s = scale * a[0];
                if s != 0.0 {
                    for (j, v) in x.iter() {
                        f(j, s * v);
                    }
                }
            }
            Some(m) => {
                let d = self.features;
                for (c, mc) in m.iter().enumerate() {
                    let s = scale * mc;
                    if s != 0.0 {
                        for (j, v) in x.iter() {
                            f(c * d + j, s * v);
                        }
                    }
                }
            }
        }
    }

    /// `v += scale * X_i a`.
    pub fn add_image(&self, i: usize, a: &[f64], scale: f64, v: &mut [f64]) {
        let x = &self.rows[i];
        match self.class_coefs(i, a) {
            None => x.axpy_into(scale * a[0], v, 0),
            Some(m) => {
                for (c, mc) in m.iter().enumerate() {
                    if *mc != 0.0 {
                        x.axpy_into(scale * mc, v, c * self.features);
                    }
                }
            }
        }
    }

    /// `||X_i a||^2`.
    pub fn image_norm2(&self, i: usize, a: &[f64]) -> f64 {
        match self.class_coefs(i, a) {
            None => self.feature_norms[i] * a[0] * a[0],
            Some(m) => self.feature_norms[i] * linalg::norm2(&m),
        }
    }

    /// `||x_i||^2 M^T M a`, i.e. `X_i^T X_i a`.
    pub fn gram_apply(&self, i: usize, a: &[f64], out: &mut [f64]) {
        let xn = self.feature_norms[i];
        match self.label(i) {
            None => out[0] = xn * a[0],
            Some(y) => {
                let total: f64 = a.iter().enumerate().filter(|&(j, _)| j != y).map(|(_, v)| v).sum();
                for (j, o) in out.iter_mut().enumerate() {
                    *o = if j == y { 0.0 } else { xn * (a[j] + total) };
                }
            }
        }
    }

    /// Copy with every base vector scaled to unit norm; zero rows stay zero.
    pub fn normalized(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                let n = r.norm2().sqrt();
                if n > 0.0 {
                    r.scale(1.0 / n);
                }
                r
            })
            .collect();
        Self::build(self.features, self.k, rows, self.labels.clone())
            .expect("normalizing keeps the shape valid")
    }
}

/// Per-instance loss parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    None,
    Labels(Vec<f64>),
    /// Row-major `n x k` cost vectors.
    Costs { k: usize, costs: Vec<f64> },
}

impl Targets {
    /// Costs `c_i = 1 - e_{y_i}` for a multiclass design.
    pub fn multiclass(data: &InstanceMatrix) -> Result<Self> {
        if !data.is_multiclass() {
            return Err(Error::Unsupported("design has no class labels".into()));
        }
        let k = data.k();
        let mut costs = vec![1.0; data.n() * k];
        for i in 0..data.n() {
            costs[i * k + data.label(i).unwrap()] = 0.0;
        }
        Ok(Targets::Costs { k, costs })
    }

    pub fn param(&self, i: usize) -> LossParam<'_> {
        match self {
            Targets::None => LossParam::None,
            Targets::Labels(y) => LossParam::Label(y[i]),
            Targets::Costs { k, costs } => LossParam::Cost(&costs[i * k..(i + 1) * k]),
        }
    }
}

/// `min_w (1/n) sum_i phi_i(X_i^T w) + lambda g(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    data: InstanceMatrix,
    loss: Loss,
    targets: Targets,
    reg: Regularizer,
    lambda: f64,
}

impl Problem {
    pub fn new(
        data: InstanceMatrix,
        loss: Loss,
        targets: Targets,
        reg: Regularizer,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let n = data.n();
        match (&loss, &targets) {
            (Loss::Squared, Targets::Labels(y)) if y.len() == n => {}
            (Loss::Squared, _) => {
                return Err(Error::Dimension("squared loss needs one label per instance".into()))
            }
            (l, Targets::Costs { k, costs }) if l.is_vector() => {
                if *k != data.k() || costs.len() != n * k {
                    return Err(Error::Dimension(format!(
                        "cost vectors have dimension {k} but the design has k = {}",
                        data.k()
                    )));
                }
            }
            (l, _) if l.is_vector() => {
                return Err(Error::Dimension(format!("{} loss needs cost vectors", l.id())))
            }
            _ => {}
        }
        if !loss.is_vector() && data.k() != 1 {
            return Err(Error::Dimension(format!(
                "{} loss is scalar but the design has k = {}",
                loss.id(),
                data.k()
            )));
        }
        reg.validate(data.dim())?;
        Ok(Self { data, loss, targets, reg, lambda })
    }

    pub fn data(&self) -> &InstanceMatrix {
        &self.data
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn reg(&self) -> &Regularizer {
        &self.reg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn k(&self) -> usize {
        self.data.k()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn param(&self, i: usize) -> LossParam<'_> {
        self.targets.param(i)
    }

    /// `lambda * n`
    pub fn lambda_n(&self) -> f64 {
        self.lambda * self.n() as f64
    }

    /// Same data and loss parameters with another loss, regularizer or weight.
    pub fn with_loss(&self, loss: Loss) -> Result<Self> {
        Self::new(self.data.clone(), loss, self.targets.clone(), self.reg.clone(), self.lambda)
    }

    pub fn with_reg(&self, reg: Regularizer, lambda: f64) -> Result<Self> {
        Self::new(self.data.clone(), self.loss, self.targets.clone(), reg, lambda)
    }

    /// Condition number `R^2 / (lambda gamma)`; `None` for Lipschitz losses.
    pub fn condition(&self) -> Option<f64> {
        self.loss.gamma().map(|g| self.data.r2() / (self.lambda * g))
    }
}

/// Dual variables with the cached `v = (lambda n)^{-1} sum X_i alpha_i` and `w = grad g*(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub(crate) alpha: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) k: usize,
    pub(crate) epochs: f64,
    pub(crate) updates: u64,
}

impl DualState {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_i(&self, i: usize) -> &[f64] {
        &self.alpha[i * self.k..(i + 1) * self.k]
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn epochs(&self) -> f64 {
        self.epochs
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.alpha, self.w)
    }

    /// Applies `alpha_i += delta`, updating `v` and `w` on the touched coordinates.
    pub fn apply(&mut self, problem: &Problem, i: usize, delta: &[f64]) {
        let k = self.k;
        let mut changed = false;
        for (a, d) in self.alpha[i * k..(i + 1) * k].iter_mut().zip(delta) {
            if *d != 0.0 {
                *a += d;
                changed = true;
            }
        }
        self.updates += 1;
        self.epochs = self.updates as f64 / problem.n() as f64;
        if self.updates.is_multiple_of(REFRESH_INTERVAL) {
            self.refresh(problem);
        } else if changed {
            let scale = 1.0 / problem.lambda_n();
            let reg = problem.reg();
            let (v, w) = (&mut self.v, &mut self.w);
            problem.data().for_each_image(i, delta, scale, |j, dv| {
                v[j] += dv;
                w[j] = reg.conj_grad_coord(j, v[j]);
            });
        }
    }

    /// Recomputes `v` and `w` from `alpha`.
    pub fn refresh(&mut self, problem: &Problem) {
        self.v = compute_v(problem, &self.alpha);
        self.w = problem.reg().conj_grad(&self.v);
    }
}

/// `(lambda n)^{-1} sum_i X_i alpha_i` from scratch.
pub fn compute_v(problem: &Problem, alpha: &[f64]) -> Vec<f64> {
    let k = problem.k();
    let data = problem.data();
    let mut v = vec![0.0; problem.dim()];
    for i in 0..problem.n() {
        let a = &alpha[i * k..(i + 1) * k];
        if a.iter().any(|x| *x != 0.0) {
            data.add_image(i, a, 1.0, &mut v);
        }
    }
    let scale = 1.0 / problem.lambda_n();
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

fn check_alpha(problem: &Problem, alpha: &[f64]) -> Result<()> {
    if alpha.len() != problem.n() * problem.k() {
        return Err(Error::Dimension(format!(
            "alpha has length {} but n*k = {}",
            alpha.len(),
            problem.n() * problem.k()
        )));
    }
    Ok(())
}

/// Builds a consistent state from `alpha`.
pub fn refresh_state(problem: &Problem, alpha: Vec<f64>) -> Result<DualState> {
    check_alpha(problem, &alpha)?;
    conj_terms(problem, &alpha)?;
    let mut state = DualState {
        alpha,
        v: Vec::new(),
        w: Vec::new(),
        k: problem.k(),
        epochs: 0.0,
        updates: 0,
    };
    state.refresh(problem);
    Ok(state)
}

/// The all-zero dual and its primal image.
pub fn zero_state(problem: &Problem) -> DualState {
    refresh_state(problem, vec![0.0; problem.n() * problem.k()])
        .expect("alpha = 0 lies in every conjugate domain")
}

fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// `phi_i^*(-alpha_i)` for every instance, failing on the first domain violation.
fn conj_terms(problem: &Problem, alpha: &[f64]) -> Result<Vec<f64>> {
    let k = problem.k();
    let loss = problem.loss();
    (0..problem.n())
        .map(|i| {
            let a = &alpha[i * k..(i + 1) * k];
            let c = loss.conj(&neg(a), problem.param(i));
            if c.is_finite() {
                Ok(c)
            } else if c == f64::INFINITY {
                Err(Error::Domain {
                    instance: i,
                    detail: format!("-alpha_i = {:?} is outside dom phi* of {}", neg(a), loss.id()),
                })
            } else {
                Err(Error::NonFinite(format!("conjugate of instance {i}")))
            }
        })
        .collect()
}

fn loss_terms(problem: &Problem, w: &[f64]) -> Vec<f64> {
    let k = problem.k();
    let mut a = vec![0.0; k];
    (0..problem.n())
        .map(|i| {
            problem.data().margins(i, w, &mut a);
            problem.loss().value(&a, problem.param(i))
        })
        .collect()
}

/// `P(w)`.
pub fn primal_value(problem: &Problem, w: &[f64]) -> Result<f64> {
    if w.len() != problem.dim() {
        return Err(Error::Dimension(format!(
            "w has length {} but the problem has dimension {}",
            w.len(),
            problem.dim()
        )));
    }
    let avg = linalg::pairwise_sum(&loss_terms(problem, w)) / problem.n() as f64;
    let p = avg + problem.lambda() * problem.reg().value(w);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::NonFinite("primal objective".into()))
    }
}

/// `D(alpha)`, with `v` recomputed from scratch.
pub fn dual_value(problem: &Problem, alpha: &[f64]) -> Result<f64> {
    check_alpha(problem, alpha)?;
    let v = compute_v(problem, alpha);
    dual_value_with_v(problem, alpha, &v)
}

/// `D(alpha)` given a cached `v(alpha)`.
pub fn dual_value_with_v(problem: &Problem, alpha: &[f64], v: &[f64]) -> Result<f64> {
    let conj = linalg::pairwise_sum(&conj_terms(problem, alpha)?);
    Ok(-conj / problem.n() as f64 - problem.lambda() * problem.reg().conj(v))
}

/// Gap `(1/n) sum_i (phi_i(X_i^T w) + phi_i^*(-alpha_i) + w^T X_i alpha_i)` for an
/// arbitrary pair; equals `P(w) - D(alpha)` when `w = grad g*(v(alpha))`.
pub fn gap_at(problem: &Problem, w: &[f64], alpha: &[f64]) -> Result<f64> {
    check_alpha(problem, alpha)?;
    let k = problem.k();
    let conj = conj_terms(problem, alpha)?;
    let mut a = vec![0.0; k];
    let terms: Vec<f64> = (0..problem.n())
        .map(|i| {
            problem.data().margins(i, w, &mut a);
            let ai = &alpha[i * k..(i + 1) * k];
            problem.loss().value(&a, problem.param(i)) + conj[i] + linalg::dot(&a, ai)
        })
        .collect();
    let g = linalg::pairwise_sum(&terms) / problem.n() as f64;
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonFinite("duality gap".into()))
    }
}

/// Objective values at a consistent pair, from one pass over the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    pub primal: f64,
    pub dual: f64,
    /// Decomposed gap; see [`gap_at`].
    pub gap: f64,
}

/// `P(w)`, `D(alpha)` and the gap, taking `v` as given.
pub fn objectives(problem: &Problem, w: &[f64], alpha: &[f64], v: &[f64]) -> Result<Objectives> {
    check_alpha(problem, alpha)?;
    let k = problem.k();
    let n = problem.n() as f64;
    let conj = conj_terms(problem, alpha)?;
    let mut a = vec![0.0; k];
    let mut losses = Vec::with_capacity(problem.n());
    let mut gaps = Vec::with_capacity(problem.n());
    for (i, ci) in conj.iter().enumerate() {
        problem.data().margins(i, w, &mut a);
        let l = problem.loss().value(&a, problem.param(i));
        losses.push(l);
        gaps.push(l + ci + linalg::dot(&a, &alpha[i * k..(i + 1) * k]));
    }
    let lambda = problem.lambda();
    let primal = linalg::pairwise_sum(&losses) / n + lambda * problem.reg().value(w);
    let dual = -linalg::pairwise_sum(&conj) / n - lambda * problem.reg().conj(v);
    let gap = linalg::pairwise_sum(&gaps) / n;
    if primal.is_finite() && dual.is_finite() && gap.is_finite() {
        Ok(Objectives { primal, dual, gap })
    } else {
        Err(Error::NonFinite("objective evaluation".into()))
    }
}

/// Duality gap of a consistent state.
pub fn duality_gap(problem: &Problem, state: &DualState) -> Result<f64> {
    gap_at(problem, &state.w, &state.alpha)
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub epoch: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub wall_ms: f64,
}

/// Per-epoch record of objective values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First epoch at which the primal is within `band` of `target`.
    pub fn epochs_to_band(&self, target: f64, band: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.primal <= target + band).map(|r| r.epoch)
    }

    pub fn min_primal(&self) -> f64 {
        self.rows.iter().map(|r| r.primal).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ridge_zero_x() -> Problem {
        let rows = vec![FeatureVec::from_dense(vec![0.0]), FeatureVec::from_dense(vec![0.0])];
        let data = InstanceMatrix::new(1, rows).unwrap();
        Problem::new(data, Loss::Squared, Targets::Labels(vec![1.0, 1.0]), Regularizer::L2, 1.0)
            .unwrap()
    }

    #[test]
    fn primal_examples() {
        let p = ridge_zero_x();
        assert_eq!(primal_value(&p, &[0.0]).unwrap(), 0.5);

        let data = InstanceMatrix::new(1, vec![FeatureVec::from_dense(vec![1.0])]).unwrap();
        let svm = Problem::new(data, Loss::SmoothHinge { gamma: 1.0 }, Targets::None, Regularizer::L2, 1.0)
            .unwrap();
        assert_eq!(primal_value(&svm, &[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn one_instance_ridge_optimum() {
        // min 1/2 (x w - y)^2 + lambda/2 w^2  =>  w = x y / (x^2 + lambda)
        let (x, y, lambda) = (2.0, 3.0, 0.5);
        let data = InstanceMatrix::new(1, vec![FeatureVec::from_dense(vec![x])]).unwrap();
        let p = Problem::new(data, Loss::Squared, Targets::Labels(vec![y]), Regularizer::L2, lambda)
            .unwrap();
        let w = x * y / (x * x + lambda);
        let expect = 0.5 * (x * w - y).powi(2) + 0.5 * lambda * w * w;
        assert!((primal_value(&p, &[w]).unwrap() - expect).abs() < 1e-15);
        // optimal alpha = y - x w
        let alpha = y - x * w;
        let d = dual_value(&p, &[alpha]).unwrap();
        assert!((d - expect).abs() < 1e-12);
        let st = refresh_state(&p, vec![alpha]).unwrap();
        assert!((st.w()[0] - w).abs() < 1e-15);
        assert!(duality_gap(&p, &st).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gap_at_zero() {
        let rows = vec![FeatureVec::from_dense(vec![0.3, -1.0]), FeatureVec::from_dense(vec![2.0, 0.5])];
        let data = InstanceMatrix::new(2, rows).unwrap();
        let p = Problem::new(data, Loss::Squared, Targets::Labels(vec![1.0, 1.0]), Regularizer::L2, 1.0)
            .unwrap();
        let st = zero_state(&p);
        assert_eq!(dual_value(&p, st.alpha()).unwrap(), 0.0);
        let g = duality_gap(&p, &st).unwrap();
        let pd = primal_value(&p, st.w()).unwrap() - dual_value(&p, st.alpha()).unwrap();
        assert_eq!(g, 0.5);
        assert_eq!(pd, 0.5);
    }

    #[test]
    fn logistic_domain_error() {
        let data = InstanceMatrix::new(1, vec![FeatureVec::from_dense(vec![1.0]); 3]).unwrap();
        let p = Problem::new(data, Loss::Logistic, Targets::None, Regularizer::L2, 1.0).unwrap();
        match dual_value(&p, &[-0.2, 0.5, -0.1]) {
            Err(Error::Domain { instance, .. }) => assert_eq!(instance, 1),
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    #[test]
    fn shifted_refresh() {
        let data = InstanceMatrix::new(2, vec![FeatureVec::from_dense(vec![1.0, 0.0])]).unwrap();
        let z = vec![0.25, -2.0];
        let p = Problem::new(data, Loss::Logistic, Targets::None, Regularizer::L2Shift { z: z.clone() }, 1.0)
            .unwrap();
        let st = zero_state(&p);
        assert_eq!(st.v(), &[0.0, 0.0]);
        assert_eq!(st.w(), z.as_slice());
    }

    #[test]
    fn multiclass_products() {
        // dense oracle: X_i columns vec(x (e_j - e_y)^T)
        let (d, k) = (3, 4);
        let x = vec![0.5, -1.0, 2.0];
        let data =
            InstanceMatrix::multiclass(d, k, vec![FeatureVec::from_dense(x.clone())], vec![2]).unwrap();
        let mut cols = vec![vec![0.0; d * k]; k];
        for (j, col) in cols.iter_mut().enumerate() {
            if j == 2 {
                continue;
            }
            for r in 0..d {
                col[j * d + r] += x[r];
                col[2 * d + r] -= x[r];
            }
        }
        let w: Vec<f64> = (0..d * k).map(|t| (t as f64 * 0.37).sin()).collect();
        let mut m = vec![0.0; k];
        data.margins(0, &w, &mut m);
        for j in 0..k {
            assert!((m[j] - linalg::dot(&cols[j], &w)).abs() < 1e-12);
        }
        let a = vec![-0.1, -0.3, 0.0, -0.2];
        let mut img = vec![0.0; d * k];
        data.add_image(0, &a, 1.0, &mut img);
        let mut oracle = vec![0.0; d * k];
        for j in 0..k {
            for t in 0..d * k {
                oracle[t] += cols[j][t] * a[j];
            }
        }
        assert!(linalg::dist2(&img, &oracle) < 1e-24);
        assert!((data.image_norm2(0, &a) - linalg::norm2(&oracle)).abs() < 1e-12);
        let mut g = vec![0.0; k];
        data.gram_apply(0, &a, &mut g);
        for j in 0..k {
            assert!((g[j] - linalg::dot(&cols[j], &oracle)).abs() < 1e-12);
        }
        // operator norm^2 = k ||x||^2: largest eigenvalue of X^T X
        assert!((data.norm2(0) - k as f64 * 5.25).abs() < 1e-12);
    }

    #[test]
    fn norms_and_r2() {
        let rows = vec![
            FeatureVec::from_pairs(5, vec![(0, 3.0), (4, 4.0)]),
            FeatureVec::from_dense(vec![1.0, 1.0, 0.0, 0.0, 0.0]),
        ];
        let data = InstanceMatrix::new(5, rows).unwrap();
        assert_eq!(data.norms(), &[25.0, 2.0]);
        assert_eq!(data.r2(), 25.0);
        assert!((data.normalized().r2() - 1.0).abs() < 1e-15);
        let bad = InstanceMatrix::new(3, vec![FeatureVec::from_pairs(5, vec![(4, 1.0)])]);
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn trace_band() {
        let mut t = ConvergenceTrace::new();
        for (e, p) in [(0.0, 1.0), (1.0, 0.5), (2.0, 0.1005)] {
            t.push(TraceRow { epoch: e, primal: p, dual: 0.0, gap: p, wall_ms: 0.0 });
        }
        assert_eq!(t.epochs_to_band(0.1, 1e-3), Some(2.0));
        assert_eq!(t.epochs_to_band(0.0, 1e-3), None);
        assert_eq!(t.min_primal(), 0.1005);
    }
}
