//! LibSVM ingestion, preprocessing and a synthetic data generator.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::FeatureVec;
use crate::model::{InstanceMatrix, Targets};

/// Raw labelled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: usize,
    pub rows: Vec<FeatureVec>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

pub fn parse_libsvm(reader: impl BufRead) -> Result<Dataset> {
    let mut raw = Vec::new();
    let mut labels = Vec::new();
    let mut features = 0;
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = ln + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let mut tokens = body.split_whitespace();
        let label: f64 = tokens
            .next()
            .unwrap()
            .parse()
            .map_err(|_| err(format!("bad label in `{body}`")))?;
        let mut pairs = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad index `{idx}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value `{val}`")));
            }
            features = features.max(idx);
            pairs.push((idx - 1, val));
        }
        raw.push(pairs);
        labels.push(label);
    }
    if raw.is_empty() {
        return Err(Error::EmptyData);
    }
    let rows = raw.into_iter().map(|p| FeatureVec::from_pairs(features, p)).collect();
    Ok(Dataset { features, rows, labels })
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

/// Writes values with the shortest representation that round-trips exactly.
pub fn write_libsvm(data: &Dataset, mut out: impl Write) -> Result<()> {
    for (row, label) in data.rows.iter().zip(&data.labels) {
        write!(out, "{label}")?;
        for (j, v) in row.iter() {
            if v != 0.0 {
                write!(out, " {}:{v}", j + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// How labels enter the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Labels are regression targets.
    Regression,
    /// `x_i <- -y_i x_i`, for `log(1 + e^a)`.
    Logistic,
    /// `x_i <- y_i x_i`, for the hinge family.
    Svm,
    /// Distinct labels become classes `0..k` in increasing order.
    Multiclass,
}

fn check_binary(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|y| *y != 1.0 && *y != -1.0) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "instance {i} has label {} but a binary task needs +-1",
            labels[i]
        ))),
        None => Ok(()),
    }
}

/// Builds the design and loss parameters for `task`.
pub fn preprocess(data: &Dataset, task: Task, normalize: bool) -> Result<(InstanceMatrix, Targets)> {
    let mut rows = data.rows.clone();
    if normalize {
        for (i, r) in rows.iter_mut().enumerate() {
            let n = r.norm2().sqrt();
            if n > 0.0 {
                r.scale(1.0 / n);
            } else {
                log::warn!("instance {i} is the zero vector; left unnormalized");
            }
        }
    }
    match task {
        Task::Regression => {
            Ok((InstanceMatrix::new(data.features, rows)?, Targets::Labels(data.labels.clone())))
        }
        Task::Logistic | Task::Svm => {
            check_binary(&data.labels)?;
            let sign = if task == Task::Logistic { -1.0 } else { 1.0 };
            for (r, y) in rows.iter_mut().zip(&data.labels) {
                r.scale(sign * y);
            }
            Ok((InstanceMatrix::new(data.features, rows)?, Targets::None))
        }
        Task::Multiclass => {
            let mut classes = BTreeMap::new();
            for y in &data.labels {
                if !y.is_finite() {
                    return Err(Error::InvalidParameter(format!("label {y} is not finite")));
                }
                classes.entry(y.to_bits() as i64 ^ i64::MIN).or_insert(*y);
            }
            let mut sorted: Vec<f64> = classes.into_values().collect();
            sorted.sort_by(f64::total_cmp);
            let index = |y: f64| sorted.iter().position(|s| *s == y).unwrap();
            let labels = data.labels.iter().map(|y| index(*y)).collect();
            let design = InstanceMatrix::multiclass(data.features, sorted.len(), rows, labels)?;
            let targets = Targets::multiclass(&design)?;
            Ok((design, targets))
        }
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Probability that a feature is present in an instance.
    pub density: f64,
    /// Probability of flipping (or reassigning) a label.
    pub label_noise: f64,
    /// 1 or 2 gives binary `+-1` labels, more gives classes `0..classes`.
    pub classes: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n: 2000, d: 100, density: 0.1, label_noise: 0.05, classes: 2, seed: 0 }
    }
}

/// Gaussian sparse instances labelled by a planted linear model.
pub fn synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::EmptyData);
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) || !(0.0..=1.0).contains(&spec.label_noise) {
        return Err(Error::InvalidParameter("density must be in (0, 1] and noise in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.classes.max(2);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let planted: Vec<f64> = (0..spec.d * k).map(|_| normal()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut pairs = Vec::new();
        for j in 0..spec.d {
            if rng.random::<f64>() < spec.density {
                pairs.push((j, StandardNormal.sample(&mut rng)));
            }
        }
        if pairs.is_empty() {
            let j = rng.random_range(0..spec.d);
            pairs.push((j, StandardNormal.sample(&mut rng)));
        }
        let x = FeatureVec::from_pairs(spec.d, pairs);
        let noisy = rng.random::<f64>() < spec.label_noise;
        let label = if spec.classes <= 2 {
            let s = if x.dot(&planted[..spec.d]) >= 0.0 { 1.0 } else { -1.0 };
            if noisy { -s } else { s }
        } else {
            let y = if noisy {
                rng.random_range(0..k)
            } else {
                (0..k)
                    .map(|c| (c, x.dot_at(&planted, c * spec.d)))
                    .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
                    .0
            };
            y as f64
        };
        rows.push(x);
        labels.push(label);
    }
    Ok(Dataset { features: spec.d, rows, labels })
}
