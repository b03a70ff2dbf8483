//! Loss families, their gradients and convex conjugates.
//!
//! Scalar families act on `a = x_i^T w`; the max-of-hinge families act on a
//! `k`-vector and take a per-instance cost vector `c_i`. Every smooth family
//! is `(1/gamma)`-smooth with respect to the Euclidean norm, so the generic
//! coordinate steps can use one norm throughout.

use crate::error::{Error, Result};
use crate::simplex;

/// Slack allowed when testing membership in a conjugate domain.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Shared loss descriptor. Per-instance data comes in through [`LossParam`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// `1/2 (a - y)^2`
    Squared,
    /// `log(1 + e^a)`, labels folded into the instances.
    Logistic,
    /// `[1 - a]_+`
    Hinge,
    SmoothHinge { gamma: f64 },
    /// `max_j [c_j + a_j]_+`
    MaxOfHinge,
    SmoothMaxOfHinge { gamma: f64 },
    /// `gamma log(1 + sum_j exp((c_j + a_j) / gamma))`
    SoftMaxOfHinge { gamma: f64 },
}

/// Per-instance loss parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossParam<'a> {
    None,
    Label(f64),
    Cost(&'a [f64]),
}

impl LossParam<'_> {
    fn label(self) -> f64 {
        match self {
            LossParam::Label(y) => y,
            other => panic!("squared loss needs a label, got {other:?}"),
        }
    }
}

fn cost_of<'a>(p: LossParam<'a>) -> &'a [f64] {
    match p {
        LossParam::Cost(c) => c,
        other => panic!("max-of-hinge losses need a cost vector, got {other:?}"),
    }
}

/// Regularity certificate of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    /// Gradient is `(1/gamma)`-Lipschitz; the conjugate is `gamma`-strongly convex.
    Smooth { gamma: f64 },
    /// `L`-Lipschitz; the conjugate domain lies in the dual-norm ball of radius `L`.
    Lipschitz { l: f64 },
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `true` when `b` is in `S = {b >= 0, sum b <= 1}` up to [`DOMAIN_TOL`].
fn in_capped_simplex(b: &[f64]) -> bool {
    b.iter().all(|&x| x >= -DOMAIN_TOL) && b.iter().map(|x| x.max(0.0)).sum::<f64>() <= 1.0 + DOMAIN_TOL
}

impl Loss {
    pub fn id(&self) -> &'static str {
        match self {
            Loss::Squared => "squared",
            Loss::Logistic => "logistic",
            Loss::Hinge => "hinge",
            Loss::SmoothHinge { .. } => "smooth_hinge",
            Loss::MaxOfHinge => "max_of_hinge",
            Loss::SmoothMaxOfHinge { .. } => "smooth_max_of_hinge",
            Loss::SoftMaxOfHinge { .. } => "soft_max_of_hinge",
        }
    }

    /// Parses a family id; `gamma` is used by the smooth families.
    pub fn from_id(id: &str, gamma: f64) -> Result<Self> {
        let loss = match id {
            "squared" => Loss::Squared,
            "logistic" => Loss::Logistic,
            "hinge" => Loss::Hinge,
            "smooth_hinge" => Loss::SmoothHinge { gamma },
            "max_of_hinge" => Loss::MaxOfHinge,
            "smooth_max_of_hinge" => Loss::SmoothMaxOfHinge { gamma },
            "soft_max_of_hinge" => Loss::SoftMaxOfHinge { gamma },
            other => return Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        };
        if let Some(g) = loss.gamma() {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(loss)
    }

    /// Whether the family acts on `k`-vectors with a cost vector.
    pub fn is_vector(&self) -> bool {
        matches!(
            self,
            Loss::MaxOfHinge | Loss::SmoothMaxOfHinge { .. } | Loss::SoftMaxOfHinge { .. }
        )
    }

    pub fn certificate(&self) -> Certificate {
        match *self {
            Loss::Squared => Certificate::Smooth { gamma: 1.0 },
            // phi'' <= 1/4
            Loss::Logistic => Certificate::Smooth { gamma: 4.0 },
            Loss::Hinge | Loss::MaxOfHinge => Certificate::Lipschitz { l: 1.0 },
            Loss::SmoothHinge { gamma }
            | Loss::SmoothMaxOfHinge { gamma }
            | Loss::SoftMaxOfHinge { gamma } => Certificate::Smooth { gamma },
        }
    }

    /// Smoothness parameter, `None` for the Lipschitz families.
    pub fn gamma(&self) -> Option<f64> {
        match self.certificate() {
            Certificate::Smooth { gamma } => Some(gamma),
            Certificate::Lipschitz { .. } => None,
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        match self.certificate() {
            Certificate::Lipschitz { l } => Some(l),
            Certificate::Smooth { .. } => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.gamma().is_some()
    }

    pub fn value(&self, a: &[f64], p: LossParam<'_>) -> f64 {
        match *self {
            Loss::Squared => {
                let r = a[0] - p.label();
                0.5 * r * r
            }
            Loss::Logistic => softplus(a[0]),
            Loss::Hinge => (1.0 - a[0]).max(0.0),
            Loss::SmoothHinge { gamma } => {
                let a = a[0];
                if a >= 1.0 {
                    0.0
                } else if a <= 1.0 - gamma {
                    1.0 - a - gamma / 2.0
                } else {
                    (1.0 - a) * (1.0 - a) / (2.0 * gamma)
                }
            }
            Loss::MaxOfHinge => {
                let c = cost_of(p);
                a.iter().zip(c).map(|(a, c)| (c + a).max(0.0)).fold(0.0, f64::max)
            }
            Loss::SmoothMaxOfHinge { gamma } => {
                // gamma/2 (||mu||^2 - ||b - mu||^2) with mu = (a+c)/gamma, b = proj(mu),
                // expanded to avoid cancellation.
                let c = cost_of(p);
                let shifted: Vec<f64> = a.iter().zip(c).map(|(a, c)| a + c).collect();
                let mu: Vec<f64> = shifted.iter().map(|s| s / gamma).collect();
                let b = simplex::project(&mu);
                let b = b.as_slice();
                crate::linalg::dot(b, &shifted) - 0.5 * gamma * crate::linalg::norm2(b)
            }
            Loss::SoftMaxOfHinge { gamma } => {
                let c = cost_of(p);
                let t: Vec<f64> = a.iter().zip(c).map(|(a, c)| (a + c) / gamma).collect();
                let m = t.iter().copied().fold(0.0, f64::max);
                let s = (-m).exp() + t.iter().map(|x| (x - m).exp()).sum::<f64>();
                gamma * (m + s.ln())
            }
        }
    }

    /// Gradient of [`Loss::value`]; errors for the non-smooth families.
    pub fn grad(&self, a: &[f64], p: LossParam<'_>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; a.len()];
        self.grad_into(a, p, &mut out)?;
        Ok(out)
    }

    pub fn grad_into(&self, a: &[f64], p: LossParam<'_>, out: &mut [f64]) -> Result<()> {
        match *self {
            Loss::Squared => out[0] = a[0] - p.label(),
            Loss::Logistic => out[0] = sigmoid(a[0]),
            Loss::SmoothHinge { gamma } => {
                let a = a[0];
                out[0] = if a >= 1.0 {
                    0.0
                } else if a <= 1.0 - gamma {
                    -1.0
                } else {
                    (a - 1.0) / gamma
                };
            }
            Loss::SmoothMaxOfHinge { gamma } => {
                let c = cost_of(p);
                let mu: Vec<f64> = a.iter().zip(c).map(|(a, c)| (a + c) / gamma).collect();
                out.copy_from_slice(simplex::project(&mu).as_slice());
            }
            Loss::SoftMaxOfHinge { gamma } => {
                let c = cost_of(p);
                let t: Vec<f64> = a.iter().zip(c).map(|(a, c)| (a + c) / gamma).collect();
                let m = t.iter().copied().fold(0.0, f64::max);
                let denom = (-m).exp() + t.iter().map(|x| (x - m).exp()).sum::<f64>();
                for (o, x) in out.iter_mut().zip(&t) {
                    *o = (x - m).exp() / denom;
                }
            }
            Loss::Hinge | Loss::MaxOfHinge => {
                return Err(Error::Unsupported(format!("{} loss has no gradient", self.id())))
            }
        }
        Ok(())
    }

    /// Convex conjugate; `+inf` outside the domain.
    pub fn conj(&self, b: &[f64], p: LossParam<'_>) -> f64 {
        match *self {
            Loss::Squared => {
                let b = b[0];
                0.5 * b * b + p.label() * b
            }
            Loss::Logistic => {
                let b = b[0];
                if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&b) {
                    return f64::INFINITY;
                }
                let b = b.clamp(0.0, 1.0);
                xlogx(b) + xlogx(1.0 - b)
            }
            Loss::Hinge => {
                let b = b[0];
                if (-1.0 - DOMAIN_TOL..=DOMAIN_TOL).contains(&b) {
                    b
                } else {
                    f64::INFINITY
                }
            }
            Loss::SmoothHinge { gamma } => {
                let b = b[0];
                if (-1.0 - DOMAIN_TOL..=DOMAIN_TOL).contains(&b) {
                    b + 0.5 * gamma * b * b
                } else {
                    f64::INFINITY
                }
            }
            Loss::MaxOfHinge => {
                if in_capped_simplex(b) {
                    -crate::linalg::dot(cost_of(p), b)
                } else {
                    f64::INFINITY
                }
            }
            Loss::SmoothMaxOfHinge { gamma } => {
                if in_capped_simplex(b) {
                    0.5 * gamma * crate::linalg::norm2(b) - crate::linalg::dot(cost_of(p), b)
                } else {
                    f64::INFINITY
                }
            }
            Loss::SoftMaxOfHinge { gamma } => {
                if !in_capped_simplex(b) {
                    return f64::INFINITY;
                }
                let c = cost_of(p);
                let clamped: Vec<f64> = b.iter().map(|x| x.max(0.0)).collect();
                let mass: f64 = clamped.iter().sum::<f64>().min(1.0);
                let entropy: f64 = clamped.iter().map(|&x| xlogx(x)).sum();
                -crate::linalg::dot(c, &clamped) + gamma * (xlogx(1.0 - mass) + entropy)
            }
        }
    }

    /// Replaces a Lipschitz family by its `(1/gamma)`-smooth counterpart,
    /// obtained by adding `gamma/2 ||b||^2` to the conjugate.
    pub fn smooth(&self, gamma: f64) -> Result<Loss> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        match self {
            Loss::Hinge => Ok(Loss::SmoothHinge { gamma }),
            Loss::MaxOfHinge => Ok(Loss::SmoothMaxOfHinge { gamma }),
            other => Err(Error::Unsupported(format!(
                "{} loss is already smooth",
                other.id()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: LossParam<'static> = LossParam::None;

    #[test]
    fn smooth_hinge_values() {
        let l = Loss::SmoothHinge { gamma: 1.0 };
        assert_eq!(l.value(&[2.0], NONE), 0.0);
        assert_eq!(l.value(&[-1.0], NONE), 1.5);
        assert_eq!(l.value(&[0.5], NONE), 0.125);
        // both branches meet at a = 1 - gamma
        let l = Loss::SmoothHinge { gamma: 0.5 };
        assert!((l.value(&[0.5], NONE) - 0.25).abs() < 1e-15);
        assert_eq!(l.value(&[-2.0], NONE), 2.75);
    }

    #[test]
    fn smooth_hinge_value_matches_conjugate_oracle() {
        // max_b (a b - phi*(b)) over a fine grid of b in [-1, 0]
        let l = Loss::SmoothHinge { gamma: 1.0 };
        let a = 0.5;
        let best = (0..=100_000)
            .map(|i| -(i as f64) * 1e-5)
            .map(|b| a * b - l.conj(&[b], NONE))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - 0.125).abs() < 1e-9);
    }

    #[test]
    fn soft_max_single_class_at_origin() {
        let l = Loss::SoftMaxOfHinge { gamma: 1.0 };
        let v = l.value(&[0.0], LossParam::Cost(&[0.0]));
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!(v >= 0.0 && v <= 0.0 + 2f64.ln() + 1e-15);
    }

    #[test]
    fn gradients() {
        assert_eq!(Loss::Logistic.grad(&[0.0], NONE).unwrap(), vec![0.5]);
        let g = Loss::SmoothHinge { gamma: 1.0 }.grad(&[0.5], NONE).unwrap()[0];
        let fd = (Loss::SmoothHinge { gamma: 1.0 }.value(&[0.5 + 1e-6], NONE)
            - Loss::SmoothHinge { gamma: 1.0 }.value(&[0.5 - 1e-6], NONE))
            / 2e-6;
        assert_eq!(g, -0.5);
        assert!((fd - g).abs() < 1e-8);
        assert!(matches!(Loss::Hinge.grad(&[0.0], NONE), Err(Error::Unsupported(_))));
        assert!(matches!(
            Loss::MaxOfHinge.grad(&[0.0, 0.0], LossParam::Cost(&[1.0, 0.0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn conjugates() {
        assert_eq!(Loss::Hinge.conj(&[-0.5], NONE), -0.5);
        assert!((Loss::Logistic.conj(&[0.5], NONE) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(Loss::SmoothHinge { gamma: 1.0 }.conj(&[0.5], NONE), f64::INFINITY);
        assert_eq!(Loss::MaxOfHinge.conj(&[0.5, 0.25], LossParam::Cost(&[1.0, 1.0])), -0.75);
        assert_eq!(Loss::Squared.conj(&[2.0], LossParam::Label(1.0)), 4.0);
    }

    #[test]
    fn logistic_conjugate_boundary() {
        assert_eq!(Loss::Logistic.conj(&[0.0], NONE), 0.0);
        assert_eq!(Loss::Logistic.conj(&[1.0], NONE), 0.0);
        assert_eq!(Loss::Logistic.conj(&[1.0 + 1e-13], NONE), 0.0);
        assert_eq!(Loss::Logistic.conj(&[-1e-13], NONE), 0.0);
        assert_eq!(Loss::Logistic.conj(&[1.0 + 1e-9], NONE), f64::INFINITY);
        assert_eq!(Loss::Logistic.conj(&[-1e-9], NONE), f64::INFINITY);
    }

    #[test]
    fn smoothing() {
        assert_eq!(Loss::Hinge.smooth(1.0).unwrap(), Loss::SmoothHinge { gamma: 1.0 });
        let s = Loss::MaxOfHinge.smooth(0.1).unwrap();
        assert_eq!(s, Loss::SmoothMaxOfHinge { gamma: 0.1 });
        // phi(a) = 0 implies the smoothed value is 0 too
        let c = [1.0, 0.0, 1.0];
        let a = [-1.5, -0.2, -1.0];
        assert_eq!(Loss::MaxOfHinge.value(&a, LossParam::Cost(&c)), 0.0);
        assert_eq!(s.value(&a, LossParam::Cost(&c)), 0.0);
        assert!(matches!(Loss::Squared.smooth(1.0), Err(Error::Unsupported(_))));
        assert!(matches!(Loss::SmoothHinge { gamma: 1.0 }.smooth(1.0), Err(Error::Unsupported(_))));
        assert!(Loss::Hinge.smooth(0.0).is_err());
    }

    #[test]
    fn certificates() {
        assert_eq!(Loss::Logistic.gamma(), Some(4.0));
        assert_eq!(Loss::Hinge.lipschitz(), Some(1.0));
        assert_eq!(Loss::MaxOfHinge.gamma(), None);
        assert_eq!(Loss::from_id("smooth_hinge", 0.5).unwrap(), Loss::SmoothHinge { gamma: 0.5 });
        assert!(Loss::from_id("smooth_hinge", 0.0).is_err());
        assert!(Loss::from_id("nope", 1.0).is_err());
    }
}
