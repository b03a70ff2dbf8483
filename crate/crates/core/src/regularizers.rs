//! Strongly convex regularizers `g(w) = 1/2 ||w||^2 + sigma ||w||_1 - z^T w`.
//!
//! All supported forms are coordinate separable, which the solver relies on
//! to update the primal iterate only where `v` changed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    L2,
    L2Shift { z: Vec<f64> },
    /// `1/2 ||w||^2 + sigma ||w||_1`
    Elastic { sigma: f64 },
    ElasticShift { sigma: f64, z: Vec<f64> },
}

#[inline]
fn shrink(u: f64, sigma: f64) -> f64 {
    if u > sigma {
        u - sigma
    } else if u < -sigma {
        u + sigma
    } else {
        0.0
    }
}

impl Regularizer {
    pub fn id(&self) -> &'static str {
        match self {
            Regularizer::L2 => "l2",
            Regularizer::L2Shift { .. } => "l2_shift",
            Regularizer::Elastic { .. } => "elastic",
            Regularizer::ElasticShift { .. } => "elastic_shift",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some(s) = self.l1_weight_opt() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "l1 weight must be non-negative, got {s}"
                )));
            }
        }
        if let Some(z) = self.shift_vec() {
            if z.len() != dim {
                return Err(Error::Dimension(format!(
                    "shift has length {} but the model has dimension {dim}",
                    z.len()
                )));
            }
        }
        Ok(())
    }

    fn l1_weight_opt(&self) -> Option<f64> {
        match self {
            Regularizer::Elastic { sigma } | Regularizer::ElasticShift { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    /// Weight of the `||w||_1` term (0 for the pure L2 forms).
    pub fn l1_weight(&self) -> f64 {
        self.l1_weight_opt().unwrap_or(0.0)
    }

    pub fn shift_vec(&self) -> Option<&[f64]> {
        match self {
            Regularizer::L2Shift { z } | Regularizer::ElasticShift { z, .. } => Some(z),
            _ => None,
        }
    }

    #[inline]
    pub fn shift(&self, j: usize) -> f64 {
        self.shift_vec().map_or(0.0, |z| z[j])
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let sigma = self.l1_weight();
        w.iter()
            .enumerate()
            .map(|(j, &x)| 0.5 * x * x + sigma * x.abs() - self.shift(j) * x)
            .sum()
    }

    /// Coordinate `j` of `grad g*(v)`.
    #[inline]
    pub fn conj_grad_coord(&self, j: usize, vj: f64) -> f64 {
        let z = self.shift(j);
        match self {
            Regularizer::L2 | Regularizer::L2Shift { .. } => vj + z,
            Regularizer::Elastic { sigma } | Regularizer::ElasticShift { sigma, .. } => {
                shrink(vj + z, *sigma)
            }
        }
    }

    /// Coordinate `j` term of `g*(v)`.
    #[inline]
    pub fn conj_coord(&self, j: usize, vj: f64) -> f64 {
        let u = vj + self.shift(j);
        let t = match self {
            Regularizer::L2 | Regularizer::L2Shift { .. } => u,
            Regularizer::Elastic { sigma } | Regularizer::ElasticShift { sigma, .. } => {
                shrink(u, *sigma)
            }
        };
        0.5 * t * t
    }

    /// `conj_coord(j, vj + dv) - conj_coord(j, vj)` without cancellation.
    #[inline]
    pub fn conj_coord_change(&self, j: usize, vj: f64, dv: f64) -> f64 {
        let a = self.conj_grad_coord(j, vj);
        let b = self.conj_grad_coord(j, vj + dv);
        0.5 * (b - a) * (b + a)
    }

    pub fn conj(&self, v: &[f64]) -> f64 {
        v.iter().enumerate().map(|(j, &x)| self.conj_coord(j, x)).sum()
    }

    pub fn conj_grad(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(j, &x)| self.conj_grad_coord(j, x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrinkage() {
        let r = Regularizer::Elastic { sigma: 1.0 };
        assert_eq!(r.conj_grad(&[3.0, -0.5, -2.0]), vec![2.0, 0.0, -1.0]);
        // ties land on +0.0
        let w = r.conj_grad(&[1.0, -1.0]);
        assert_eq!(w[0].to_bits(), 0f64.to_bits());
        assert_eq!(w[1].to_bits(), 0f64.to_bits());
    }

    #[test]
    fn l2_identity_and_conjugate() {
        let r = Regularizer::L2;
        assert_eq!(r.conj_grad(&[1.5, -2.0]), vec![1.5, -2.0]);
        assert_eq!(r.conj(&[3.0, 4.0]), 12.5);
    }

    #[test]
    fn shifted_forms() {
        let z = vec![1.0, -1.0];
        let r = Regularizer::L2Shift { z: z.clone() };
        assert_eq!(r.conj_grad(&[0.5, 0.5]), vec![1.5, -0.5]);
        let r = Regularizer::ElasticShift { sigma: 1.0, z };
        assert_eq!(r.conj_grad(&[0.5, 0.5]), vec![0.5, 0.0]);
        assert!(r.validate(3).is_err());
        assert!(r.validate(2).is_ok());
    }

    #[test]
    fn conjugate_matches_fenchel_oracle() {
        // g*(v) = max_w v^T w - g(w), per coordinate on a grid
        let regs = [
            Regularizer::L2,
            Regularizer::Elastic { sigma: 0.7 },
            Regularizer::L2Shift { z: vec![0.3] },
            Regularizer::ElasticShift { sigma: 0.4, z: vec![-0.2] },
        ];
        for r in &regs {
            for &v in &[-2.0, -0.5, 0.0, 0.35, 1.2] {
                let best = (-40_000..=40_000)
                    .map(|i| i as f64 * 1e-4)
                    .map(|w| v * w - r.value(&[w]))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((best - r.conj(&[v])).abs() < 1e-7, "{r:?} v={v}");
                // Fenchel-Young equality at the gradient
                let w = r.conj_grad(&[v]);
                assert!((r.value(&w) + r.conj(&[v]) - v * w[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(Regularizer::Elastic { sigma: -1.0 }.validate(1).is_err());
    }
}
