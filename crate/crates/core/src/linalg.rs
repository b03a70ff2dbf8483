//! Feature vectors and the handful of dense kernels the solvers need.

/// Density above which a row is stored densely.
pub const DENSE_THRESHOLD: f64 = 0.5;

/// One instance vector `x_i`, sparse or dense.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVec {
    Sparse { indices: Vec<u32>, values: Vec<f64> },
    Dense(Vec<f64>),
}

impl FeatureVec {
    /// Builds a row from `(index, value)` pairs, sorting indices and dropping
    /// explicit zeros. Picks dense storage when more than half of `dim` is
    /// populated.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_by_key(|&(j, _)| j);
        if dim > 0 && pairs.len() as f64 > DENSE_THRESHOLD * dim as f64 {
            let mut dense = vec![0.0; dim];
            for (j, v) in pairs {
                dense[j] += v;
            }
            FeatureVec::Dense(dense)
        } else {
            let mut indices: Vec<u32> = Vec::with_capacity(pairs.len());
            let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
            for (j, v) in pairs {
                if indices.last() == Some(&(j as u32)) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            FeatureVec::Sparse { indices, values }
        }
    }

    pub fn from_dense(values: Vec<f64>) -> Self {
        let dim = values.len();
        let pairs = values.into_iter().enumerate().collect();
        Self::from_pairs(dim, pairs)
    }

    pub fn nnz(&self) -> usize {
        match self {
            FeatureVec::Sparse { values, .. } => values.len(),
            FeatureVec::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
        }
    }

    /// Largest stored index plus one (0 for an empty row).
    pub fn extent(&self) -> usize {
        match self {
            FeatureVec::Sparse { indices, .. } => indices.last().map_or(0, |&j| j as usize + 1),
            FeatureVec::Dense(v) => v.len(),
        }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        match self {
            FeatureVec::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .map(|(&j, &x)| x * w[j as usize])
                .sum(),
            FeatureVec::Dense(x) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `v[offset + j] += scale * x_j` for every stored `j`.
    pub fn axpy_into(&self, scale: f64, v: &mut [f64], offset: usize) {
        match self {
            FeatureVec::Sparse { indices, values } => {
                for (&j, &x) in indices.iter().zip(values) {
                    v[offset + j as usize] += scale * x;
                }
            }
            FeatureVec::Dense(x) => {
                for (vj, &xj) in v[offset..offset + x.len()].iter_mut().zip(x) {
                    *vj += scale * xj;
                }
            }
        }
    }

    /// Dot product against `w[offset..]`.
    pub fn dot_at(&self, w: &[f64], offset: usize) -> f64 {
        match self {
            FeatureVec::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .map(|(&j, &x)| x * w[offset + j as usize])
                .sum(),
            FeatureVec::Dense(x) => x.iter().zip(&w[offset..]).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn norm2(&self) -> f64 {
        match self {
            FeatureVec::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
            FeatureVec::Dense(x) => x.iter().map(|x| x * x).sum(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        match self {
            FeatureVec::Sparse { values, .. } => values.iter_mut().for_each(|x| *x *= factor),
            FeatureVec::Dense(x) => x.iter_mut().for_each(|x| *x *= factor),
        }
    }

    /// Iterates over stored `(index, value)` pairs, skipping dense zeros.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            FeatureVec::Sparse { indices, values } => {
                Box::new(indices.iter().zip(values).map(|(&j, &x)| (j as usize, x)))
            }
            FeatureVec::Dense(x) => Box::new(
                x.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j, v)),
            ),
        }
    }

    /// Visits every stored index (dense rows visit all of them).
    pub fn for_each_index(&self, mut f: impl FnMut(usize)) {
        match self {
            FeatureVec::Sparse { indices, .. } => indices.iter().for_each(|&j| f(j as usize)),
            FeatureVec::Dense(x) => (0..x.len()).for_each(f),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pairwise (cascade) summation; fixed evaluation order regardless of caller.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_fallback_above_half_density() {
        let row = FeatureVec::from_pairs(4, vec![(0, 1.0), (1, 2.0), (3, 3.0)]);
        assert!(matches!(row, FeatureVec::Dense(_)));
        let row = FeatureVec::from_pairs(10, vec![(7, 1.0), (2, 2.0)]);
        match &row {
            FeatureVec::Sparse { indices, .. } => assert_eq!(indices, &vec![2, 7]),
            _ => panic!("expected sparse"),
        }
        assert_eq!(row.extent(), 8);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let dense = vec![0.5, 0.0, -1.0, 2.0];
        let w = vec![1.0, 2.0, 3.0, 4.0];
        let a = FeatureVec::Dense(dense.clone());
        let b = FeatureVec::Sparse { indices: vec![0, 2, 3], values: vec![0.5, -1.0, 2.0] };
        assert_eq!(a.dot(&w), b.dot(&w));
        assert_eq!(a.norm2(), b.norm2());
        let mut va = vec![0.0; 8];
        let mut vb = vec![0.0; 8];
        a.axpy_into(2.0, &mut va, 4);
        b.axpy_into(2.0, &mut vb, 4);
        assert_eq!(va, vb);
        assert_eq!(a.dot_at(&va, 4), b.dot_at(&vb, 4));
    }

    #[test]
    fn duplicate_indices_are_summed() {
        let row = FeatureVec::from_pairs(100, vec![(3, 1.0), (3, 0.5)]);
        assert_eq!(row.iter().collect::<Vec<_>>(), vec![(3, 1.5)]);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.25).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
    }
}
