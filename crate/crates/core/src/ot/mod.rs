//! Discrete optimal transport on a finite support.
//!
//! Probability vectors live on `L` support points; the ground cost is the
//! matrix of squared Euclidean distances between those points. Two solvers
//! are provided: an exact transportation-simplex solver ([`exact_ot`]) and the
//! entropic Sinkhorn solver ([`sinkhorn_solve`]) together with the three
//! divergences built from it ([`divergence`]).

mod exact;
mod sinkhorn;

pub use exact::{exact_ot, ExactSolution};
pub use sinkhorn::{
    divergence, sinkhorn_solve, SinkhornKernel, SinkhornSolution, SinkhornVariant, StoppingRule,
};

use crate::data::{sq_dist, Dataset};
use crate::error::{invalid_input, Result};

/// Absolute tolerance on the total mass of a [`ProbVector`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Nonnegative weights on `L >= 1` support points summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid_input("probability vector must have at least one entry"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(invalid_input(format!("weight {i} is {w}, expected a finite value >= 0")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid_input(format!("weights sum to {total}, expected 1")));
        }
        Ok(ProbVector(weights))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid_input("probability vector must have at least one entry"));
        }
        Self::new(vec![1.0 / len as f64; len])
    }

    /// Relative frequencies `counts[j] / sum(counts)`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(invalid_input("cannot normalise an all-zero count vector"));
        }
        let n = total as f64;
        Self::new(counts.iter().map(|&c| c as f64 / n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Symmetric `L x L` squared-distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    len: usize,
    entries: Vec<f64>,
    support: Option<Dataset>,
}

impl CostMatrix {
    /// Validate an explicit row-major matrix.
    pub fn from_entries(len: usize, entries: Vec<f64>) -> Result<Self> {
        if len == 0 || entries.len() != len * len {
            return Err(invalid_input(format!(
                "cost matrix needs {len}x{len} entries, got {}",
                entries.len()
            )));
        }
        for i in 0..len {
            if entries[i * len + i] != 0.0 {
                return Err(invalid_input(format!("cost diagonal entry {i} is not zero")));
            }
            for j in 0..len {
                let c = entries[i * len + j];
                if !c.is_finite() || c < 0.0 {
                    return Err(invalid_input(format!("cost entry ({i},{j}) = {c} is invalid")));
                }
                if c != entries[j * len + i] {
                    return Err(invalid_input(format!("cost matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(CostMatrix { len, entries, support: None })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Coordinates of the support points, when the matrix was built from them.
    pub fn support(&self) -> Option<&Dataset> {
        self.support.as_ref()
    }
}

/// Squared Euclidean distances between every pair of rows of `points`.
pub fn cost_matrix(points: &Dataset) -> CostMatrix {
    let len = points.len();
    let mut entries = vec![0.0; len * len];
    for i in 0..len {
        for j in (i + 1)..len {
            let c = sq_dist(points.row(i), points.row(j));
            entries[i * len + j] = c;
            entries[j * len + i] = c;
        }
    }
    CostMatrix {
        len,
        entries,
        support: Some(points.clone()),
    }
}

/// Joint probability mass on the product of two supports, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
}

impl TransportPlan {
    pub fn new(rows: usize, cols: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != rows * cols {
            return Err(invalid_input("plan size does not match its shape"));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid_input("plan entries must be finite and nonnegative"));
        }
        Ok(TransportPlan { rows, cols, mass })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), rows * cols);
        TransportPlan { rows, cols, mass }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.mass.chunks_exact(self.cols) {
            for (s, m) in sums.iter_mut().zip(row) {
                *s += m;
            }
        }
        sums
    }

    /// Largest absolute deviation of the plan marginals from `(a, b)`.
    pub fn marginal_error(&self, a: &ProbVector, b: &ProbVector) -> f64 {
        let (rs, cs) = (self.row_sums(), self.col_sums());
        let rows = rs.iter().zip(a.as_slice()).map(|(s, t)| (s - t).abs());
        let cols = cs.iter().zip(b.as_slice()).map(|(s, t)| (s - t).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// Frobenius product `<D, T>`.
    pub fn cost(&self, d: &CostMatrix) -> f64 {
        self.mass.iter().zip(d.entries()).map(|(t, c)| t * c).sum()
    }
}

/// `H(T) = sum T_ij ln(1/T_ij)`, zero entries contributing nothing.
pub fn shannon_entropy(plan: &TransportPlan) -> f64 {
    plan.as_slice()
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| -t * t.ln())
        .sum()
}

pub(crate) fn check_dims(a: &ProbVector, b: &ProbVector, d: &CostMatrix) -> Result<()> {
    if a.len() != d.len() || b.len() != d.len() {
        return Err(invalid_input(format!(
            "dimension mismatch: a has {}, b has {}, cost matrix is {}x{}",
            a.len(),
            b.len(),
            d.len(),
            d.len()
        )));
    }
    Ok(())
}
