use crate::error::{invalid_input, Result};

/// A row-major `n x d` table of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_input("dataset dimension must be at least 1"));
        }
        if values.is_empty() || values.len() % dim != 0 {
            return Err(invalid_input(format!(
                "dataset needs a positive multiple of {dim} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset { values, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != dim) {
            return Err(invalid_input(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].as_ref().len()
            )));
        }
        Self::new(rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(), dim)
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stack `self` on top of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim != other.dim {
            return Err(invalid_input(format!(
                "cannot stack datasets of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(Dataset { values, dim: self.dim })
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(invalid_input(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Dataset::new(values, self.dim)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], 1).is_err());
        assert!(Dataset::new(vec![], 2).is_err());
    }

    #[test]
    fn concat_and_select() {
        let x = Dataset::from_rows(&[[0.0, 1.0]]).unwrap();
        let y = Dataset::from_rows(&[[2.0, 3.0], [4.0, 5.0]]).unwrap();
        let z = x.concat(&y).unwrap();
        assert_eq!(z.len(), 3);
        assert_eq!(z.row(2), &[4.0, 5.0]);
        assert_eq!(z.select(&[2, 0]).unwrap().values(), &[4.0, 5.0, 0.0, 1.0]);
    }
}
