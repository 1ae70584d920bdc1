//! Seeded generators for the simulation families and the scenario catalog.
//!
//! Gamma variates come from `rand_distr::Gamma` (Marsaglia-Tsang squeeze,
//! with the `U^(1/alpha)` boost for shapes below one); normals from
//! `rand_distr::StandardNormal`. Every generator takes an explicit seed and
//! draws from a `ChaCha8Rng`, so output is reproducible across platforms.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::rng::rng_from_seed;

fn require_rows(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid_input("at least one observation must be requested"));
    }
    Ok(())
}

/// Lower Cholesky factor of a symmetric positive-definite `d x d` matrix.
pub fn cholesky_factor(cov: &[f64], d: usize) -> Result<DMatrix<f64>> {
    if d == 0 || cov.len() != d * d {
        return Err(invalid_param(format!("covariance must be {d}x{d}")));
    }
    let m = DMatrix::from_row_slice(d, d, cov);
    if (0..d).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()))) {
        return Err(invalid_param("covariance matrix is not symmetric"));
    }
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| invalid_param("covariance matrix is not positive definite"))
}

/// `n` draws from `N(mean, cov)` as `mean + L z` with `L L^T = cov`.
pub fn sample_mvg(mean: &[f64], cov: &[f64], n: usize, seed: u64) -> Result<Dataset> {
    require_rows(n)?;
    let d = mean.len();
    let l = cholesky_factor(cov, d)?;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut x = mean[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                x += l[(i, j)] * zj;
            }
            values.push(x);
        }
    }
    Dataset::new(values, d)
}

/// Rows `(E_1/G, ..., E_d/G)` with `E_i ~ Exp(1)` and `G ~ Gamma(alpha, 1)`.
pub fn sample_bounded_burr(alpha: f64, d: usize, n: usize, seed: u64) -> Result<Dataset> {
    require_rows(n)?;
    if d == 0 {
        return Err(invalid_param("dimension must be at least 1"));
    }
    let gamma = gamma(alpha)?;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut e = vec![0.0; d];
    for _ in 0..n {
        for ei in e.iter_mut() {
            *ei = rng.sample(Exp1);
        }
        let g: f64 = gamma.sample(&mut rng);
        values.extend(e.iter().map(|ei| ei / g));
    }
    Dataset::new(values, d)
}

/// Rows `((1 + E_1/G)^-alpha, ..., (1 + E_d/G)^-alpha)`, the Cook-Johnson
/// (Clayton) copula with uniform marginals on the unit hypercube.
///
/// Dependence grows as `alpha` decreases and the mass collapses onto the main
/// diagonal; large `alpha` approaches the uniform distribution on the cube.
pub fn sample_burr_copula(alpha: f64, d: usize, n: usize, seed: u64) -> Result<Dataset> {
    let raw = sample_bounded_burr(alpha, d, n, seed)?;
    let values = raw.values().iter().map(|r| (1.0 + r).powf(-alpha)).collect();
    Dataset::new(values, d)
}

/// Rows `G / sum(G)` with independent `G_i ~ Gamma(beta_i, 1)`.
pub fn sample_dirichlet(beta: &[f64], n: usize, seed: u64) -> Result<Dataset> {
    require_rows(n)?;
    if beta.is_empty() {
        return Err(invalid_param("concentration vector must be non-empty"));
    }
    let gammas = beta.iter().map(|&b| gamma(b)).collect::<Result<Vec<_>>>()?;
    let d = beta.len();
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut g = vec![0.0; d];
    for _ in 0..n {
        for (gi, dist) in g.iter_mut().zip(&gammas) {
            *gi = dist.sample(&mut rng);
        }
        let total: f64 = g.iter().sum();
        if d == 1 || total == 0.0 {
            // Only reachable through underflow of every component for tiny shapes.
            values.extend(std::iter::repeat_n(1.0 / d as f64, d));
        } else {
            values.extend(g.iter().map(|gi| gi / total));
        }
    }
    Dataset::new(values, d)
}

fn gamma(shape: f64) -> Result<Gamma<f64>> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(invalid_param(format!("gamma shape must be positive, got {shape}")));
    }
    Gamma::new(shape, 1.0).map_err(|e| invalid_param(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mvg,
    BoundedBurr,
    BurrCopula,
    Dirichlet,
}

/// Parameters of one simulation distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistParams {
    Mvg { mean: Vec<f64>, cov: Vec<f64> },
    BoundedBurr { alpha: f64, dim: usize },
    BurrCopula { alpha: f64, dim: usize },
    Dirichlet { beta: Vec<f64> },
}

impl DistParams {
    pub fn dim(&self) -> usize {
        match self {
            DistParams::Mvg { mean, .. } => mean.len(),
            DistParams::BoundedBurr { dim, .. } | DistParams::BurrCopula { dim, .. } => *dim,
            DistParams::Dirichlet { beta } => beta.len(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DistParams::Mvg { .. } => Family::Mvg,
            DistParams::BoundedBurr { .. } => Family::BoundedBurr,
            DistParams::BurrCopula { .. } => Family::BurrCopula,
            DistParams::Dirichlet { .. } => Family::Dirichlet,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        match self {
            DistParams::Mvg { mean, cov } => sample_mvg(mean, cov, n, seed),
            DistParams::BoundedBurr { alpha, dim } => sample_bounded_burr(*alpha, *dim, n, seed),
            DistParams::BurrCopula { alpha, dim } => sample_burr_copula(*alpha, *dim, n, seed),
            DistParams::Dirichlet { beta } => sample_dirichlet(beta, n, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistParams::Mvg { mean, cov } => cholesky_factor(cov, mean.len()).map(|_| ()),
            DistParams::BoundedBurr { alpha, dim } | DistParams::BurrCopula { alpha, dim } => {
                if *dim == 0 {
                    return Err(invalid_param("dimension must be at least 1"));
                }
                gamma(*alpha).map(|_| ())
            }
            DistParams::Dirichlet { beta } => {
                if beta.is_empty() {
                    return Err(invalid_param("concentration vector must be non-empty"));
                }
                beta.iter().try_for_each(|b| gamma(*b).map(|_| ()))
            }
        }
    }
}

/// A null distribution for `X` and the distribution used for `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub id: String,
    pub family: Family,
    pub null_params: DistParams,
    pub alt_params: DistParams,
    pub dim: usize,
    /// `true` when `alt_params` equals `null_params`.
    pub is_null: bool,
}

impl Scenario {
    fn new(id: &str, null_params: DistParams, alt_params: DistParams) -> Self {
        Scenario {
            id: id.to_string(),
            family: null_params.family(),
            dim: null_params.dim(),
            is_null: null_params == alt_params,
            null_params,
            alt_params,
        }
    }

    /// Change the dimension of a Bounded Burr scenario.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        match (&mut self.null_params, &mut self.alt_params) {
            (DistParams::BoundedBurr { dim: d0, .. }, DistParams::BoundedBurr { dim: d1, .. })
            | (DistParams::BurrCopula { dim: d0, .. }, DistParams::BurrCopula { dim: d1, .. }) => {
                *d0 = dim;
                *d1 = dim;
                self.dim = dim;
                Ok(self)
            }
            _ => Err(Error::Config(format!(
                "scenario '{}' has a fixed dimension of {}",
                self.id, self.dim
            ))),
        }
    }

    pub fn sample_x(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.null_params.sample(n, seed)
    }

    pub fn sample_y(&self, m: usize, seed: u64) -> Result<Dataset> {
        self.alt_params.sample(m, seed)
    }
}

pub const MU1: [f64; 5] = [0.05, 0.01, -0.05, 0.0, 0.101];
pub const MU2: [f64; 5] = [0.11, 0.022, -0.011, 0.0, 0.222];
pub const MU3: [f64; 5] = [0.5, 0.1, -0.5, 0.0, 1.01];

#[rustfmt::skip]
pub const SIGMA1: [f64; 25] = [
    1.065,  0.044, -0.036,  0.01,   0.019,
    0.044,  1.081,  0.006,  0.023, -0.016,
   -0.036,  0.006,  1.066, -0.016, -0.024,
    0.01,   0.023, -0.016,  1.046, -0.026,
    0.019, -0.016, -0.024, -0.026,  1.039,
];

#[rustfmt::skip]
pub const SIGMA2: [f64; 25] = [
    1.1475,  0.066,  -0.054,  0.015,   0.0285,
    0.066,   1.1715,  0.009,  0.0345, -0.024,
   -0.054,   0.009,   1.149, -0.024,  -0.036,
    0.0150,  0.0345, -0.024,  1.1190, -0.039,
    0.0285, -0.024,  -0.036, -0.039,   1.1085,
];

#[rustfmt::skip]
pub const SIGMA3: [f64; 25] = [
    1.65,  0.44, -0.36,  0.1,   0.19,
    0.44,  1.81,  0.6,   0.23, -0.16,
   -0.36,  0.6,   1.66, -0.16, -0.24,
    0.1,   0.23, -0.16,  1.46, -0.26,
    0.19, -0.16, -0.24, -0.26,  1.39,
];

/// Gamma shapes of the Bounded Burr rows; the first one is the null.
pub const BURR_ALPHAS: [f64; 7] = [1.0, 1.25, 1.5, 1.75, 2.0, 0.75, 0.5];

pub const DIRICHLET_BETAS: [[f64; 5]; 6] = [
    [1.0; 5],
    [1.5; 5],
    [0.5; 5],
    [1.015, 0.95, 1.043, 0.975, 0.98],
    [1.27, 0.59, 1.55, 1.23, 0.36],
    [2.0; 5],
];

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Every null/alternative pair of the power tables, in table order.
///
/// `burr-copula-*` repeats the Burr alternatives with the bounded copula
/// transform of [`sample_burr_copula`].
pub fn scenario_catalog() -> Vec<Scenario> {
    let std_normal = DistParams::Mvg {
        mean: vec![0.0; 5],
        cov: identity(5),
    };
    let shifted = |mean: &[f64]| DistParams::Mvg {
        mean: mean.to_vec(),
        cov: identity(5),
    };
    let scaled = |cov: &[f64]| DistParams::Mvg {
        mean: vec![0.0; 5],
        cov: cov.to_vec(),
    };
    let mut out = vec![
        Scenario::new("mvg-null", std_normal.clone(), std_normal.clone()),
        Scenario::new("mvg-mu1", std_normal.clone(), shifted(&MU1)),
        Scenario::new("mvg-mu2", std_normal.clone(), shifted(&MU2)),
        Scenario::new("mvg-mu3", std_normal.clone(), shifted(&MU3)),
        Scenario::new("mvg-sigma1", std_normal.clone(), scaled(&SIGMA1)),
        Scenario::new("mvg-sigma2", std_normal.clone(), scaled(&SIGMA2)),
        Scenario::new("mvg-sigma3", std_normal, scaled(&SIGMA3)),
    ];
    let burr = |alpha: f64| DistParams::BoundedBurr { alpha, dim: 5 };
    for (i, &alpha) in BURR_ALPHAS.iter().enumerate() {
        out.push(Scenario::new(&format!("burr-alpha{}", i + 1), burr(1.0), burr(alpha)));
    }
    let copula = |alpha: f64| DistParams::BurrCopula { alpha, dim: 5 };
    for (i, &alpha) in BURR_ALPHAS.iter().enumerate() {
        out.push(Scenario::new(&format!("burr-copula-alpha{}", i + 1), copula(1.0), copula(alpha)));
    }
    let dirichlet = |beta: &[f64]| DistParams::Dirichlet { beta: beta.to_vec() };
    for (i, beta) in DIRICHLET_BETAS.iter().enumerate() {
        out.push(Scenario::new(
            &format!("dirichlet-beta{}", i + 1),
            dirichlet(&DIRICHLET_BETAS[0]),
            dirichlet(beta),
        ));
    }
    out
}

pub fn find_scenario(id: &str) -> Result<Scenario> {
    scenario_catalog()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Config(format!("unknown scenario id '{id}'")))
}
