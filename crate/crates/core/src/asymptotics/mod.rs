//! Gaussian limit of the Sinkhorn transport cost under the null.
//!
//! With the Sinkhorn map run for a fixed number of iterations `I`, the
//! transport cost `S_hat(a, b)` is a smooth function of the two frequency
//! vectors. Its centered statistic
//! `nu = sqrt(nm/N) (S_hat(a_hat, b_hat) - S_hat(a*, a*))` is asymptotically
//! normal with variance `J C J^T`, where `C` stacks `(1 - alpha) Sigma` and
//! `alpha Sigma` for the multinomial covariance `Sigma` of the reference cell
//! probabilities and `J` is the gradient with respect to the first `k - 1`
//! coordinates of each argument.

mod shapiro;

pub use shapiro::{normality_check, ShapiroWilk, MAX_SAMPLE as SHAPIRO_MAX, MIN_SAMPLE as SHAPIRO_MIN};

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{invalid_input, invalid_param, Result};
use crate::ot::{cost_matrix, CostMatrix, ProbVector, SinkhornKernel, StoppingRule};
use crate::partition::{assign_voronoi, cell_counts, kmeans, KMeansConfig, KMeansResult};
use crate::twosample::replica_split;

/// Iteration bound used when none has been estimated.
pub const DEFAULT_ITERATIONS: usize = 20;
/// Finite-difference step for [`fd_gradient`].
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// `(k-1) x (k-1)` covariance of the truncated one-hot cell indicator.
pub fn multinomial_cov(a_star: &ProbVector) -> Result<DMatrix<f64>> {
    let k = a_star.len();
    if k < 2 {
        return Err(invalid_input("the multinomial covariance needs at least two cells"));
    }
    let p = &a_star.as_slice()[..k - 1];
    Ok(DMatrix::from_fn(k - 1, k - 1, |i, j| {
        if i == j {
            p[i] * (1.0 - p[i])
        } else {
            -p[i] * p[j]
        }
    }))
}

/// Block-diagonal `diag((1 - alpha) Sigma, alpha Sigma)`.
pub fn block_cov(sigma: &DMatrix<f64>, alpha_ratio: f64) -> Result<DMatrix<f64>> {
    if !(alpha_ratio > 0.0 && alpha_ratio < 1.0) {
        return Err(invalid_param(format!("alpha must lie in (0, 1), got {alpha_ratio}")));
    }
    let d = sigma.nrows();
    let mut c = DMatrix::zeros(2 * d, 2 * d);
    c.view_mut((0, 0), (d, d)).copy_from(&(sigma * (1.0 - alpha_ratio)));
    c.view_mut((d, d), (d, d)).copy_from(&(sigma * alpha_ratio));
    Ok(c)
}

fn shift_mass(a: &ProbVector, from: usize, epsilon: f64) -> Result<ProbVector> {
    let last = a.len() - 1;
    let mut w = a.as_slice().to_vec();
    w[from] -= epsilon;
    w[last] += epsilon;
    if w[from] < 0.0 {
        return Err(invalid_param(format!(
            "moving {epsilon} of mass out of coordinate {from} (mass {}) makes it negative",
            a[from]
        )));
    }
    ProbVector::new(w)
}

/// One-sided difference quotients of `S_hat` at `(a*, a*)`.
///
/// Coordinate `i < k - 1` moves `epsilon` of mass from cell `i` to the last
/// cell in the first argument; coordinate `k - 1 + i` does the same in the
/// second argument. The transport cost is evaluated with exactly `i_fixed`
/// Sinkhorn iterations.
pub fn fd_gradient(
    a_star: &ProbVector,
    cost: &CostMatrix,
    lambda: f64,
    i_fixed: usize,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(invalid_param("finite-difference step must be positive"));
    }
    let kernel = SinkhornKernel::new(cost, lambda)?;
    fd_gradient_with(&kernel, a_star, i_fixed, epsilon)
}

pub fn fd_gradient_with(
    kernel: &SinkhornKernel,
    a_star: &ProbVector,
    i_fixed: usize,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let k = a_star.len();
    if k < 2 {
        return Err(invalid_input("the gradient needs at least two cells"));
    }
    let stop = StoppingRule::FixedIterations(i_fixed);
    let s_hat = |a: &ProbVector, b: &ProbVector| kernel.solve(a, b, stop).map(|s| s.s_hat);
    let base = s_hat(a_star, a_star)?;
    let mut grad = vec![0.0; 2 * (k - 1)];
    for i in 0..k - 1 {
        let moved = shift_mass(a_star, i, epsilon)?;
        grad[i] = (base - s_hat(&moved, a_star)?) / epsilon;
        grad[k - 1 + i] = (base - s_hat(a_star, &moved)?) / epsilon;
    }
    Ok(grad)
}

/// Plug-in estimate of the limiting variance of [`NuObservation::value`].
#[derive(Debug, Clone)]
pub struct CltEstimate {
    pub a_star: ProbVector,
    pub sigma: DMatrix<f64>,
    pub c_matrix: DMatrix<f64>,
    pub j_grad: Vec<f64>,
    pub alpha_ratio: f64,
    pub i_fixed: usize,
    pub predicted_var: f64,
}

pub fn clt_estimate(
    a_star: &ProbVector,
    cost: &CostMatrix,
    lambda: f64,
    i_fixed: usize,
    epsilon: f64,
    alpha_ratio: f64,
) -> Result<CltEstimate> {
    let sigma = multinomial_cov(a_star)?;
    let c_matrix = block_cov(&sigma, alpha_ratio)?;
    let j_grad = fd_gradient(a_star, cost, lambda, i_fixed, epsilon)?;
    let predicted_var = quadratic_form(&c_matrix, &j_grad);
    Ok(CltEstimate {
        a_star: a_star.clone(),
        sigma,
        c_matrix,
        j_grad,
        alpha_ratio,
        i_fixed,
        predicted_var,
    })
}

/// `j C j^T`, clamped at zero against rounding.
pub fn quadratic_form(c: &DMatrix<f64>, j: &[f64]) -> f64 {
    let v = DVector::from_row_slice(j);
    (v.transpose() * c * &v)[(0, 0)].max(0.0)
}

/// One realization of the centered, scaled transport cost.
#[derive(Debug, Clone)]
pub struct NuObservation {
    pub value: f64,
    pub n: usize,
    pub m: usize,
    /// Effective sample size `nm / (n + m)`.
    pub n_e: f64,
    pub a_hat: ProbVector,
    pub b_hat: ProbVector,
    /// Reference-sample frequencies of the pooled-sample cells.
    pub a_star: ProbVector,
    /// Inter-center squared distances of the pooled partition.
    pub cost: CostMatrix,
    pub partition: KMeansResult,
}

/// `sqrt(N_e) (S_hat(a_hat, b_hat) - S_hat(a*, a*))` from frequency vectors.
pub fn nu_from_frequencies(
    kernel: &SinkhornKernel,
    a_hat: &ProbVector,
    b_hat: &ProbVector,
    a_star: &ProbVector,
    n: usize,
    m: usize,
    i_fixed: usize,
) -> Result<f64> {
    let stop = StoppingRule::FixedIterations(i_fixed);
    let sample = kernel.solve(a_hat, b_hat, stop)?.s_hat;
    let centre = kernel.solve(a_star, a_star, stop)?.s_hat;
    Ok(effective_size(n, m).sqrt() * (sample - centre))
}

pub fn effective_size(n: usize, m: usize) -> f64 {
    (n as f64) * (m as f64) / ((n + m) as f64)
}

/// Cluster the pooled sample, estimate the population cell probabilities from
/// `reference`, and return the centered statistic in the basic setting.
pub fn nu_statistic(
    x: &Dataset,
    y: &Dataset,
    k: usize,
    lambda: f64,
    i_fixed: usize,
    reference: &Dataset,
    kmeans_cfg: &KMeansConfig,
) -> Result<NuObservation> {
    let pooled = x.concat(y)?;
    let partition = kmeans(&pooled, k, kmeans_cfg)?;
    nu_on_partition(x.len(), y.len(), partition, lambda, i_fixed, reference)
}

/// [`nu_statistic`] on a precomputed partition of the pooled sample
/// (first `n` rows are `X`).
pub fn nu_on_partition(
    n: usize,
    m: usize,
    partition: KMeansResult,
    lambda: f64,
    i_fixed: usize,
    reference: &Dataset,
) -> Result<NuObservation> {
    let k = partition.k();
    if partition.assignments.len() != n + m {
        return Err(invalid_input("partition does not cover the pooled sample"));
    }
    let (lx, ly) = partition.assignments.split_at(n);
    let a_hat = ProbVector::from_counts(&cell_counts(lx, k)?)?;
    let b_hat = ProbVector::from_counts(&cell_counts(ly, k)?)?;
    let ref_labels = assign_voronoi(reference, &partition.centers)?;
    let a_star = ProbVector::from_counts(&cell_counts(&ref_labels, k)?)?;
    let cost = cost_matrix(&partition.centers);
    let kernel = SinkhornKernel::new(&cost, lambda)?;
    let value = nu_from_frequencies(&kernel, &a_hat, &b_hat, &a_star, n, m, i_fixed)?;
    Ok(NuObservation {
        value,
        n,
        m,
        n_e: effective_size(n, m),
        a_hat,
        b_hat,
        a_star,
        cost,
        partition,
    })
}

/// Largest Sinkhorn iteration count needed to reach `stop` over `replicas`
/// random relabelings of the pooled sample, in the basic setting.
pub fn estimate_iteration_bound(
    partition: &KMeansResult,
    n: usize,
    m: usize,
    lambda: f64,
    replicas: usize,
    seed: u64,
    stop: StoppingRule,
) -> Result<usize> {
    let k = partition.k();
    let kernel = SinkhornKernel::new(&cost_matrix(&partition.centers), lambda)?;
    let mut bound = 0;
    for b in 0..replicas {
        let in_x = replica_split(n, m, seed, b);
        let mut cx = vec![0usize; k];
        let mut cy = vec![0usize; k];
        for (&l, &is_x) in partition.assignments.iter().zip(&in_x) {
            if is_x {
                cx[l] += 1;
            } else {
                cy[l] += 1;
            }
        }
        let sol = kernel.solve(&ProbVector::from_counts(&cx)?, &ProbVector::from_counts(&cy)?, stop)?;
        bound = bound.max(sol.iterations);
    }
    Ok(if bound == 0 { DEFAULT_ITERATIONS } else { bound })
}
