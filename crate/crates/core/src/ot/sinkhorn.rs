use super::{check_dims, shannon_entropy, CostMatrix, ProbVector, TransportPlan};
use crate::error::{invalid_param, Error, Result};

/// When to stop the Sinkhorn scaling iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// Apply the scaling map exactly this many times.
    FixedIterations(usize),
    /// Stop once both plan marginals are within `tol` of their targets, or
    /// after `max_iter` iterations.
    MarginalTolerance { tol: f64, max_iter: usize },
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule::MarginalTolerance {
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

/// Which Sinkhorn-based quantity to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SinkhornVariant {
    /// `S = <D,T> - lambda H(T)` at the entropic optimum. May be negative.
    Regularized,
    /// `S_hat = <D,T>` at the entropic optimum.
    Cost,
    /// `S_bar(a,b) = S_hat(a,b) - (S_hat(a,a) + S_hat(b,b)) / 2`.
    Debiased,
}

#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    pub plan: TransportPlan,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// `false` only when a marginal tolerance was requested and not met.
    pub converged: bool,
    /// Largest marginal deviation of the returned plan.
    pub marginal_error: f64,
    /// Regularized objective `<D,T> - lambda H(T)`.
    pub s_lambda: f64,
    /// Transport cost `<D,T>`.
    pub s_hat: f64,
    /// `(S_hat(a,a), S_hat(b,b))`, filled by [`SinkhornKernel::solve_with_self_terms`].
    pub s_bar_self_terms: Option<(f64, f64)>,
}

impl SinkhornSolution {
    pub fn s_bar(&self) -> Option<f64> {
        self.s_bar_self_terms
            .map(|(aa, bb)| self.s_hat - 0.5 * (aa + bb))
    }
}

/// The Gibbs kernel `K = exp(-D / lambda)` for a fixed cost and lambda.
///
/// Building it once and solving many marginal pairs against it is the hot
/// path of the permutation tests in the basic setting.
#[derive(Debug, Clone)]
pub struct SinkhornKernel {
    cost: CostMatrix,
    lambda: f64,
    kernel: Vec<f64>,
}

impl SinkhornKernel {
    pub fn new(cost: &CostMatrix, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid_param(format!("lambda must be positive, got {lambda}")));
        }
        let kernel: Vec<f64> = cost.entries().iter().map(|c| (-c / lambda).exp()).collect();
        let count = kernel.iter().filter(|k| **k < f64::MIN_POSITIVE).count();
        if count > 0 {
            return Err(Error::KernelUnderflow {
                count,
                max_cost: cost.max_entry(),
                lambda,
            });
        }
        Ok(SinkhornKernel {
            cost: cost.clone(),
            lambda,
            kernel,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn solve(&self, a: &ProbVector, b: &ProbVector, stop: StoppingRule) -> Result<SinkhornSolution> {
        check_dims(a, b, &self.cost)?;
        let len = self.cost.len();
        let (max_iter, tol) = match stop {
            StoppingRule::FixedIterations(0) => {
                return Err(invalid_param("fixed iteration count must be at least 1"))
            }
            StoppingRule::FixedIterations(i) => (i, None),
            StoppingRule::MarginalTolerance { tol, max_iter } => {
                if !(tol > 0.0) || max_iter == 0 {
                    return Err(invalid_param("marginal tolerance and max_iter must be positive"));
                }
                (max_iter, Some(tol))
            }
        };

        let k = &self.kernel;
        let (a, b) = (a.as_slice(), b.as_slice());
        let mut u = vec![1.0; len];
        let mut v = vec![1.0; len];
        let mut kv = vec![0.0; len];
        let mut ktu = vec![0.0; len];
        mat_vec(k, &v, &mut kv);

        let mut iterations = 0;
        let mut converged = tol.is_none();
        while iterations < max_iter {
            scale(a, &kv, &mut u);
            mat_t_vec(k, &u, &mut ktu);
            scale(b, &ktu, &mut v);
            mat_vec(k, &v, &mut kv);
            iterations += 1;
            if let Some(tol) = tol {
                // Columns match b up to rounding right after the v update.
                let row_err = u
                    .iter()
                    .zip(&kv)
                    .zip(a)
                    .map(|((ui, kvi), ai)| (ui * kvi - ai).abs())
                    .fold(0.0, f64::max);
                if row_err <= tol {
                    converged = true;
                    break;
                }
            }
        }

        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(invalid_param(format!(
                "Sinkhorn scalings overflowed at lambda = {}; use a larger lambda or rescale the data",
                self.lambda
            )));
        }

        let mut mass = vec![0.0; len * len];
        for i in 0..len {
            let row = &k[i * len..(i + 1) * len];
            for j in 0..len {
                mass[i * len + j] = u[i] * row[j] * v[j];
            }
        }
        let plan = TransportPlan::from_raw(len, len, mass);
        let s_hat = plan.cost(&self.cost);
        let s_lambda = s_hat - self.lambda * shannon_entropy(&plan);
        let marginal_error = marginal_error(&plan, a, b);
        if let Some(tol) = tol {
            converged = converged && marginal_error <= tol;
        }
        Ok(SinkhornSolution {
            plan,
            u,
            v,
            iterations,
            converged,
            marginal_error,
            s_lambda,
            s_hat,
            s_bar_self_terms: None,
        })
    }

    /// Solve `(a,b)` and the two self problems `(a,a)`, `(b,b)`.
    pub fn solve_with_self_terms(
        &self,
        a: &ProbVector,
        b: &ProbVector,
        stop: StoppingRule,
    ) -> Result<SinkhornSolution> {
        let mut sol = self.solve(a, b, stop)?;
        let aa = self.solve(a, a, stop)?.s_hat;
        let bb = self.solve(b, b, stop)?.s_hat;
        sol.s_bar_self_terms = Some((aa, bb));
        Ok(sol)
    }

    pub fn divergence(
        &self,
        a: &ProbVector,
        b: &ProbVector,
        variant: SinkhornVariant,
        stop: StoppingRule,
    ) -> Result<f64> {
        Ok(match variant {
            SinkhornVariant::Regularized => self.solve(a, b, stop)?.s_lambda,
            SinkhornVariant::Cost => self.solve(a, b, stop)?.s_hat,
            SinkhornVariant::Debiased => self
                .solve_with_self_terms(a, b, stop)?
                .s_bar()
                .expect("self terms were requested"),
        })
    }
}

/// Entropic optimal transport between `a` and `b` under cost `d`.
///
/// Scalings start at the all-ones vectors and follow
/// `u <- a / (K v)`, `v <- b / (K^T u)`. A zero target mass keeps the
/// matching scaling, and hence the plan row or column, at exactly zero.
pub fn sinkhorn_solve(
    a: &ProbVector,
    b: &ProbVector,
    d: &CostMatrix,
    lambda: f64,
    stop: StoppingRule,
) -> Result<SinkhornSolution> {
    check_dims(a, b, d)?;
    SinkhornKernel::new(d, lambda)?.solve(a, b, stop)
}

pub fn divergence(
    a: &ProbVector,
    b: &ProbVector,
    d: &CostMatrix,
    lambda: f64,
    variant: SinkhornVariant,
    stop: StoppingRule,
) -> Result<f64> {
    check_dims(a, b, d)?;
    SinkhornKernel::new(d, lambda)?.divergence(a, b, variant, stop)
}

fn mat_vec(k: &[f64], x: &[f64], out: &mut [f64]) {
    let len = x.len();
    for (o, row) in out.iter_mut().zip(k.chunks_exact(len)) {
        *o = row.iter().zip(x).map(|(kij, xj)| kij * xj).sum();
    }
}

fn mat_t_vec(k: &[f64], x: &[f64], out: &mut [f64]) {
    let len = x.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for (xi, row) in x.iter().zip(k.chunks_exact(len)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, kij) in out.iter_mut().zip(row) {
            *o += xi * kij;
        }
    }
}

// 0 / x = 0 for zero targets, so empty cells never pick up mass.
fn scale(target: &[f64], denom: &[f64], out: &mut [f64]) {
    for ((o, t), d) in out.iter_mut().zip(target).zip(denom) {
        *o = if *t == 0.0 { 0.0 } else { t / d };
    }
}

fn marginal_error(plan: &TransportPlan, a: &[f64], b: &[f64]) -> f64 {
    let rows = plan.row_sums().into_iter().zip(a).map(|(s, t)| (s - t).abs());
    let cols = plan.col_sums().into_iter().zip(b).map(|(s, t)| (s - t).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> CostMatrix {
        CostMatrix::from_entries(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn single_support_point() {
        let a = ProbVector::new(vec![1.0]).unwrap();
        let d = CostMatrix::from_entries(1, vec![0.0]).unwrap();
        let sol = sinkhorn_solve(&a, &a, &d, 1.0, StoppingRule::default()).unwrap();
        assert_eq!(sol.plan.as_slice(), &[1.0]);
        assert_eq!(sol.s_lambda, 0.0);
        assert_eq!(sol.s_hat, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn zero_mass_row_is_exactly_zero() {
        let a = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let b = ProbVector::new(vec![0.5, 0.5]).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let sol = sinkhorn_solve(&a, &b, &two_point(), lambda, StoppingRule::default()).unwrap();
            assert_eq!(sol.plan.get(1, 0), 0.0);
            assert_eq!(sol.plan.get(1, 1), 0.0);
            assert_abs_diff_eq!(sol.plan.get(0, 0), 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(sol.plan.get(0, 1), 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_lambda_and_dims() {
        let a = ProbVector::uniform(2).unwrap();
        let c = ProbVector::uniform(3).unwrap();
        assert!(matches!(
            sinkhorn_solve(&a, &a, &two_point(), 0.0, StoppingRule::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            sinkhorn_solve(&a, &a, &two_point(), -1.0, StoppingRule::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            sinkhorn_solve(&a, &c, &two_point(), 1.0, StoppingRule::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn kernel_underflow_is_reported() {
        let d = CostMatrix::from_entries(2, vec![0.0, 1000.0, 1000.0, 0.0]).unwrap();
        let a = ProbVector::uniform(2).unwrap();
        let err = sinkhorn_solve(&a, &a, &d, 0.5, StoppingRule::default()).unwrap_err();
        assert!(matches!(err, Error::KernelUnderflow { count: 2, .. }), "{err}");
    }

    #[test]
    fn iteration_cap_sets_flag() {
        let a = ProbVector::new(vec![0.9, 0.1]).unwrap();
        let b = ProbVector::new(vec![0.2, 0.8]).unwrap();
        let stop = StoppingRule::MarginalTolerance { tol: 1e-15, max_iter: 1 };
        let sol = sinkhorn_solve(&a, &b, &two_point(), 0.05, stop).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        let fixed = sinkhorn_solve(&a, &b, &two_point(), 0.05, StoppingRule::FixedIterations(3)).unwrap();
        assert_eq!(fixed.iterations, 3);
        assert!(fixed.converged);
    }

    #[test]
    fn debiased_vanishes_on_the_diagonal() {
        let a = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let pts = crate::Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.3, 2.0]]).unwrap();
        let d = super::super::cost_matrix(&pts);
        let v = divergence(&a, &a, &d, 1.0, SinkhornVariant::Debiased, StoppingRule::default()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }
}
