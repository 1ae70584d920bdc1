//! Permutation two-sample tests.
//!
//! The engine ([`permutation_engine`]) works for any statistic of a split of
//! the pooled sample. Concrete statistics are the optimal-transport family on
//! a frozen k-means partition ([`PartitionStatistic`]) and the k-nearest
//! neighbour same-sample proportion ([`SchillingStatistic`]).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{sq_dist, Dataset};
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::ot::{
    cost_matrix, exact_ot, CostMatrix, ProbVector, SinkhornKernel, SinkhornVariant, StoppingRule,
};
use crate::partition::{double_centers_pooled, kmeans, KMeansConfig, KMeansResult};
use crate::rng;

const PARTITION_TAG: u64 = 0x5041_5254;
const REPLICA_TAG: u64 = 0x5245_504c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StatisticKind {
    /// Exact squared Wasserstein distance between the cell frequencies.
    Wasserstein,
    /// Entropic objective `<D,T> - lambda H(T)`.
    Regularized,
    /// Transport cost of the entropic plan.
    Cost,
    /// Debiased transport cost.
    Debiased,
    /// Proportion of same-sample pairs in the k-NN graph of the pooled sample.
    Schilling,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 5] = [
        StatisticKind::Schilling,
        StatisticKind::Wasserstein,
        StatisticKind::Regularized,
        StatisticKind::Cost,
        StatisticKind::Debiased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Wasserstein => "w",
            StatisticKind::Regularized => "s",
            StatisticKind::Cost => "s-hat",
            StatisticKind::Debiased => "s-bar",
            StatisticKind::Schilling => "schilling",
        }
    }

    pub fn sinkhorn_variant(self) -> Option<SinkhornVariant> {
        match self {
            StatisticKind::Regularized => Some(SinkhornVariant::Regularized),
            StatisticKind::Cost => Some(SinkhornVariant::Cost),
            StatisticKind::Debiased => Some(SinkhornVariant::Debiased),
            _ => None,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown statistic '{s}' (expected one of w, s, s-hat, s-bar, schilling)"
                ))
            })
    }
}

impl From<StatisticKind> for String {
    fn from(k: StatisticKind) -> String {
        k.name().to_string()
    }
}

impl TryFrom<String> for StatisticKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Support used for the cell-based statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PartitionMode {
    /// The `k` pooled centers, cost = inter-center squared distances.
    Basic,
    /// Per-cell `X` and `Y` means (`2k` points) with zero-padded frequencies.
    DoubleCenters,
}

impl PartitionMode {
    pub fn name(self) -> &'static str {
        match self {
            PartitionMode::Basic => "basic",
            PartitionMode::DoubleCenters => "double",
        }
    }
}

impl FromStr for PartitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(PartitionMode::Basic),
            "double" | "double-centers" | "double_centers" => Ok(PartitionMode::DoubleCenters),
            _ => Err(Error::Config(format!("unknown partition mode '{s}' (basic, double)"))),
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl From<PartitionMode> for String {
    fn from(m: PartitionMode) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for PartitionMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticSpec {
    pub kind: StatisticKind,
    /// Entropic regularization; ignored by `Wasserstein` and `Schilling`.
    pub lambda: f64,
    /// Ignored by `Schilling`.
    pub mode: PartitionMode,
    pub k_clusters: usize,
    /// Neighbours per point; `Schilling` only.
    pub knn_k: usize,
    pub stop: StoppingRule,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
}

impl StatisticSpec {
    pub fn new(kind: StatisticKind) -> Self {
        StatisticSpec {
            kind,
            lambda: 1.0,
            mode: PartitionMode::DoubleCenters,
            k_clusters: 10,
            knn_k: 4,
            stop: StoppingRule::default(),
            kmeans_restarts: 10,
            kmeans_max_iter: 300,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_mode(mut self, mode: PartitionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k_clusters = k;
        self
    }

    pub fn with_knn(mut self, knn_k: usize) -> Self {
        self.knn_k = knn_k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.sinkhorn_variant().is_some() && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid_param(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.kind == StatisticKind::Schilling {
            if self.knn_k == 0 {
                return Err(invalid_param("knn_k must be at least 1"));
            }
        } else if self.k_clusters < 2 {
            return Err(invalid_param("k_clusters must be at least 2"));
        }
        Ok(())
    }
}

/// Outcome of a permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub observed: f64,
    pub replicas: Vec<f64>,
    pub p_value: f64,
    pub b_used: usize,
}

/// A statistic of a labelled split of a fixed pooled sample.
pub trait SplitStatistic {
    /// `in_x[i]` tells whether pooled observation `i` belongs to the first sample.
    fn evaluate(&self, in_x: &[bool]) -> Result<f64>;
}

impl<F> SplitStatistic for F
where
    F: Fn(&[bool]) -> Result<f64>,
{
    fn evaluate(&self, in_x: &[bool]) -> Result<f64> {
        self(in_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationOptions {
    pub replicas: usize,
    pub seed: u64,
    /// Report `(count + 1) / (B + 1)` instead of `count / B`.
    pub add_one: bool,
}

impl PermutationOptions {
    pub fn new(replicas: usize, seed: u64) -> Self {
        PermutationOptions {
            replicas,
            seed,
            add_one: false,
        }
    }
}

/// Membership mask of the observed split: first `n` pooled rows are `X`.
pub fn observed_split(n: usize, m: usize) -> Vec<bool> {
    (0..n + m).map(|i| i < n).collect()
}

/// The split used by replica `b`: a seeded Fisher-Yates shuffle of the pooled
/// indices whose first `n` entries form `X`.
pub fn replica_split(n: usize, m: usize, seed: u64, b: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n + m).collect();
    order.shuffle(&mut rng::stream(seed, &[REPLICA_TAG, b as u64]));
    let mut in_x = vec![false; n + m];
    for &i in &order[..n] {
        in_x[i] = true;
    }
    in_x
}

/// Run `opts.replicas` random relabelings of the pooled sample.
///
/// Each replica draws its split from its own stream derived from
/// `(opts.seed, b)`, so results do not depend on evaluation order.
pub fn permutation_engine<S: SplitStatistic + ?Sized>(
    stat: &S,
    n: usize,
    m: usize,
    opts: PermutationOptions,
) -> Result<TestResult> {
    if opts.replicas == 0 {
        return Err(invalid_param("the number of permutations B must be at least 1"));
    }
    if n == 0 || m == 0 {
        return Err(invalid_input("both samples need at least one observation"));
    }
    let observed = stat.evaluate(&observed_split(n, m))?;
    let replicas = (0..opts.replicas)
        .map(|b| stat.evaluate(&replica_split(n, m, opts.seed, b)))
        .collect::<Result<Vec<f64>>>()?;
    let exceed = replicas.iter().filter(|r| **r >= observed).count();
    let p_value = if opts.add_one {
        (exceed + 1) as f64 / (opts.replicas + 1) as f64
    } else {
        exceed as f64 / opts.replicas as f64
    };
    Ok(TestResult {
        observed,
        replicas,
        p_value,
        b_used: opts.replicas,
    })
}

/// Permutation test of `x` against `y` with the statistic described by `spec`.
pub fn permutation_test(
    x: &Dataset,
    y: &Dataset,
    spec: &StatisticSpec,
    replicas: usize,
    seed: u64,
) -> Result<TestResult> {
    permutation_test_with(x, y, spec, PermutationOptions::new(replicas, seed))
}

pub fn permutation_test_with(
    x: &Dataset,
    y: &Dataset,
    spec: &StatisticSpec,
    opts: PermutationOptions,
) -> Result<TestResult> {
    spec.validate()?;
    if opts.replicas == 0 {
        return Err(invalid_param("the number of permutations B must be at least 1"));
    }
    let pooled = x.concat(y)?;
    let stat = build_statistic(pooled, spec, opts.seed)?;
    permutation_engine(stat.as_ref(), x.len(), y.len(), opts)
}

/// The split statistic for `spec` on a pooled sample.
pub fn build_statistic(
    pooled: Dataset,
    spec: &StatisticSpec,
    seed: u64,
) -> Result<Box<dyn SplitStatistic>> {
    spec.validate()?;
    Ok(match spec.kind {
        StatisticKind::Schilling => Box::new(SchillingStatistic::new(&pooled, spec.knn_k)?),
        _ => Box::new(PartitionStatistic::new(pooled, spec, seed)?),
    })
}

/// Optimal-transport statistics on a k-means partition of the pooled sample.
///
/// The partition (and, in the basic setting, the cost matrix and Gibbs
/// kernel) is computed once and shared by every split.
#[derive(Debug, Clone)]
pub struct PartitionStatistic {
    pooled: Dataset,
    partition: KMeansResult,
    kind: StatisticKind,
    mode: PartitionMode,
    lambda: f64,
    stop: StoppingRule,
    basic_cost: CostMatrix,
    basic_kernel: Option<SinkhornKernel>,
}

impl PartitionStatistic {
    pub fn new(pooled: Dataset, spec: &StatisticSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        if spec.kind == StatisticKind::Schilling {
            return Err(invalid_param("Schilling's statistic does not use a partition"));
        }
        if spec.k_clusters > pooled.len() {
            return Err(invalid_input(format!(
                "k_clusters = {} exceeds the pooled sample size {}",
                spec.k_clusters,
                pooled.len()
            )));
        }
        let cfg = KMeansConfig {
            restarts: spec.kmeans_restarts,
            max_iter: spec.kmeans_max_iter,
            seed: rng::derive_seed(seed, &[PARTITION_TAG]),
        };
        let partition = kmeans(&pooled, spec.k_clusters, &cfg)?;
        Self::from_partition(pooled, partition, spec)
    }

    /// Use an already computed partition of `pooled`.
    pub fn from_partition(pooled: Dataset, partition: KMeansResult, spec: &StatisticSpec) -> Result<Self> {
        if partition.assignments.len() != pooled.len() {
            return Err(invalid_input("partition does not match the pooled sample"));
        }
        let basic_cost = cost_matrix(&partition.centers);
        let basic_kernel = match (spec.mode, spec.kind.sinkhorn_variant()) {
            (PartitionMode::Basic, Some(_)) => Some(SinkhornKernel::new(&basic_cost, spec.lambda)?),
            _ => None,
        };
        Ok(PartitionStatistic {
            pooled,
            partition,
            kind: spec.kind,
            mode: spec.mode,
            lambda: spec.lambda,
            stop: spec.stop,
            basic_cost,
            basic_kernel,
        })
    }

    pub fn partition(&self) -> &KMeansResult {
        &self.partition
    }

    /// Cell frequencies of the split.
    pub fn frequencies(&self, in_x: &[bool]) -> Result<(ProbVector, ProbVector)> {
        let k = self.partition.k();
        let mut cx = vec![0usize; k];
        let mut cy = vec![0usize; k];
        for (&l, &is_x) in self.partition.assignments.iter().zip(in_x) {
            if is_x {
                cx[l] += 1;
            } else {
                cy[l] += 1;
            }
        }
        Ok((ProbVector::from_counts(&cx)?, ProbVector::from_counts(&cy)?))
    }

    fn score(&self, a: &ProbVector, b: &ProbVector, cost: &CostMatrix, kernel: Option<&SinkhornKernel>) -> Result<f64> {
        match self.kind.sinkhorn_variant() {
            None => Ok(exact_ot(a, b, cost)?.w2_squared),
            Some(variant) => match kernel {
                Some(k) => k.divergence(a, b, variant, self.stop),
                None => SinkhornKernel::new(cost, self.lambda)?.divergence(a, b, variant, self.stop),
            },
        }
    }
}

impl SplitStatistic for PartitionStatistic {
    fn evaluate(&self, in_x: &[bool]) -> Result<f64> {
        if in_x.len() != self.pooled.len() {
            return Err(invalid_input("membership mask does not match the pooled sample"));
        }
        match self.mode {
            PartitionMode::Basic => {
                let (a, b) = self.frequencies(in_x)?;
                self.score(&a, &b, &self.basic_cost, self.basic_kernel.as_ref())
            }
            PartitionMode::DoubleCenters => {
                let setup = double_centers_pooled(
                    &self.pooled,
                    &self.partition.assignments,
                    in_x,
                    self.partition.k(),
                )?;
                self.score(&setup.a_pad, &setup.b_pad, &setup.cost, None)
            }
        }
    }
}

/// Same-sample neighbour proportion on a fixed k-NN graph.
#[derive(Debug, Clone)]
pub struct SchillingStatistic {
    knn_k: usize,
    /// Row `i` lists the `knn_k` nearest neighbours of pooled point `i`.
    neighbors: Vec<usize>,
}

impl SchillingStatistic {
    pub fn new(pooled: &Dataset, knn_k: usize) -> Result<Self> {
        Ok(SchillingStatistic {
            knn_k,
            neighbors: knn_graph(pooled, knn_k)?,
        })
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.knn_k..(i + 1) * self.knn_k]
    }
}

impl SplitStatistic for SchillingStatistic {
    fn evaluate(&self, in_x: &[bool]) -> Result<f64> {
        if in_x.len() * self.knn_k != self.neighbors.len() {
            return Err(invalid_input("membership mask does not match the pooled sample"));
        }
        let same = self
            .neighbors
            .chunks_exact(self.knn_k)
            .zip(in_x)
            .map(|(nbrs, &own)| nbrs.iter().filter(|&&j| in_x[j] == own).count())
            .sum::<usize>();
        Ok(same as f64 / self.neighbors.len() as f64)
    }
}

/// `knn_k` nearest neighbours of every point (self excluded, ties to the lower index).
pub fn knn_graph(pooled: &Dataset, knn_k: usize) -> Result<Vec<usize>> {
    let n = pooled.len();
    if knn_k == 0 || knn_k >= n {
        return Err(invalid_input(format!(
            "knn_k = {knn_k} must be in 1..{n} for a pooled sample of {n} points"
        )));
    }
    let by_distance = |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
    let mut out = Vec::with_capacity(n * knn_k);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        let p = pooled.row(i);
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(p, pooled.row(j)), j)));
        if knn_k < candidates.len() {
            candidates.select_nth_unstable_by(knn_k - 1, by_distance);
        }
        let nearest = &mut candidates[..knn_k];
        nearest.sort_unstable_by(by_distance);
        out.extend(nearest.iter().map(|c| c.1));
    }
    Ok(out)
}

/// Proportion of the `N * knn_k` (point, neighbour) pairs of the pooled k-NN
/// graph whose endpoints come from the same sample.
pub fn schilling_statistic(x: &Dataset, y: &Dataset, knn_k: usize) -> Result<f64> {
    let pooled = x.concat(y)?;
    SchillingStatistic::new(&pooled, knn_k)?.evaluate(&observed_split(x.len(), y.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kind_names_round_trip() {
        for k in StatisticKind::ALL {
            assert_eq!(k.name().parse::<StatisticKind>().unwrap(), k);
        }
        assert!("foo".parse::<StatisticKind>().is_err());
    }

    #[test]
    fn schilling_separated_clusters() {
        let x = Dataset::from_rows(&[[0.0], [0.1], [0.2], [0.3], [0.4], [0.5]]).unwrap();
        let y = Dataset::from_rows(&[[100.0], [100.1], [100.2], [100.3], [100.4], [100.5]]).unwrap();
        assert_eq!(schilling_statistic(&x, &y, 4).unwrap(), 1.0);
    }

    #[test]
    fn schilling_one_point_each() {
        let x = Dataset::from_rows(&[[0.0]]).unwrap();
        let y = Dataset::from_rows(&[[1.0]]).unwrap();
        assert_eq!(schilling_statistic(&x, &y, 1).unwrap(), 0.0);
        assert!(schilling_statistic(&x, &y, 2).is_err());
    }

    #[test]
    fn knn_ties_go_to_lower_index() {
        let p = Dataset::from_rows(&[[0.0], [1.0], [-1.0], [2.0]]).unwrap();
        let g = knn_graph(&p, 1).unwrap();
        assert_eq!(g, vec![1, 0, 0, 1]);
    }

    #[test]
    fn constant_statistic_has_p_value_one() {
        let stat = |_: &[bool]| -> Result<f64> { Ok(0.25) };
        let r = permutation_engine(&stat, 5, 7, PermutationOptions::new(50, 3)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.replicas.len(), 50);
        assert_eq!(r.b_used, 50);
    }

    #[test]
    fn add_one_mode() {
        let stat = |in_x: &[bool]| -> Result<f64> { Ok(if in_x[0] { 1.0 } else { 0.0 }) };
        let plain = permutation_engine(&stat, 1, 1, PermutationOptions::new(10, 0)).unwrap();
        let mut opts = PermutationOptions::new(10, 0);
        opts.add_one = true;
        let conservative = permutation_engine(&stat, 1, 1, opts).unwrap();
        let exceed = (plain.p_value * 10.0).round();
        assert_abs_diff_eq!(conservative.p_value, (exceed + 1.0) / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_permutations_rejected() {
        let x = Dataset::from_rows(&[[0.0], [1.0]]).unwrap();
        let spec = StatisticSpec::new(StatisticKind::Cost).with_k(2);
        assert!(matches!(permutation_test(&x, &x, &spec, 0, 1), Err(Error::InvalidParameter(_))));
        let spec = spec.with_k(5);
        assert!(matches!(permutation_test(&x, &x, &spec, 10, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn replica_split_has_n_members() {
        for b in 0..20 {
            let s = replica_split(7, 4, 99, b);
            assert_eq!(s.iter().filter(|v| **v).count(), 7);
        }
        assert_eq!(replica_split(7, 4, 99, 3), replica_split(7, 4, 99, 3));
    }

    #[test]
    fn identical_samples_basic_mode() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [0.2, 0.1], [3.0, 3.0], [3.1, 2.9], [6.0, 0.0], [6.1, 0.2]])
            .unwrap();
        let pooled = x.concat(&x).unwrap();
        let split = observed_split(x.len(), x.len());
        for kind in [StatisticKind::Wasserstein, StatisticKind::Debiased] {
            let spec = StatisticSpec::new(kind).with_k(3).with_mode(PartitionMode::Basic);
            let stat = PartitionStatistic::new(pooled.clone(), &spec, 5).unwrap();
            assert_eq!(stat.evaluate(&split).unwrap(), 0.0, "{kind}");
        }
        let spec = StatisticSpec::new(StatisticKind::Cost).with_k(3).with_mode(PartitionMode::Basic);
        let stat = PartitionStatistic::new(pooled, &spec, 5).unwrap();
        assert!(stat.evaluate(&split).unwrap() > 0.0);
    }
}
