//! Permutation two-sample tests built on entropic optimal transport between
//! cell frequencies of a k-means partition.
//!
//! The pooled sample is clustered once, each sample is summarized by the
//! fraction of its points falling in each cell, and the two frequency vectors
//! are compared with a Sinkhorn divergence over the inter-center costs. The
//! null distribution comes from random relabelings of the pooled sample.
//!
//! ```
//! use sinkperm::distributions::find_scenario;
//! use sinkperm::twosample::{permutation_test, StatisticKind, StatisticSpec};
//!
//! let scenario = find_scenario("mvg-mu3").unwrap();
//! let x = scenario.sample_x(100, 1).unwrap();
//! let y = scenario.sample_y(100, 2).unwrap();
//! let spec = StatisticSpec::new(StatisticKind::Cost).with_k(5);
//! let result = permutation_test(&x, &y, &spec, 50, 7).unwrap();
//! assert!(result.p_value < 0.05);
//! ```

pub mod asymptotics;
pub mod data;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod ot;
pub mod partition;
pub mod rng;
pub mod twosample;

/// Guide chapters, compiled as doc-tests so the snippets stay current.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub struct Intro;
    #[doc = include_str!("../../../book/src/sinkhorn.md")]
    pub struct Sinkhorn;
    #[doc = include_str!("../../../book/src/partitions.md")]
    pub struct Partitions;
    #[doc = include_str!("../../../book/src/permutation.md")]
    pub struct Permutation;
    #[doc = include_str!("../../../book/src/distributions.md")]
    pub struct Distributions;
    #[doc = include_str!("../../../book/src/gaussian-limit.md")]
    pub struct GaussianLimit;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}

pub use data::Dataset;
pub use error::{Error, Result};
pub use ot::{CostMatrix, ProbVector, SinkhornKernel, SinkhornVariant, StoppingRule};
pub use twosample::{permutation_test, StatisticKind, StatisticSpec, TestResult};
