//! Monte Carlo experiment runner: power tables, p-value histograms and the
//! Gaussian-limit study, with CSV/JSON output.
//!
//! Every repetition draws its samples from streams derived from
//! `(seed, scenario id, rep)`, and the same sample pair is reused across
//! statistics and `lambda` values so that their power is compared on common
//! data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::asymptotics::{
    clt_estimate, estimate_iteration_bound, normality_check, nu_on_partition, ShapiroWilk,
    DEFAULT_EPSILON, SHAPIRO_MAX, SHAPIRO_MIN,
};
use crate::data::Dataset;
use crate::distributions::{find_scenario, Scenario};
use crate::error::{Error, Result};
use crate::ot::StoppingRule;
use crate::partition::{kmeans, KMeansConfig};
use crate::rng::derive_seed;
use crate::twosample::{
    build_statistic, permutation_engine, PartitionMode, PermutationOptions, StatisticKind,
    StatisticSpec,
};

/// Directory used for output files when no explicit path is configured.
pub const OUT_DIR_ENV: &str = "SINKPERM_OUT_DIR";

/// Number of fixed-width p-value bins over `[0, 1]`.
pub const PVALUE_BINS: usize = 20;

const SAMPLE_TAG: u64 = 0x5341_4d50;
const TEST_TAG: u64 = 0x5445_5354;
const REFERENCE_TAG: u64 = 0x5245_4646;
const KMEANS_TAG: u64 = 0x4b4d_4e53;
const ITERATION_TAG: u64 = 0x4954_4552;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format '{s}' (csv, json)"))),
        }
    }
}

/// Settings shared by every experiment. Loaded from TOML with
/// [`ExperimentConfig::from_toml`]; missing keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<String>,
    pub statistics: Vec<StatisticKind>,
    pub n: usize,
    pub m: usize,
    /// Number of k-means cells.
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub mode: PartitionMode,
    /// Neighbours per point for the Schilling statistic.
    pub knn: usize,
    /// Permutations per test.
    pub permutations: usize,
    /// Monte Carlo repetitions.
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    /// Add one to numerator and denominator of the permutation p-value.
    pub add_one: bool,
    /// Dimension override for Bounded Burr scenarios.
    pub dim: Option<usize>,
    /// Size of the auxiliary null sample estimating cell probabilities.
    pub reference_size: usize,
    /// Permutation replicas used to bound the Sinkhorn iteration count.
    pub iteration_replicas: usize,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenarios: vec!["mvg-null".to_string()],
            statistics: vec![
                StatisticKind::Wasserstein,
                StatisticKind::Regularized,
                StatisticKind::Cost,
                StatisticKind::Debiased,
                StatisticKind::Schilling,
            ],
            n: 500,
            m: 500,
            k: 10,
            lambdas: vec![1.0],
            mode: PartitionMode::DoubleCenters,
            knn: 4,
            permutations: 200,
            reps: 200,
            level: 0.05,
            seed: 1,
            add_one: false,
            dim: None,
            reference_size: 100_000,
            iteration_replicas: 100,
            epsilon: DEFAULT_EPSILON,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Check every field and resolve the scenarios.
    pub fn validate(&self) -> Result<Vec<Scenario>> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.permutations == 0 {
            return bad("permutations must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be positive".into());
        }
        if self.scenarios.is_empty() {
            return bad("no scenario selected".into());
        }
        if self.statistics.is_empty() {
            return bad("no statistic selected".into());
        }
        if self.lambdas.is_empty() {
            return bad("the lambda grid is empty".into());
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return bad(format!("lambda must be positive, got {l}"));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        for &kind in &self.statistics {
            self.spec(kind, self.lambdas[0])
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.scenarios
            .iter()
            .map(|id| {
                let s = find_scenario(id)?;
                match self.dim {
                    Some(d) if d != s.dim => s.with_dim(d),
                    _ => Ok(s),
                }
            })
            .collect()
    }

    pub fn spec(&self, kind: StatisticKind, lambda: f64) -> StatisticSpec {
        StatisticSpec::new(kind)
            .with_lambda(lambda)
            .with_mode(self.mode)
            .with_k(self.k)
            .with_knn(self.knn)
    }

    /// Lambda values relevant to `kind`: the grid for Sinkhorn statistics,
    /// none otherwise.
    fn lambdas_for(&self, kind: StatisticKind) -> Vec<Option<f64>> {
        if kind.sinkhorn_variant().is_some() {
            self.lambdas.iter().map(|&l| Some(l)).collect()
        } else {
            vec![None]
        }
    }

    fn mode_for(&self, kind: StatisticKind) -> Option<PartitionMode> {
        (kind != StatisticKind::Schilling).then_some(self.mode)
    }
}

/// Seeds of the `X` and `Y` samples of repetition `rep`.
pub fn sample_seeds(seed: u64, scenario: &str, rep: usize) -> (u64, u64) {
    let id = id_hash(scenario);
    (
        derive_seed(seed, &[SAMPLE_TAG, id, rep as u64, 0]),
        derive_seed(seed, &[SAMPLE_TAG, id, rep as u64, 1]),
    )
}

/// Seed of the permutation test of repetition `rep`.
pub fn test_seed(seed: u64, scenario: &str, rep: usize) -> u64 {
    derive_seed(seed, &[TEST_TAG, id_hash(scenario), rep as u64])
}

// FNV-1a, so scenario streams do not depend on catalog order.
fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// One permutation p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvalueRow {
    pub scenario: String,
    pub statistic: StatisticKind,
    pub mode: Option<PartitionMode>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    #[serde(rename = "B")]
    pub permutations: usize,
    pub seed: u64,
    pub rep: usize,
    pub observed: f64,
    pub p_value: f64,
}

/// Rejection rate of one (scenario, statistic, lambda) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub scenario: String,
    pub statistic: StatisticKind,
    pub mode: Option<PartitionMode>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    #[serde(rename = "B")]
    pub permutations: usize,
    pub seed: u64,
    pub level: f64,
    pub reps: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// Wall-clock seconds per p-value; kept out of the data files.
    #[serde(skip)]
    pub avg_pvalue_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub scenario: String,
    pub statistic: StatisticKind,
    pub mode: Option<PartitionMode>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    #[serde(rename = "B")]
    pub permutations: usize,
    pub seed: u64,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvalueStudy {
    pub pvalues: Vec<PvalueRow>,
    pub bins: Vec<BinRow>,
    pub timings: Vec<Timing>,
}

/// Mean wall-clock time per p-value of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub scenario: String,
    pub statistic: StatisticKind,
    pub lambda: Option<f64>,
    pub avg_pvalue_time_seconds: f64,
}

/// All p-values of the configured experiment, sorted by
/// (scenario, statistic, lambda, rep).
pub fn collect_pvalues(cfg: &ExperimentConfig) -> Result<(Vec<PvalueRow>, Vec<Timing>)> {
    let scenarios = cfg.validate()?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for scenario in &scenarios {
        let samples = (0..cfg.reps)
            .map(|rep| {
                let (sx, sy) = sample_seeds(cfg.seed, &scenario.id, rep);
                Ok((scenario.sample_x(cfg.n, sx)?, scenario.sample_y(cfg.m, sy)?))
            })
            .collect::<Result<Vec<(Dataset, Dataset)>>>()?;
        for &kind in &cfg.statistics {
            for lambda in cfg.lambdas_for(kind) {
                let spec = cfg.spec(kind, lambda.unwrap_or(1.0));
                let started = Instant::now();
                for (rep, (x, y)) in samples.iter().enumerate() {
                    let opts = PermutationOptions {
                        replicas: cfg.permutations,
                        seed: test_seed(cfg.seed, &scenario.id, rep),
                        add_one: cfg.add_one,
                    };
                    let stat = build_statistic(x.concat(y)?, &spec, opts.seed)?;
                    let result = permutation_engine(stat.as_ref(), x.len(), y.len(), opts)?;
                    rows.push(PvalueRow {
                        scenario: scenario.id.clone(),
                        statistic: kind,
                        mode: cfg.mode_for(kind),
                        n: cfg.n,
                        m: cfg.m,
                        k: cfg.k,
                        lambda,
                        permutations: cfg.permutations,
                        seed: cfg.seed,
                        rep,
                        observed: result.observed,
                        p_value: result.p_value,
                    });
                }
                timings.push(Timing {
                    scenario: scenario.id.clone(),
                    statistic: kind,
                    lambda,
                    avg_pvalue_time_seconds: started.elapsed().as_secs_f64() / cfg.reps as f64,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.scenario, a.statistic)
            .cmp(&(&b.scenario, b.statistic))
            .then(a.lambda.partial_cmp(&b.lambda).expect("lambda is finite"))
            .then(a.rep.cmp(&b.rep))
    });
    Ok((rows, timings))
}

fn groups(rows: &[PvalueRow]) -> Vec<&[PvalueRow]> {
    rows.chunk_by(|a, b| a.scenario == b.scenario && a.statistic == b.statistic && a.lambda == b.lambda)
        .collect()
}

/// Rejection rates at `cfg.level` for every (scenario, statistic, lambda).
pub fn run_power_study(cfg: &ExperimentConfig) -> Result<Vec<PowerRow>> {
    let (rows, timings) = collect_pvalues(cfg)?;
    Ok(power_rows(cfg, &rows, &timings))
}

pub fn power_rows(cfg: &ExperimentConfig, rows: &[PvalueRow], timings: &[Timing]) -> Vec<PowerRow> {
    groups(rows)
        .into_iter()
        .map(|g| {
            let first = &g[0];
            let rejections = g.iter().filter(|r| r.p_value <= cfg.level).count();
            let time = timings
                .iter()
                .find(|t| t.scenario == first.scenario && t.statistic == first.statistic && t.lambda == first.lambda)
                .map_or(0.0, |t| t.avg_pvalue_time_seconds);
            PowerRow {
                scenario: first.scenario.clone(),
                statistic: first.statistic,
                mode: first.mode,
                n: first.n,
                m: first.m,
                k: first.k,
                lambda: first.lambda,
                permutations: first.permutations,
                seed: first.seed,
                level: cfg.level,
                reps: g.len(),
                rejections,
                rejection_rate: rejections as f64 / g.len() as f64,
                avg_pvalue_time_seconds: time,
            }
        })
        .collect()
}

/// Bin index of `p` among [`PVALUE_BINS`] equal bins; `p = 1` falls in the last.
pub fn pvalue_bin(p: f64) -> usize {
    ((p * PVALUE_BINS as f64).floor() as usize).min(PVALUE_BINS - 1)
}

/// All p-values plus their 20-bin histogram per (scenario, statistic, lambda).
pub fn run_pvalue_histogram(cfg: &ExperimentConfig) -> Result<PvalueStudy> {
    let (pvalues, timings) = collect_pvalues(cfg)?;
    let mut bins = Vec::new();
    for g in groups(&pvalues) {
        let mut counts = [0usize; PVALUE_BINS];
        for r in g {
            counts[pvalue_bin(r.p_value)] += 1;
        }
        let first = &g[0];
        for (bin, &count) in counts.iter().enumerate() {
            bins.push(BinRow {
                scenario: first.scenario.clone(),
                statistic: first.statistic,
                mode: first.mode,
                n: first.n,
                m: first.m,
                k: first.k,
                lambda: first.lambda,
                permutations: first.permutations,
                seed: first.seed,
                bin,
                lower: bin as f64 / PVALUE_BINS as f64,
                upper: (bin + 1) as f64 / PVALUE_BINS as f64,
                count,
            });
        }
    }
    Ok(PvalueStudy {
        pvalues,
        bins,
        timings,
    })
}

/// One repetition of the Gaussian-limit experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuRow {
    pub scenario: String,
    pub statistic: StatisticKind,
    pub mode: PartitionMode,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    pub reference_size: usize,
    pub i_fixed: usize,
    pub seed: u64,
    pub rep: usize,
    pub nu: f64,
    pub predicted_mean: f64,
    pub predicted_var: f64,
}

/// Aggregate of one (scenario, lambda) Gaussian-limit run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub scenario: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: f64,
    pub reference_size: usize,
    pub i_fixed: usize,
    pub seed: u64,
    pub reps: usize,
    pub mean_nu: f64,
    pub empirical_var: f64,
    pub mean_predicted_var: f64,
    /// `empirical_var / mean_predicted_var`.
    pub variance_ratio: f64,
    pub shapiro_w: Option<f64>,
    pub shapiro_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltStudy {
    pub rows: Vec<NuRow>,
    pub summaries: Vec<CltSummary>,
}

/// Repeated draws of the centered statistic under a null scenario, in the
/// basic setting, with a fresh reference sample per repetition.
///
/// The fixed iteration count is bounded once per (scenario, lambda) on the
/// partition of the first repetition.
pub fn run_clt_study(cfg: &ExperimentConfig) -> Result<CltStudy> {
    let scenarios = cfg.validate()?;
    if let Some(s) = scenarios.iter().find(|s| !s.is_null) {
        return Err(Error::Config(format!(
            "the Gaussian-limit study needs a null scenario, '{}' is an alternative",
            s.id
        )));
    }
    if cfg.k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let alpha = cfg.n as f64 / (cfg.n + cfg.m) as f64;
    for scenario in &scenarios {
        let id = id_hash(&scenario.id);
        let partitions = (0..cfg.reps)
            .map(|rep| {
                let (sx, sy) = sample_seeds(cfg.seed, &scenario.id, rep);
                let pooled = scenario.sample_x(cfg.n, sx)?.concat(&scenario.sample_y(cfg.m, sy)?)?;
                let km = KMeansConfig {
                    seed: derive_seed(cfg.seed, &[KMEANS_TAG, id, rep as u64]),
                    ..KMeansConfig::default()
                };
                kmeans(&pooled, cfg.k, &km)
            })
            .collect::<Result<Vec<_>>>()?;
        for &lambda in &cfg.lambdas {
            let i_fixed = estimate_iteration_bound(
                &partitions[0],
                cfg.n,
                cfg.m,
                lambda,
                cfg.iteration_replicas,
                derive_seed(cfg.seed, &[ITERATION_TAG, id]),
                StoppingRule::default(),
            )?;
            let mut group = Vec::with_capacity(cfg.reps);
            for (rep, partition) in partitions.iter().enumerate() {
                let reference = scenario.null_params.sample(
                    cfg.reference_size,
                    derive_seed(cfg.seed, &[REFERENCE_TAG, id, rep as u64]),
                )?;
                let obs = nu_on_partition(cfg.n, cfg.m, partition.clone(), lambda, i_fixed, &reference)?;
                let est = clt_estimate(&obs.a_star, &obs.cost, lambda, i_fixed, cfg.epsilon, alpha)?;
                group.push(NuRow {
                    scenario: scenario.id.clone(),
                    statistic: StatisticKind::Cost,
                    mode: PartitionMode::Basic,
                    n: cfg.n,
                    m: cfg.m,
                    k: cfg.k,
                    lambda,
                    reference_size: cfg.reference_size,
                    i_fixed,
                    seed: cfg.seed,
                    rep,
                    nu: obs.value,
                    predicted_mean: 0.0,
                    predicted_var: est.predicted_var,
                });
            }
            summaries.push(summarize(cfg, scenario, lambda, i_fixed, &group)?);
            rows.extend(group);
        }
    }
    Ok(CltStudy { rows, summaries })
}

fn summarize(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    lambda: f64,
    i_fixed: usize,
    group: &[NuRow],
) -> Result<CltSummary> {
    let mut values: Vec<f64> = group.iter().map(|r| r.nu).collect();
    values.sort_by(f64::total_cmp);
    let len = values.len() as f64;
    let mean_nu = values.iter().sum::<f64>() / len;
    let empirical_var = if values.len() > 1 {
        values.iter().map(|v| (v - mean_nu).powi(2)).sum::<f64>() / (len - 1.0)
    } else {
        0.0
    };
    let mean_predicted_var = group.iter().map(|r| r.predicted_var).sum::<f64>() / len;
    let shapiro: Option<ShapiroWilk> = if (SHAPIRO_MIN..=SHAPIRO_MAX).contains(&values.len()) {
        Some(normality_check(&values)?)
    } else {
        None
    };
    Ok(CltSummary {
        scenario: scenario.id.clone(),
        n: cfg.n,
        m: cfg.m,
        k: cfg.k,
        lambda,
        reference_size: cfg.reference_size,
        i_fixed,
        seed: cfg.seed,
        reps: group.len(),
        mean_nu,
        empirical_var,
        mean_predicted_var,
        variance_ratio: empirical_var / mean_predicted_var,
        shapiro_w: shapiro.map(|s| s.statistic),
        shapiro_p: shapiro.map(|s| s.p_value),
    })
}

/// Render a float with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(num) => match (num.as_u64(), num.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => format_real(num.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn to_objects<T: Serialize>(rows: &[T]) -> Result<Vec<serde_json::Map<String, Value>>> {
    rows.iter()
        .map(|r| match serde_json::to_value(r)? {
            Value::Object(map) => Ok(map),
            _ => Err(Error::InvalidInput("records must serialize to objects".into())),
        })
        .collect()
}

/// Write records as CSV (header row, RFC 4180 quoting) or as a JSON array.
///
/// Floats in CSV output carry 17 significant digits. `None` fields are empty
/// in CSV and `null` in JSON.
pub fn write_records<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let objects = to_objects(rows)?;
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = objects.first() {
                w.write_record(first.keys())?;
            }
            for obj in &objects {
                w.write_record(obj.values().map(csv_field))?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_records_to<T: Serialize>(path: &Path, rows: &[T], format: OutputFormat) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_records(rows, format, std::io::BufWriter::new(fs::File::create(path)?))
}

/// Write `data` as CSV with one column per coordinate.
pub fn write_dataset<W: Write>(data: &Dataset, header: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record((1..=data.dim()).map(|j| format!("x{j}")))?;
    }
    for row in data.rows() {
        w.write_record(row.iter().map(|v| format_real(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `cfg.out`, or `<$SINKPERM_OUT_DIR or .>/<stem>.<ext>`.
pub fn output_path(cfg: &ExperimentConfig, stem: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join(format!("{stem}.{}", cfg.format.extension()))
    })
}

/// `results.csv` -> `results-bins.csv`.
pub fn sibling_path(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// Sidecar describing how a data file was produced.
#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    pub timings: &'a [Timing],
}

impl<'a> Meta<'a> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig) -> Self {
        Meta {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            files: Vec::new(),
            notes: Vec::new(),
            timings: &[],
        }
    }

    pub fn write(&self, data_path: &Path) -> Result<PathBuf> {
        let path = sibling_path(data_path, ".meta", "json");
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(path)
    }
}
