use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sinkperm::distributions::find_scenario;
use sinkperm::harness::{
    output_path, power_rows, run_clt_study, run_pvalue_histogram, sample_seeds, sibling_path,
    write_dataset, write_records_to, ExperimentConfig, Meta, OutputFormat, OUT_DIR_ENV,
};
use sinkperm::twosample::{PartitionMode, StatisticKind};
use sinkperm::Error;

#[derive(Parser)]
#[command(name = "sinkperm", version, about = "Sinkhorn permutation two-sample test experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical power (rejection rate) per scenario and statistic.
    Power(ExperimentArgs),
    /// Every p-value plus a 20-bin histogram per scenario and statistic.
    Pvals(ExperimentArgs),
    /// Repeated draws of the centered transport cost under a null scenario.
    Clt(ExperimentArgs),
    /// Export a simulated sample as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Statistics (w, s, s-hat, s-bar, schilling), comma separated.
    #[arg(long, value_delimiter = ',')]
    stat: Vec<StatisticKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Number of k-means cells.
    #[arg(long)]
    k: Option<usize>,
    /// Regularization grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Support of the cell statistics (basic, double).
    #[arg(long)]
    mode: Option<PartitionMode>,
    /// Neighbours per point for the Schilling statistic.
    #[arg(long)]
    knn: Option<usize>,
    /// Permutations per test.
    #[arg(long = "B")]
    permutations: Option<usize>,
    /// Monte Carlo repetitions.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dimension of Bounded Burr scenarios.
    #[arg(long)]
    dim: Option<usize>,
    /// Size of the auxiliary null sample (clt).
    #[arg(long)]
    reference_size: Option<usize>,
    /// Report (count + 1) / (B + 1) p-values.
    #[arg(long)]
    add_one: bool,
    /// Output data file. Defaults to <command>.<format> in $SINKPERM_OUT_DIR or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    scenario: String,
    /// Which sample of the scenario to draw.
    #[arg(long, value_enum, default_value_t = Sample::X)]
    sample: Sample,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Repetition index; the sample matches the one used by that repetition of an experiment.
    #[arg(long, default_value_t = 0)]
    rep: usize,
    #[arg(long)]
    dim: Option<usize>,
    /// Write a header row.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sample {
    X,
    Y,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if !self.scenario.is_empty() {
            cfg.scenarios = self.scenario;
        }
        if !self.stat.is_empty() {
            cfg.statistics = self.stat;
        }
        if !self.lambda.is_empty() {
            cfg.lambdas = self.lambda;
        }
        macro_rules! set {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(n <- n, m <- m, k <- k, mode <- mode, knn <- knn, permutations <- permutations,
             reps <- reps, level <- level, seed <- seed, reference_size <- reference_size);
        if self.dim.is_some() {
            cfg.dim = self.dim;
        }
        if self.add_one {
            cfg.add_one = true;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if let Some(f) = self.format {
            cfg.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Power(args) => {
            let cfg = args.resolve()?;
            let study = run_pvalue_histogram(&cfg)?;
            let rows = power_rows(&cfg, &study.pvalues, &study.timings);
            let path = output_path(&cfg, "power");
            write_records_to(&path, &rows, cfg.format)?;
            let mut meta = Meta::new("power", &cfg);
            meta.files.push(path.display().to_string());
            meta.timings = &study.timings;
            meta.write(&path)?;
            for r in &rows {
                let lambda = r.lambda.map_or_else(|| "-".to_string(), |l| l.to_string());
                println!(
                    "{:<16} {:<10} lambda={:<6} power={:.3} ({}/{})",
                    r.scenario, r.statistic, lambda, r.rejection_rate, r.rejections, r.reps
                );
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Pvals(args) => {
            let cfg = args.resolve()?;
            let study = run_pvalue_histogram(&cfg)?;
            let path = output_path(&cfg, "pvals");
            let ext = cfg.format.extension();
            let bins = sibling_path(&path, "-bins", ext);
            write_records_to(&path, &study.pvalues, cfg.format)?;
            write_records_to(&bins, &study.bins, cfg.format)?;
            let mut meta = Meta::new("pvals", &cfg);
            meta.files = vec![path.display().to_string(), bins.display().to_string()];
            meta.timings = &study.timings;
            meta.write(&path)?;
            eprintln!("wrote {} and {}", path.display(), bins.display());
        }
        Command::Clt(args) => {
            let cfg = args.resolve()?;
            let study = run_clt_study(&cfg)?;
            let path = output_path(&cfg, "clt");
            let summary = sibling_path(&path, "-summary", cfg.format.extension());
            write_records_to(&path, &study.rows, cfg.format)?;
            write_records_to(&summary, &study.summaries, cfg.format)?;
            let mut meta = Meta::new("clt", &cfg);
            meta.files = vec![path.display().to_string(), summary.display().to_string()];
            meta.notes.push(format!(
                "cell probabilities estimated from {} reference points per repetition",
                cfg.reference_size
            ));
            meta.write(&path)?;
            for s in &study.summaries {
                let p = s.shapiro_p.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
                println!(
                    "{} lambda={} I={} var={:.4e} predicted={:.4e} ratio={:.3} shapiro_p={}",
                    s.scenario, s.lambda, s.i_fixed, s.empirical_var, s.mean_predicted_var, s.variance_ratio, p
                );
            }
            eprintln!("wrote {} and {}", path.display(), summary.display());
        }
        Command::Generate(args) => {
            let mut scenario = find_scenario(&args.scenario)?;
            if let Some(d) = args.dim {
                scenario = scenario.with_dim(d)?;
            }
            let (sx, sy) = sample_seeds(args.seed, &scenario.id, args.rep);
            let (data, tag) = match args.sample {
                Sample::X => (scenario.sample_x(args.n, sx)?, "x"),
                Sample::Y => (scenario.sample_y(args.n, sy)?, "y"),
            };
            let path = args.out.unwrap_or_else(|| {
                let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
                dir.join(format!("{}-{tag}.csv", scenario.id))
            });
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_dataset(&data, args.header, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
