use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dlcc::assign::Classifier;
use dlcc::depth::{CovarianceKind, DepthKind};
use dlcc::{DlccConfig, Strategy};
use dlcc_cli::generate::{generate, write_dataset, GenSpec, GeneratorKind};
use dlcc_cli::io::load_csv;
use dlcc_cli::run::{run, write_outputs, Emit, RunSpec, SweepGrid};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dlcc", version, about = "Depth-based local center clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV file.
    Run(RunArgs),
    /// Write a synthetic dataset with ground truth.
    Gen(GenArgs),
    /// Score a labels file against a cached similarity matrix.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthArg {
    Md,
    Sd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Mdc,
    Knn,
    Rf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Global,
    Identity,
    Eev,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth column (header name, or 0-based position without a header).
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long, value_enum, default_value = "sd")]
    depth: DepthArg,
    #[arg(long, value_enum, default_value = "min")]
    strategy: StrategyArg,
    /// Neighborhood size; defaults to ceil(sqrt(n)) under min and 12 under max.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "mdc")]
    classifier: ClassifierArg,
    #[arg(long)]
    maxdepth: bool,
    #[arg(long)]
    ifloop: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweep neighborhood sizes (and thresholds under max), keeping the best DC.
    #[arg(long)]
    sweep: bool,
    /// Comma-separated neighborhood sizes for the sweep.
    #[arg(long, value_delimiter = ',')]
    sweep_s: Option<Vec<usize>>,
    /// Covariance model for Mahalanobis depth.
    #[arg(long, value_enum)]
    md_model: Option<ModelArg>,
    /// Scale every column to zero mean and unit variance first.
    #[arg(long)]
    standardize: bool,
    /// Minimum cluster size for the DC metric.
    #[arg(long, default_value_t = dlcc::metrics::DEFAULT_MIN_CLUSTER)]
    min_cluster: usize,
    /// Leave timings out of the report.
    #[arg(long)]
    stable: bool,
    #[arg(long)]
    out: PathBuf,
    /// Outputs to write: any of json, csv, svg, cache.
    #[arg(long, default_value = "json,csv,svg")]
    emit: String,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GeneratorKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    similarity_cache: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let ds = load_csv(&a.input, a.label_col.as_deref())?;
    let x = if a.standardize {
        ds.data.standardized()
    } else {
        ds.data
    };
    let n = x.nrows();
    let strategy = match a.strategy {
        StrategyArg::Min => Strategy::Min,
        StrategyArg::Max => Strategy::Max,
    };
    let s = a.s.unwrap_or(match strategy {
        Strategy::Min => ((n as f64).sqrt().ceil() as usize).max(2),
        Strategy::Max => 12.min(n),
    });
    let config = DlccConfig {
        depth: match a.depth {
            DepthArg::Md => DepthKind::Md,
            DepthArg::Sd => DepthKind::Sd,
        },
        strategy,
        s,
        delta: a.delta,
        k: a.k,
        classifier: match a.classifier {
            ClassifierArg::Mdc => Classifier::Mdc,
            ClassifierArg::Knn => Classifier::Knn,
            ClassifierArg::Rf => Classifier::Rf,
        },
        maxdepth: a.maxdepth,
        ifloop: a.ifloop,
        md_model: a.md_model.map(|m| match m {
            ModelArg::Global => CovarianceKind::Global,
            ModelArg::Identity => CovarianceKind::Identity,
            ModelArg::Eev => CovarianceKind::PerClusterEev,
        }),
        seed: a.seed,
        dc_min_cluster: Some(a.min_cluster),
        ..DlccConfig::default()
    };
    let mut config = config;
    config.rf.seed = a.seed;
    let sweep = (a.sweep || a.sweep_s.is_some()).then(|| {
        let mut g = SweepGrid::default_for(strategy, n);
        if let Some(s) = a.sweep_s.clone() {
            g.s = s;
        }
        g
    });
    let spec = RunSpec {
        config,
        sweep,
        stable: a.stable,
    };
    let emit = Emit::parse(&a.emit)?;
    let (report, prep) = run(&x, ds.truth.as_deref(), &spec)?;
    let written = write_outputs(&a.out, &report, &x, &prep, emit)?;
    let m = &report.metrics;
    let mut line = format!("k = {}", report.result.k);
    if let Some(dc) = m.dc {
        line.push_str(&format!(", DC = {dc:.4}"));
    }
    if let (Some(r), Some(c)) = (m.ari, m.ce) {
        line.push_str(&format!(", ARI = {r:.4}, CE = {:.2}%", 100.0 * c));
    }
    println!("{line}");
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn gen_cmd(a: GenArgs) -> Result<()> {
    let spec = GenSpec {
        kind: a.kind,
        n: a.n,
        noise: a.noise,
        seed: a.seed,
    };
    let (x, labels) = generate(&spec)?;
    write_dataset(&a.out, &x, &labels).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} ({} x {})", a.out.display(), x.nrows(), x.ncols());
    Ok(())
}

fn score_cmd(a: ScoreArgs) -> Result<()> {
    let r = dlcc_cli::score::score(&a.labels, &a.similarity_cache, a.truth.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(t) = std::env::var("DLCC_THREADS") {
        let t: usize = t
            .parse()
            .context("DLCC_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()?;
    }
    match Cli::parse().command {
        Command::Run(a) => run_cmd(a),
        Command::Gen(a) => gen_cmd(a),
        Command::Score(a) => score_cmd(a),
    }
}
