use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use bulkjl::bounds::{evaluate, EpsilonSplit, Theorem};
use bulkjl::estimation::estimate_rhat;
use bulkjl::harness::{
    empirical_tail, run_experiment, synth, write_batch_csv, ExperimentConfig, SynthKind, SynthParams,
};
use bulkjl::io::{self, DataFormat};
use bulkjl::projection::{apply_scaled, generate, EntryDist, ProjectionSpec};
use bulkjl::walecki::decompose;
use bulkjl::{Dataset, Matrix};

/// Bulk Johnson-Lindenstrauss toolkit.
#[derive(Parser, Debug)]
#[command(name = "bulkjl", version, about)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "BULKJL_SEED")]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BULKJL_THREADS")]
    threads: Option<usize>,
    /// Print machine-readable JSON instead of a summary.
    #[arg(long, global = true, env = "BULKJL_JSON")]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long, value_parser = parse_kind)]
        kind: SynthKind,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        cluster_fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<DataFormat>,
    },
    /// Decompose the edges of K_N into Walecki cycles and 1-regular subgraphs.
    Decompose {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a target-dimension bound.
    TargetDim {
        #[arg(long, value_parser = parse_theorem)]
        theorem: Theorem,
        /// JSON object of parameters, or @path to a JSON file.
        #[arg(long)]
        params: String,
    },
    /// Project a dataset with a random matrix.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_dist, default_value = "gaussian")]
        dist: EntryDist,
        /// Scale by sqrt(gamma(eps)/k) instead of sqrt(1/k).
        #[arg(long)]
        gamma_from_eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lower-estimate the intrinsic dimension of unit-normalized differences.
    EstimateRhat {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Run a Monte-Carlo experiment from a JSON config.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-batch order statistics of the first trial.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Empirical tails of |ZA|_F^2 for A = diag(spectrum).
    Tailcheck {
        /// Comma-separated singular values.
        #[arg(long)]
        spectrum: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, value_parser = parse_dist, default_value = "gaussian")]
        dist: EntryDist,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

fn parse_kind(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: bulkjl::Error| e.to_string())
}
fn parse_format(s: &str) -> Result<DataFormat, String> {
    s.parse().map_err(|e: bulkjl::Error| e.to_string())
}
fn parse_theorem(s: &str) -> Result<Theorem, String> {
    s.parse().map_err(|e: bulkjl::Error| e.to_string())
}
fn parse_dist(s: &str) -> Result<EntryDist, String> {
    s.parse().map_err(|e: bulkjl::Error| e.to_string())
}

fn load_dataset(path: &PathBuf) -> anyhow::Result<Dataset> {
    io::load(path, DataFormat::from_path(path)).with_context(|| format!("loading {}", path.display()))
}

fn emit(text: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Synth { kind, n, d, rank, noise, cluster_fraction, out, format } => {
            let mut params = SynthParams::new(n, d);
            params.rank = rank.unwrap_or(params.rank);
            params.noise = noise.unwrap_or(params.noise);
            params.cluster_fraction = cluster_fraction.unwrap_or(params.cluster_fraction);
            let ds = synth(kind, &params, seed)?;
            io::save(&ds, &out, format.unwrap_or_else(|| DataFormat::from_path(&out)))?;
            if cli.json {
                println!("{}", serde_json::json!({ "n": ds.n(), "d": ds.d(), "source": ds.source }));
            } else {
                println!("wrote {} points in R^{} to {}", ds.n(), ds.d(), out.display());
            }
        }
        Command::Decompose { n, format, out } => {
            let decomp = decompose(n)?;
            let text = match format {
                GraphFormat::Json => io::to_report_json("decomposition", &decomp)?,
                GraphFormat::Dot => decomp.to_dot(),
            };
            emit(&text, out.as_ref())?;
        }
        Command::TargetDim { theorem, params } => {
            let text = match params.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
                None => params,
            };
            let value: serde_json::Value = serde_json::from_str(&text).context("parsing --params")?;
            let result = evaluate(theorem, &value)?;
            println!("{}", io::to_report_json("target_dim", &result)?);
            result.require_satisfied()?;
        }
        Command::Project { input, k, dist, gamma_from_eps, out } => {
            let ds = load_dataset(&input)?;
            let gamma = match gamma_from_eps {
                None => 1.0,
                Some(eps) if dist == EntryDist::Gaussian => EpsilonSplit::gaussian(eps)?.gamma,
                Some(eps) => EpsilonSplit::symmetric(eps)?.gamma,
            };
            let z = generate::<f64>(ProjectionSpec { k, d: ds.d(), dist, seed })?;
            let images = apply_scaled(&z, &ds.points.transpose(), gamma)?.transpose();
            let projected = Dataset::new(images, format!("project(k={k},seed={seed}):{}", ds.source))?;
            io::save(&projected, &out, DataFormat::from_path(&out))?;
            if cli.json {
                println!("{}", serde_json::json!({ "n": ds.n(), "k": k, "gamma": gamma, "seed": seed }));
            } else {
                println!("projected {} points from R^{} to R^{k} (gamma={gamma})", ds.n(), ds.d());
            }
        }
        Command::EstimateRhat { input, delta } => {
            let ds = load_dataset(&input)?;
            let est = estimate_rhat(&ds, delta)?;
            if cli.json {
                println!("{}", io::to_report_json("rhat", &est)?);
            } else {
                println!(
                    "r_hat >= {:.6} (m={}, dropped={}, |Sigma_hat|={:.6})",
                    est.rhat_lower, est.m_used, est.dropped, est.top_eig
                );
            }
        }
        Command::Verify { config, out, csv } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let report = run_experiment(&cfg)?;
            io::save_report("experiment", &report, &out)?;
            if let Some(path) = csv {
                write_batch_csv(&report.first_trial, path)?;
            }
            if cli.json {
                println!("{}", io::to_report_json("experiment", &report)?);
            } else {
                println!(
                    "k={} target fraction {:.4}: {} of {} trials fell short (allowed {:.3}), min fraction {:.4}",
                    report.k_used,
                    report.target_fraction,
                    report.failure.count,
                    report.failure.trials,
                    report.allowed_failure,
                    report.min_fraction
                );
            }
        }
        Command::Tailcheck { spectrum, k, eps, trials, dist } => {
            let values: Vec<f64> = spectrum
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .context("parsing --spectrum")?;
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                bail!(bulkjl::Error::Input("spectrum must be a non-empty list of finite numbers".into()));
            }
            let a = Matrix::from_diagonal(&values);
            let report = empirical_tail(&a, k, eps, trials, seed, dist)?;
            if cli.json {
                println!("{}", io::to_report_json("tail", &report)?);
            } else {
                let show = |b: Option<f64>| b.map_or("n/a".to_string(), |b| format!("{b:.3e}"));
                println!(
                    "upper rate {:.3e} (bound {}), lower rate {:.3e} (bound {}) over {trials} trials",
                    report.upper.rate,
                    show(report.upper_bound),
                    report.lower.rate,
                    show(report.lower_bound)
                );
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(|e| e.downcast_ref::<bulkjl::Error>()).map_or(2, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
