//! `qshift`: two-sample shift inference from pooled-quartile tables.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qshift_cli::analyze::{self, AnalyzeOptions, ModeArg};
use qshift_cli::dist::{self, DistOptions, StatisticArg};
use qshift_cli::io::CliError;
use qshift_cli::{simulate, weights};
use qshift::scores::ScoreDistribution;
use qshift::{WeightPreset, WeightVector};
use qshift_sim::{EstimatorKind, RankCiMode, SamplerSpec};
use simulate::SimulateOptions;
use std::path::PathBuf;
use std::process::ExitCode;
use weights::WeightsOptions;

#[derive(Parser)]
#[command(
    name = "qshift",
    version,
    about = "Exact and large-sample two-sample shift inference from pooled-quartile tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a two-sample dataset: estimates, tests, confidence sets,
    /// attributable effects, and optional figure data.
    Analyze(AnalyzeCmd),
    /// Run a seeded Monte Carlo study of the estimators.
    Simulate(SimulateCmd),
    /// Band scores, optimal group scores and asymptotic efficiencies.
    Weights(WeightsCmd),
    /// Exact null distributions as tables or tail queries.
    Dist(DistCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeValue {
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Args)]
struct AnalyzeCmd {
    /// Control observations, one per line.
    #[arg(long)]
    x: PathBuf,
    /// Treated observations, one per line.
    #[arg(long)]
    y: PathBuf,
    /// Exact enumeration, large-sample approximations, or exact when the
    /// enumeration budget allows.
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeValue,
    /// Level for the attributable-effect bound.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Scores for the p-curve and an extra custom estimate block:
    /// hl, mood, mert, or w1,w2,w3,w4.
    #[arg(long)]
    weights: Option<String>,
    /// Emit per-segment p-values of both tests (step-plot data).
    #[arg(long)]
    pcurve: Option<PathBuf>,
    /// Emit per-segment G2 excess over its minimum (confidence-plot data).
    #[arg(long)]
    gmm_curve: Option<PathBuf>,
    /// Emit five-number summaries of the controls and the re-aligned
    /// treated group (boxplot data).
    #[arg(long)]
    boxplot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistValue {
    Normal,
    Cauchy,
    Ne,
}

impl DistValue {
    fn sampler(self) -> SamplerSpec {
        match self {
            DistValue::Normal => SamplerSpec::Normal,
            DistValue::Cauchy => SamplerSpec::Cauchy,
            DistValue::Ne => SamplerSpec::NormalPlusExponential,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CiModeValue {
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Args)]
struct SimulateCmd {
    /// Sampling distribution.
    #[arg(long, value_enum)]
    dist: DistValue,
    /// Treated group size.
    #[arg(long)]
    n: usize,
    /// Control group size.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 5000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    true_delta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Comma-separated subset of hl,mood,mert,gmm.
    #[arg(long, default_value = "hl,mood,mert,gmm")]
    estimators: String,
    /// Rank confidence-interval construction.
    #[arg(long, value_enum, default_value = "auto")]
    ci_mode: CiModeValue,
    /// Worker threads (default: all cores). The report is identical for
    /// any value.
    #[arg(long)]
    threads: Option<usize>,
    /// Lift the GMM sweep cost refusal.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct WeightsCmd {
    /// Comma-separated list of normal,cauchy,ne.
    #[arg(long, default_value = "normal,cauchy")]
    dist: String,
    /// Limiting treated fraction.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatisticValue {
    Table,
    Mw,
    G2,
}

#[derive(Args)]
struct DistCmd {
    /// Which null law to expose.
    #[arg(long, value_enum, default_value = "table")]
    statistic: StatisticValue,
    /// Treated group size.
    #[arg(long)]
    n: Option<usize>,
    /// Control group size.
    #[arg(long)]
    m: Option<usize>,
    /// Report the upper tail at this count (mw only).
    #[arg(long)]
    tail: Option<u64>,
    /// Hypothesized shift (g2 only).
    #[arg(long)]
    at_delta: Option<f64>,
    /// Control observations (g2 only).
    #[arg(long)]
    x: Option<PathBuf>,
    /// Treated observations (g2 only).
    #[arg(long)]
    y: Option<PathBuf>,
}

fn parse_weights(spec: &str) -> Result<WeightPreset, CliError> {
    match spec {
        "hl" => Ok(WeightPreset::HodgesLehmann),
        "mood" => Ok(WeightPreset::Mood),
        "mert" => Ok(WeightPreset::Mert),
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            if parts.len() != 4 {
                return Err(CliError::input(format!(
                    "--weights expects hl, mood, mert or four comma-separated scores, got '{other}'"
                )));
            }
            let mut w = [0.0; 4];
            for (slot, part) in w.iter_mut().zip(&parts) {
                *slot = part.trim().parse().map_err(|e| {
                    CliError::input(format!("bad score '{part}' in --weights: {e}"))
                })?;
            }
            Ok(WeightPreset::Custom(
                WeightVector::new(w).map_err(CliError::from)?,
            ))
        }
    }
}

fn parse_estimators(spec: &str) -> Result<Vec<EstimatorKind>, CliError> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let kind = match part.trim() {
            "hl" => EstimatorKind::HodgesLehmann,
            "mood" => EstimatorKind::Mood,
            "mert" => EstimatorKind::Mert,
            "gmm" => EstimatorKind::Gmm,
            other => {
                return Err(CliError::input(format!(
                    "unknown estimator '{other}' (expected hl, mood, mert, gmm)"
                )))
            }
        };
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn parse_dists(spec: &str) -> Result<Vec<ScoreDistribution>, CliError> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let dist = match part.trim() {
            "normal" => ScoreDistribution::Normal,
            "cauchy" => ScoreDistribution::Cauchy,
            "ne" => ScoreDistribution::NormalPlusExponential,
            other => {
                return Err(CliError::input(format!(
                    "unknown distribution '{other}' (expected normal, cauchy, ne)"
                )))
            }
        };
        if !out.contains(&dist) {
            out.push(dist);
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let document = match cli.command {
        Command::Analyze(cmd) => {
            let weights = cmd.weights.as_deref().map(parse_weights).transpose()?;
            analyze::run(&AnalyzeOptions {
                x_path: cmd.x,
                y_path: cmd.y,
                mode: match cmd.mode {
                    ModeValue::Auto => ModeArg::Auto,
                    ModeValue::Exact => ModeArg::Exact,
                    ModeValue::Asymptotic => ModeArg::Asymptotic,
                },
                alpha: cmd.alpha,
                weights,
                pcurve: cmd.pcurve,
                gmm_curve: cmd.gmm_curve,
                boxplot_data: cmd.boxplot_data,
            })?
        }
        Command::Simulate(cmd) => simulate::run(&SimulateOptions {
            dist: cmd.dist.sampler(),
            n: cmd.n,
            m: cmd.m,
            reps: cmd.reps,
            seed: cmd.seed,
            true_delta: cmd.true_delta,
            alpha: cmd.alpha,
            estimators: parse_estimators(&cmd.estimators)?,
            ci_mode: match cmd.ci_mode {
                CiModeValue::Auto => None,
                CiModeValue::Exact => Some(RankCiMode::Exact),
                CiModeValue::Asymptotic => Some(RankCiMode::Asymptotic),
            },
            threads: cmd.threads,
            force: cmd.force,
        })?,
        Command::Weights(cmd) => weights::run(&WeightsOptions {
            dists: parse_dists(&cmd.dist)?,
            lambda: cmd.lambda,
        })?,
        Command::Dist(cmd) => dist::run(&DistOptions {
            statistic: match cmd.statistic {
                StatisticValue::Table => StatisticArg::Table,
                StatisticValue::Mw => StatisticArg::Mw,
                StatisticValue::G2 => StatisticArg::G2,
            },
            n: cmd.n,
            m: cmd.m,
            tail: cmd.tail,
            at_delta: cmd.at_delta,
            x_path: cmd.x,
            y_path: cmd.y,
        })?,
    };

    let text = document.render();
    match &cli.out {
        None => print!("{text}"),
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; usage mistakes are input
            // errors
            let _ = e.print();
            return if e.exit_code() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit()
        }
    }
}
