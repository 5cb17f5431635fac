//! The `simulate` command: a thin wrapper over the Monte Carlo engine.

use crate::doc::Node;
use crate::fmt;
use crate::io::CliError;
use qshift_sim::{
    run_simulation, EstimatorKind, RankCiMode, SamplerSpec, SimulationConfig, SimulationReport,
    GMM_SCAN_BUDGET,
};

pub struct SimulateOptions {
    pub dist: SamplerSpec,
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub true_delta: f64,
    pub alpha: f64,
    pub estimators: Vec<EstimatorKind>,
    pub ci_mode: Option<RankCiMode>,
    pub threads: Option<usize>,
    /// Lifts the GMM sweep budget for deliberately expensive runs.
    pub force: bool,
}

pub fn run(opts: &SimulateOptions) -> Result<Node, CliError> {
    let mut config = SimulationConfig::new(opts.dist, opts.n, opts.m, opts.reps, opts.seed);
    config.true_delta = opts.true_delta;
    config.alpha = opts.alpha;
    config.estimators = opts.estimators.clone();
    config.rank_ci_mode = opts.ci_mode;
    if opts.force {
        config.gmm_scan_budget = u64::MAX;
    } else {
        config.gmm_scan_budget = GMM_SCAN_BUDGET;
    }

    let report = match opts.threads {
        None => run_simulation(&config).map_err(CliError::from)?,
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::input(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_simulation(&config)).map_err(CliError::from)?
        }
    };
    Ok(report_document(&report, opts.ci_mode))
}

pub fn report_document(report: &SimulationReport, ci_mode: Option<RankCiMode>) -> Node {
    let mut doc = Node::branch();
    doc.leaf("report", "simulate");
    doc.leaf("version", env!("CARGO_PKG_VERSION"));

    let mut config = Node::branch();
    config.leaf("dist", report.sampler.label());
    config.leaf("n", report.n.to_string());
    config.leaf("m", report.m.to_string());
    config.leaf("reps", report.reps.to_string());
    config.leaf("seed", report.seed.to_string());
    config.leaf("true-delta", fmt::real(report.true_delta));
    config.leaf("alpha", fmt::real(report.alpha));
    config.leaf(
        "rank-ci",
        match ci_mode {
            None => "auto",
            Some(RankCiMode::Exact) => "exact",
            Some(RankCiMode::Asymptotic) => "asymptotic",
        },
    );
    config.leaf("rng", report.rng.clone());
    doc.push("config", config);

    let mut estimators = Node::branch();
    for e in &report.estimators {
        let mut node = Node::branch();
        node.leaf("mse", fmt::real(e.mse));
        node.leaf("coverage-pct", fmt::real(e.coverage_pct));
        node.leaf("coverage-se-pct", fmt::real(e.coverage_se_pct));
        node.leaf("mean-length", fmt::real(e.mean_length));
        node.leaf("unbounded-sets", e.unbounded_sets.to_string());
        node.leaf("failures", e.failures.to_string());
        node.leaf("ci-mode", e.ci_mode.clone());
        if let Some(att) = e.attained_level {
            node.leaf("attained-level", fmt::real(att));
        }
        estimators.push(e.kind.label(), node);
    }
    doc.push("estimators", estimators);

    if !report.mse_ratios.is_empty() {
        let mut ratios = Node::branch();
        for (key, value) in &report.mse_ratios {
            ratios.leaf(key, fmt::real(*value));
        }
        doc.push("mse-ratios", ratios);
    }

    if let Some(g) = &report.gmm {
        let mut node = Node::branch();
        node.leaf("interval-fraction-pct", fmt::real(g.interval_fraction_pct));
        node.leaf(
            "interval-fraction-se-pct",
            fmt::real(g.interval_fraction_se_pct),
        );
        node.leaf("mean-min-g2", fmt::real(g.mean_min_g2));
        node.leaf("mean-min-g2-se", fmt::real(g.mean_min_g2_se));
        node.leaf("tail-rate-pct", fmt::real(g.tail_rate_pct));
        node.leaf("tail-rate-se-pct", fmt::real(g.tail_rate_se_pct));
        doc.push("gmm-diagnostics", node);
    }

    if let Some(w) = &report.cost_warning {
        doc.leaf("cost-warning", w.clone());
    }
    doc
}
