//! The `analyze` command: full two-sample shift report plus optional
//! figure-data files.

use crate::doc::Node;
use crate::fmt;
use crate::io::{digest_files, read_observations, CliError};
use qshift::attributable::attributable_bound;
use qshift::gmm::{gmm_confidence_set, gmm_estimate, GmmResult};
use qshift::hypergeom::{HypergeomModel, DEFAULT_ENUMERATION_BUDGET};
use qshift::rank::{
    fit_test, hl_estimate, invert_rank_test, CiMode, ConfidenceSet, EstimateResult, EstimateRule,
    G2NullDistribution, TNullDistribution, TestMode,
};
use qshift::table::{trajectory, TwoSample};
use qshift::special::chi_squared_sf;
use qshift::WeightPreset;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Auto,
    Exact,
    Asymptotic,
}

impl ModeArg {
    fn label(&self) -> &'static str {
        match self {
            ModeArg::Auto => "auto",
            ModeArg::Exact => "exact",
            ModeArg::Asymptotic => "asymptotic",
        }
    }
}

pub struct AnalyzeOptions {
    pub x_path: PathBuf,
    pub y_path: PathBuf,
    pub mode: ModeArg,
    pub alpha: f64,
    /// Scores driving the p-curve emission and the extra custom block.
    pub weights: Option<WeightPreset>,
    pub pcurve: Option<PathBuf>,
    pub gmm_curve: Option<PathBuf>,
    pub boxplot_data: Option<PathBuf>,
}

/// Five-number summary by Tukey hinges on a sorted slice.
fn fivenum(sorted: &[f64]) -> [f64; 5] {
    let n = sorted.len();
    debug_assert!(n >= 1);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    // hinge depth = (floor(median depth) + 1) / 2, in half-steps
    let md = (n + 1) / 2;
    let h2 = md + 1; // twice the hinge depth
    let lower = 0.5 * (sorted[h2 / 2 - 1] + sorted[(h2 + 1) / 2 - 1]);
    let upper = 0.5 * (sorted[n - h2 / 2] + sorted[n - (h2 + 1) / 2]);
    [sorted[0], lower, median, upper, sorted[n - 1]]
}

struct Resolved {
    test_mode: TestMode,
    ci_mode: CiMode,
    label: &'static str,
}

fn resolve_mode(mode: ModeArg, data: &TwoSample) -> Resolved {
    let exact_ok = data.design().enumeration_states() <= DEFAULT_ENUMERATION_BUDGET as u128;
    match (mode, exact_ok) {
        (ModeArg::Exact, _) | (ModeArg::Auto, true) => Resolved {
            test_mode: TestMode::Exact,
            ci_mode: CiMode::Exact,
            label: "exact",
        },
        (ModeArg::Asymptotic, _) | (ModeArg::Auto, false) => Resolved {
            test_mode: TestMode::Asymptotic,
            ci_mode: CiMode::Asymptotic,
            label: "asymptotic",
        },
    }
}

fn confidence_node(set: &ConfidenceSet) -> Node {
    let mut node = Node::branch();
    node.leaf("nominal", fmt::real(set.nominal_level));
    if let Some(att) = set.attained_level {
        node.leaf("attained", fmt::real(att));
    }
    node.leaf("set", fmt::interval_union(&set.intervals));
    node.leaf("is-interval", set.is_interval().to_string());
    if let Some(enc) = set.enclosing_interval() {
        node.leaf("enclosing", fmt::interval(enc));
    }
    if set.unattainable {
        node.leaf("warning", "level unattainable; whole line returned");
    }
    node
}

fn estimate_node(est: &EstimateResult) -> Node {
    let mut node = Node::branch();
    node.leaf("estimate", fmt::real(est.estimate));
    node.leaf("rule", est.rule.label());
    let iv = match est.rule {
        EstimateRule::CrossingPoint => fmt::interval(est.defining_interval),
        EstimateRule::IntervalMidpoint => fmt::interval_half_open(est.defining_interval),
    };
    node.leaf("defining-interval", iv);
    node
}

fn fit_node(data: &TwoSample, at: f64, mode: TestMode) -> Result<Node, CliError> {
    let fit = fit_test(data, at, mode)?;
    let mut node = Node::branch();
    node.leaf("g2", fmt::real(fit.statistic));
    if let Some(p) = fit.exact_p {
        node.leaf("p-exact", fmt::real(p));
    }
    node.leaf("p-chisq3", fmt::real(fit.asymptotic_p));
    Ok(node)
}

const LEVELS: [(&str, f64); 3] = [
    ("level-two-thirds", 1.0 / 3.0),
    ("level-90", 0.10),
    ("level-95", 0.05),
];

pub fn run(opts: &AnalyzeOptions) -> Result<Node, CliError> {
    let x = read_observations(&opts.x_path)?;
    let y = read_observations(&opts.y_path)?;
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(CliError::input(format!(
            "--alpha must lie in (0, 1), got {}",
            opts.alpha
        )));
    }
    let data = TwoSample::new(x, y).map_err(CliError::from)?;
    let resolved = resolve_mode(opts.mode, &data);

    let mut doc = Node::branch();
    doc.leaf("report", "analyze");
    doc.leaf("version", env!("CARGO_PKG_VERSION"));

    let mut input = Node::branch();
    input.leaf("control-file", opts.x_path.display().to_string());
    input.leaf("treated-file", opts.y_path.display().to_string());
    input.leaf(
        "digest",
        digest_files(&[opts.x_path.as_path(), opts.y_path.as_path()])?,
    );
    input.leaf("control-count", data.control_len().to_string());
    input.leaf("treated-count", data.treated_len().to_string());
    input.leaf("pooled-count", data.total().to_string());
    input.leaf("tie-rule", "treated-before-control-at-equal-values");
    let mut pooled: Vec<f64> = data
        .control()
        .iter()
        .chain(data.treated().iter())
        .copied()
        .collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if pooled.windows(2).any(|w| w[0] == w[1]) {
        input.leaf(
            "ties-note",
            "pooled sample contains tied values; exact null laws treat the data as continuous",
        );
    }
    input.leaf("mode-requested", opts.mode.label());
    input.leaf("mode-used", resolved.label);
    doc.push("input", input);

    let mut summary = Node::branch();
    summary.leaf("control-fivenum", fmt::reals(&fivenum(data.control())));
    summary.leaf("treated-fivenum", fmt::reals(&fivenum(data.treated())));
    doc.push("summary", summary);

    let design = data.design();
    let model = HypergeomModel::new(design).map_err(CliError::from)?;
    let mut design_node = Node::branch();
    design_node.leaf(
        "quartile-indices",
        design
            .quartile_indices()
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    design_node.leaf(
        "cell-sizes",
        design
            .cell_sizes()
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    design_node.leaf("expected-treated", fmt::reals(&model.expected()));
    doc.push("design", design_node);

    // rank estimators
    let mut presets: Vec<WeightPreset> = vec![
        WeightPreset::HodgesLehmann,
        WeightPreset::Mood,
        WeightPreset::Mert,
    ];
    if let Some(custom @ WeightPreset::Custom(_)) = opts.weights {
        presets.push(custom);
    }

    let mut estimates = Node::branch();
    for preset in &presets {
        let w = preset.vector();
        let est = hl_estimate(&data, &w).map_err(CliError::from)?;
        let mut node = estimate_node(&est);
        node.leaf("scores", fmt::reals(&w.weights()));
        node.push("fit", fit_node(&data, est.estimate, resolved.test_mode)?);
        let mut conf = Node::branch();
        for (label, alpha) in LEVELS {
            let set = invert_rank_test(&data, &w, alpha, resolved.ci_mode)
                .map_err(CliError::from)?;
            let mut set_node = confidence_node(&set);
            set_node.leaf("mode", resolved.label);
            conf.push(label, set_node);
        }
        node.push("confidence", conf);
        estimates.push(preset.label(), node);
    }

    // gmm
    let gmm = gmm_estimate(&data).map_err(CliError::from)?;
    let mut gmm_node = estimate_node(&gmm.estimate);
    gmm_node.leaf("min-g2", fmt::real(gmm.min_g2));
    gmm_node.leaf(
        "minimizing-segments",
        gmm.minimizing_segments
            .iter()
            .map(|iv| fmt::interval_half_open(*iv))
            .collect::<Vec<_>>()
            .join(" "),
    );
    gmm_node.leaf("ambiguous", gmm.ambiguous.to_string());
    let mut overid = Node::branch();
    overid.leaf("statistic", fmt::real(gmm.overid.statistic));
    overid.leaf("p-chisq2", fmt::real(gmm.overid.asymptotic_p));
    gmm_node.push("overid", overid);
    gmm_node.push(
        "fit",
        fit_node(&data, gmm.estimate.estimate, resolved.test_mode)?,
    );
    let mut conf = Node::branch();
    for (label, alpha) in LEVELS {
        let set = gmm_confidence_set(&data, alpha).map_err(CliError::from)?;
        let mut set_node = confidence_node(&set);
        set_node.leaf("mode", "difference-asymptotic");
        conf.push(label, set_node);
    }
    gmm_node.push("confidence", conf);
    estimates.push("gmm", gmm_node);
    doc.push("estimates", estimates);

    // attributable effects
    let att = attributable_bound(&data, opts.alpha).map_err(CliError::from)?;
    let mut att_node = Node::branch();
    att_node.leaf("alpha", fmt::real(opts.alpha));
    att_node.leaf("v-observed", att.v_observed.to_string());
    att_node.leaf("total-pairs", att.total_pairs.to_string());
    att_node.leaf("critical-value", att.critical_value.to_string());
    att_node.leaf("attained-confidence", fmt::real(att.attained_confidence));
    att_node.leaf("lower-bound", att.lower_bound.to_string());
    if att.unattainable {
        att_node.leaf("warning", "level unattainable");
    }
    doc.push("attributable", att_node);

    // figure data
    if let Some(path) = &opts.pcurve {
        let preset = opts.weights.unwrap_or(WeightPreset::HodgesLehmann);
        write_pcurve(path, &data, &model, preset, resolved.test_mode)?;
    }
    if let Some(path) = &opts.gmm_curve {
        write_gmm_curve(path, &data, &model, &gmm)?;
    }
    if let Some(path) = &opts.boxplot_data {
        let hl = hl_estimate(&data, &WeightPreset::HodgesLehmann.vector())
            .map_err(CliError::from)?;
        write_boxplot(path, &data, hl.estimate, gmm.estimate.estimate)?;
    }

    Ok(doc)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Per-segment two-sided p-values of the deviate and fit statistics: the
/// data behind the p-value-versus-shift step plot.
fn write_pcurve(
    path: &Path,
    data: &TwoSample,
    model: &HypergeomModel,
    preset: WeightPreset,
    mode: TestMode,
) -> Result<(), CliError> {
    let w = preset.vector();
    let design = *model.design();
    let traj = trajectory(data);
    let tau = model.dot_expected(w.weights());
    let variance = model.quad_covariance(w.weights());

    let exact = match mode {
        TestMode::Asymptotic => None,
        _ => Some((
            TNullDistribution::new(&design, &w).map_err(CliError::from)?,
            G2NullDistribution::new(&design).map_err(CliError::from)?,
        )),
    };

    let mut out = String::new();
    out.push_str(&format!(
        "# p-curve: scores={} mode={}\n",
        preset.label(),
        if exact.is_some() { "exact" } else { "asymptotic" }
    ));
    out.push_str("delta_lo\tdelta_hi\tp_deviate\tp_fit\n");
    for (t, a) in traj.segments().iter().enumerate() {
        let (lo, hi) = traj.segment_interval(t);
        let tv = w.dot_counts(a);
        let g2 = model.g2(a);
        let (p_dev, p_fit) = match &exact {
            Some((tnull, g2null)) => (tnull.two_sided_p(tv), g2null.upper_tail_p(g2)),
            None => {
                let d2 = (tv - tau) * (tv - tau) / variance;
                (chi_squared_sf(d2, 1), chi_squared_sf(g2, 3))
            }
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            fmt::real(lo),
            fmt::real(hi),
            fmt::real(p_dev),
            fmt::real(p_fit)
        ));
    }
    write_file(path, &out)
}

/// Per-segment `G² - min G²`: the data behind the GMM confidence plot.
fn write_gmm_curve(
    path: &Path,
    data: &TwoSample,
    model: &HypergeomModel,
    gmm: &GmmResult,
) -> Result<(), CliError> {
    let traj = trajectory(data);
    let mut out = String::new();
    out.push_str("delta_lo\tdelta_hi\tg2_excess\n");
    for (t, a) in traj.segments().iter().enumerate() {
        let (lo, hi) = traj.segment_interval(t);
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            fmt::real(lo),
            fmt::real(hi),
            fmt::real(model.g2(a) - gmm.min_g2)
        ));
    }
    write_file(path, &out)
}

/// Five-number summaries of the controls and of the treated group shifted
/// back by each estimate: the data behind the aligned-boxplot display.
fn write_boxplot(
    path: &Path,
    data: &TwoSample,
    hl_estimate: f64,
    gmm_estimate: f64,
) -> Result<(), CliError> {
    let adjusted = |delta: f64| -> [f64; 5] {
        let shifted: Vec<f64> = data.treated().iter().map(|v| v - delta).collect();
        fivenum(&shifted)
    };
    let mut out = String::new();
    out.push_str("label\tmin\tq1\tmedian\tq3\tmax\n");
    for (label, values) in [
        ("control", fivenum(data.control())),
        ("treated_minus_hl", adjusted(hl_estimate)),
        ("treated_minus_gmm", adjusted(gmm_estimate)),
    ] {
        out.push_str(&format!("{label}\t{}\n", values.map(fmt::real).join("\t")));
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fivenum_hinges() {
        let x = [3.2, 5.1, 8.3, 8.8, 9.5, 11.9, 14.0];
        assert_eq!(fivenum(&x), [3.2, 6.7, 8.8, 10.7, 14.0]);
        let y: Vec<f64> = vec![
            3.7, 6.8, 8.4, 8.5, 10.0, 11.3, 12.0, 12.5, 18.7, 19.0, 20.0, 22.7, 24.0, 31.8, 33.3,
            36.0,
        ];
        assert_eq!(fivenum(&y), [3.7, 9.25, 15.6, 23.35, 36.0]);
        assert_eq!(fivenum(&[1.0]), [1.0; 5]);
        // hinges fall on data points for n = 2, as in R's fivenum
        assert_eq!(fivenum(&[1.0, 2.0]), [1.0, 1.0, 1.5, 2.0, 2.0]);
        assert_eq!(fivenum(&[1.0, 2.0, 3.0, 4.0]), [1.0, 1.5, 2.5, 3.5, 4.0]);
    }
}
