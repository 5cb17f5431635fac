//! The `weights` command: band scores, limiting moments, optimal group
//! scores and the preset efficiency matrix.

use crate::doc::Node;
use crate::fmt;
use crate::io::CliError;
use qshift::scores::{band_scores, relative_efficiency, ScoreDistribution};
use qshift::WeightPreset;

pub struct WeightsOptions {
    pub dists: Vec<ScoreDistribution>,
    pub lambda: f64,
}

const PRESETS: [WeightPreset; 3] = [
    WeightPreset::HodgesLehmann,
    WeightPreset::Mood,
    WeightPreset::Mert,
];

pub fn run(opts: &WeightsOptions) -> Result<Node, CliError> {
    if opts.dists.is_empty() {
        return Err(CliError::input("--dist needs at least one distribution"));
    }
    let mut doc = Node::branch();
    doc.leaf("report", "weights");
    doc.leaf("version", env!("CARGO_PKG_VERSION"));
    doc.leaf("lambda", fmt::real(opts.lambda));
    doc.leaf(
        "distributions",
        opts.dists
            .iter()
            .map(|d| d.label())
            .collect::<Vec<_>>()
            .join(" "),
    );

    let mut min_eff: Vec<(WeightPreset, f64)> =
        PRESETS.iter().map(|p| (*p, f64::INFINITY)).collect();

    for dist in &opts.dists {
        let model = band_scores(*dist, opts.lambda).map_err(CliError::from)?;
        let mut node = Node::branch();
        node.leaf("eta", fmt::reals(&model.eta));
        node.leaf("sigma-diagonal", fmt::real(model.sigma[0][0]));
        node.leaf("sigma-off-diagonal", fmt::real(model.sigma[0][1]));
        node.leaf(
            "optimal-scores",
            fmt::reals(&model.optimal_weights.weights()),
        );
        let mut eff = Node::branch();
        for (preset, min) in min_eff.iter_mut() {
            let e = relative_efficiency(&preset.vector(), &model.optimal_weights, &model)
                .map_err(CliError::from)?;
            eff.leaf(preset.label(), fmt::real(e));
            *min = min.min(e);
        }
        node.push("efficiency-vs-optimal", eff);
        doc.push(dist.label(), node);
    }

    if opts.dists.len() > 1 {
        let mut node = Node::branch();
        for (preset, min) in &min_eff {
            node.leaf(preset.label(), fmt::real(*min));
        }
        doc.push("min-efficiency", node);
    }
    Ok(doc)
}
