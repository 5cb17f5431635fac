//! The `dist` command: exact null laws as tables or tail queries.

use crate::doc::Node;
use crate::fmt;
use crate::io::{read_observations, CliError};
use qshift::attributable::MannWhitneyDist;
use qshift::hypergeom::{enumerate_support, QuartileDesign};
use qshift::rank::G2NullDistribution;
use qshift::table::{build_table, TwoSample};
use qshift::HypergeomModel;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticArg {
    /// Cell-count support of the pooled-quartile table.
    Table,
    /// Mann-Whitney count.
    Mw,
    /// Fit statistic at a hypothesized shift (needs data).
    G2,
}

pub struct DistOptions {
    pub statistic: StatisticArg,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub tail: Option<u64>,
    pub at_delta: Option<f64>,
    pub x_path: Option<PathBuf>,
    pub y_path: Option<PathBuf>,
}

fn sizes(opts: &DistOptions) -> Result<(usize, usize), CliError> {
    match (opts.n, opts.m) {
        (Some(n), Some(m)) => Ok((n, m)),
        _ => Err(CliError::input("--n and --m are required for this statistic")),
    }
}

pub fn run(opts: &DistOptions) -> Result<Node, CliError> {
    let mut doc = Node::branch();
    doc.leaf("report", "dist");
    doc.leaf("version", env!("CARGO_PKG_VERSION"));
    match opts.statistic {
        StatisticArg::Mw => {
            let (n, m) = sizes(opts)?;
            let dist = MannWhitneyDist::new(n, m).map_err(CliError::from)?;
            doc.leaf("statistic", "mann-whitney");
            doc.leaf("n", n.to_string());
            doc.leaf("m", m.to_string());
            doc.leaf("total-pairs", dist.total_pairs().to_string());
            doc.leaf("mean", fmt::real(dist.mean()));
            match opts.tail {
                Some(v) => {
                    doc.leaf("tail-at", v.to_string());
                    doc.leaf("tail-p", fmt::real(dist.upper_tail(v as usize)));
                }
                None => {
                    let mut table = Node::branch();
                    for v in 0..=dist.total_pairs() {
                        table.leaf(
                            &v.to_string(),
                            format!(
                                "{} {}",
                                fmt::real(dist.prob(v)),
                                fmt::real(dist.upper_tail(v))
                            ),
                        );
                    }
                    doc.push("pmf-tail", table);
                }
            }
        }
        StatisticArg::G2 => {
            let delta = opts
                .at_delta
                .ok_or_else(|| CliError::input("--at-delta is required with --statistic g2"))?;
            let (x_path, y_path) = match (&opts.x_path, &opts.y_path) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(CliError::input("--x and --y are required with --statistic g2")),
            };
            let data = TwoSample::new(read_observations(x_path)?, read_observations(y_path)?)
                .map_err(CliError::from)?;
            let design = data.design();
            let model = HypergeomModel::new(design).map_err(CliError::from)?;
            let g2 = model.g2(&build_table(&data, delta));
            let null = G2NullDistribution::new(&design).map_err(CliError::from)?;
            doc.leaf("statistic", "g2");
            doc.leaf("n", data.treated_len().to_string());
            doc.leaf("m", data.control_len().to_string());
            doc.leaf("at-delta", fmt::real(delta));
            doc.leaf("g2", fmt::real(g2));
            doc.leaf("p-exact", fmt::real(null.upper_tail_p(g2)));
            doc.leaf(
                "p-chisq3",
                fmt::real(qshift::special::chi_squared_sf(g2, 3)),
            );
        }
        StatisticArg::Table => {
            let (n, m) = sizes(opts)?;
            let design = QuartileDesign::new(n + m, n).map_err(CliError::from)?;
            doc.leaf("statistic", "table");
            doc.leaf("n", n.to_string());
            doc.leaf("m", m.to_string());
            doc.leaf(
                "cell-sizes",
                design
                    .cell_sizes()
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            let mut table = Node::branch();
            for (a, p) in enumerate_support(&design).map_err(CliError::from)? {
                let c = a.counts();
                table.leaf(
                    &format!("{} {} {} {}", c[0], c[1], c[2], c[3]),
                    fmt::real(p),
                );
            }
            doc.push("pmf", table);
        }
    }
    Ok(doc)
}
