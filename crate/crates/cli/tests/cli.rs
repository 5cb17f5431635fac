//! CLI surface tests: golden report values, document round-trips, figure
//! files, exit codes, and thread-count determinism.

use qshift_cli::doc::{parse, Node};
use qshift_cli::fmt::parse_real;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qshift"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qshift-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "qshift {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn analyze_doc() -> Node {
    let controls = data_dir().join("controls.txt");
    let treated = data_dir().join("treated.txt");
    let text = run_ok(&[
        "analyze",
        "--x",
        controls.to_str().unwrap(),
        "--y",
        treated.to_str().unwrap(),
    ]);
    parse(&text).unwrap()
}

fn leaf_real(doc: &Node, path: &[&str]) -> f64 {
    parse_real(doc.get_leaf(path).unwrap_or_else(|| panic!("missing {path:?}"))).unwrap()
}

#[test]
fn analyze_golden_values() {
    let doc = analyze_doc();
    assert_eq!(doc.get_leaf(&["input", "mode-used"]), Some("exact"));
    assert!((leaf_real(&doc, &["estimates", "hl", "estimate"]) - 8.7).abs() < 1e-12);
    assert!((leaf_real(&doc, &["estimates", "gmm", "estimate"]) - 2.5).abs() < 1e-12);
    assert!((leaf_real(&doc, &["estimates", "gmm", "min-g2"]) - 3.176).abs() < 1e-3);
    let attained = leaf_real(&doc, &["estimates", "hl", "confidence", "level-95", "attained"]);
    assert!((attained - 0.9564).abs() < 5e-4);
    let set = doc
        .get_leaf(&["estimates", "hl", "confidence", "level-95", "set"])
        .unwrap();
    assert!(set.starts_with("[0.0999") && set.ends_with("19.5]"), "{set}");
    // gmm sets: two intervals at 95%, three at 90%
    let set95 = doc
        .get_leaf(&["estimates", "gmm", "confidence", "level-95", "set"])
        .unwrap();
    assert_eq!(set95.matches('[').count(), 2, "{set95}");
    let set90 = doc
        .get_leaf(&["estimates", "gmm", "confidence", "level-90", "set"])
        .unwrap();
    assert_eq!(set90.matches('[').count(), 3, "{set90}");
    assert_eq!(
        doc.get_leaf(&["estimates", "gmm", "confidence", "level-95", "is-interval"]),
        Some("false")
    );
    // attributable block
    assert_eq!(doc.get_leaf(&["attributable", "v-observed"]), Some("87"));
    assert_eq!(doc.get_leaf(&["attributable", "total-pairs"]), Some("112"));
    assert_eq!(doc.get_leaf(&["attributable", "critical-value"]), Some("82"));
    assert_eq!(doc.get_leaf(&["attributable", "lower-bound"]), Some("6"));
    assert!((leaf_real(&doc, &["attributable", "attained-confidence"]) - 0.9557).abs() < 5e-4);
}

#[test]
fn report_round_trips_exactly() {
    // the written document reparses into the same tree
    let controls = data_dir().join("controls.txt");
    let treated = data_dir().join("treated.txt");
    let opts = qshift_cli::analyze::AnalyzeOptions {
        x_path: controls,
        y_path: treated,
        mode: qshift_cli::analyze::ModeArg::Auto,
        alpha: 0.05,
        weights: None,
        pcurve: None,
        gmm_curve: None,
        boxplot_data: None,
    };
    let doc = qshift_cli::analyze::run(&opts).unwrap();
    let text = doc.render();
    let parsed = parse(&text).unwrap();
    assert_eq!(parsed, doc);
    // every leaf that looks numeric reparses to the exact bits it was
    // rendered from
    fn walk(node: &Node, check: &mut dyn FnMut(&str)) {
        match node {
            Node::Leaf(v) => check(v),
            Node::Branch(children) => {
                for (_, child) in children {
                    walk(child, check);
                }
            }
        }
    }
    walk(&doc, &mut |value| {
        if let Ok(x) = parse_real(value) {
            assert_eq!(parse_real(&qshift_cli::fmt::real(x)).unwrap(), x);
        }
    });
}

#[test]
fn figure_files() {
    let dir = tmp_dir("figures");
    let controls = data_dir().join("controls.txt");
    let treated = data_dir().join("treated.txt");
    let pcurve = dir.join("pcurve.tsv");
    let gmm_curve = dir.join("gmm.tsv");
    let boxplot = dir.join("box.tsv");
    run_ok(&[
        "analyze",
        "--x",
        controls.to_str().unwrap(),
        "--y",
        treated.to_str().unwrap(),
        "--pcurve",
        pcurve.to_str().unwrap(),
        "--gmm-curve",
        gmm_curve.to_str().unwrap(),
        "--boxplot-data",
        boxplot.to_str().unwrap(),
    ]);

    // p-curve: for each level, the deviate-accepted region is one run of
    // segments while the fit test may disconnect
    let text = std::fs::read_to_string(&pcurve).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("delta_lo"))
        .map(|l| l.split('\t').collect())
        .collect();
    // one row per shift segment, covering the whole line
    assert!(rows.len() > 100, "got {} segments", rows.len());
    assert_eq!(rows[0][0], "-inf");
    assert_eq!(rows[rows.len() - 1][1], "inf");
    for alpha in [1.0 / 3.0, 0.10, 0.05] {
        let accepted: Vec<bool> = rows
            .iter()
            .map(|r| parse_real(r[2]).unwrap() > alpha)
            .collect();
        let runs = accepted
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        assert!(runs <= 2, "deviate acceptance must be a single interval");
    }

    // gmm curve: minimum excess is exactly zero
    let text = std::fs::read_to_string(&gmm_curve).unwrap();
    let min = text
        .lines()
        .skip(1)
        .map(|l| parse_real(l.split('\t').nth(2).unwrap()).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(min, 0.0);

    // boxplot data: every quartile of treated-minus-gmm sits strictly
    // above the corresponding control quartile
    let text = std::fs::read_to_string(&boxplot).unwrap();
    let mut control = None;
    let mut gmm = None;
    for line in text.lines().skip(1) {
        let mut parts = line.split('\t');
        let label = parts.next().unwrap();
        let values: Vec<f64> = parts.map(|v| parse_real(v).unwrap()).collect();
        match label {
            "control" => control = Some(values),
            "treated_minus_gmm" => gmm = Some(values),
            _ => {}
        }
    }
    let control = control.unwrap();
    let gmm = gmm.unwrap();
    for i in 1..=3 {
        assert!(gmm[i] > control[i], "quartile {i}: {} vs {}", gmm[i], control[i]);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    // 1: input errors
    let out = bin()
        .args(["analyze", "--x", "/nonexistent/file", "--y", "/nonexistent/file2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let dir = tmp_dir("exit");
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "1.0\nnot-a-number\n3.0\n").unwrap();
    let good = data_dir().join("treated.txt");
    let out = bin()
        .args([
            "analyze",
            "--x",
            bad.to_str().unwrap(),
            "--y",
            good.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.txt:2"), "error names file and line: {stderr}");

    // 2: budget refusal in forced exact mode on a large dataset
    let big_x = dir.join("big_x.txt");
    let big_y = dir.join("big_y.txt");
    let xs: String = (0..1500).map(|i| format!("{}\n", i as f64 * 0.5)).collect();
    let ys: String = (0..1500).map(|i| format!("{}\n", i as f64 * 0.5 + 0.25)).collect();
    std::fs::write(&big_x, xs).unwrap();
    std::fs::write(&big_y, ys).unwrap();
    let out = bin()
        .args([
            "analyze",
            "--x",
            big_x.to_str().unwrap(),
            "--y",
            big_y.to_str().unwrap(),
            "--mode",
            "exact",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("asymptotic"), "budget error suggests fallback: {stderr}");

    // unknown estimator and bad weights are input errors
    let out = bin()
        .args(["simulate", "--dist", "normal", "--n", "8", "--m", "8", "--estimators", "median"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args([
            "analyze",
            "--x",
            good.to_str().unwrap(),
            "--y",
            good.to_str().unwrap(),
            "--weights",
            "0,3,2,1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_deterministic_across_threads() {
    let dir = tmp_dir("threads");
    let a = dir.join("a.txt");
    let b = dir.join("b.txt");
    for (threads, path) in [("1", &a), ("4", &b)] {
        let out = bin()
            .args([
                "simulate", "--dist", "cauchy", "--n", "9", "--m", "7", "--reps", "300",
                "--seed", "11", "--threads", threads, "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let ta = std::fs::read(&a).unwrap();
    let tb = std::fs::read(&b).unwrap();
    assert_eq!(ta, tb, "reports must be bit-identical for any worker count");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dist_command_values() {
    let text = run_ok(&["dist", "--statistic", "mw", "--n", "16", "--m", "7", "--tail", "82"]);
    let doc = parse(&text).unwrap();
    assert!((leaf_real(&doc, &["tail-p"]) - 0.044).abs() < 1e-3);

    // uniform table pmf on the smallest design
    let text = run_ok(&["dist", "--statistic", "table", "--n", "1", "--m", "3"]);
    let doc = parse(&text).unwrap();
    if let Some(Node::Branch(children)) = doc.get(&["pmf"]) {
        assert_eq!(children.len(), 4);
        for (_, node) in children {
            if let Node::Leaf(v) = node {
                assert!((parse_real(v).unwrap() - 0.25).abs() < 1e-12);
            }
        }
    } else {
        panic!("missing pmf table");
    }

    let controls = data_dir().join("controls.txt");
    let treated = data_dir().join("treated.txt");
    let text = run_ok(&[
        "dist",
        "--statistic",
        "g2",
        "--at-delta",
        "8.69",
        "--x",
        controls.to_str().unwrap(),
        "--y",
        treated.to_str().unwrap(),
    ]);
    let doc = parse(&text).unwrap();
    assert!((leaf_real(&doc, &["g2"]) - 9.2).abs() < 0.05);
    assert!((leaf_real(&doc, &["p-exact"]) - 0.021).abs() < 1e-3);
}

#[test]
fn custom_weights_block() {
    let controls = data_dir().join("controls.txt");
    let treated = data_dir().join("treated.txt");
    let text = run_ok(&[
        "analyze",
        "--x",
        controls.to_str().unwrap(),
        "--y",
        treated.to_str().unwrap(),
        "--weights",
        "0,1,4,5",
    ]);
    let doc = parse(&text).unwrap();
    assert_eq!(
        doc.get_leaf(&["estimates", "custom", "scores"]),
        Some("0 1 4 5")
    );
    let est = leaf_real(&doc, &["estimates", "custom", "estimate"]);
    assert!(est.is_finite());
}
