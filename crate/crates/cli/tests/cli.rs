use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use corrgap_cli::ExperimentReport;
use serde_json::Value;

const IRIS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/iris.csv");

fn corrgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrgap")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, methods: &str, rates: &str) -> PathBuf {
    let cfg = format!(
        r#"{{
  "dataset": "{IRIS}",
  "pattern": {{"kind": "random", "rates": {rates}}},
  "methods": {methods},
  "seed": 9,
  "output_dir": "out"
}}"#
    );
    let path = dir.join("config.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn score_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    let o = corrgap(&["estimate", "--input", IRIS, "--method", "mean", "--output", path_str(&truth)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = corrgap(&["score", path_str(&truth), path_str(&truth)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "RMSE: 0.0000\n");
}

#[test]
fn mask_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = corrgap(&["mask", "--input", IRIS, "--pattern", "random", "--rate", "0.5", "--seed", "7", "--output", path_str(p)]);
        assert!(o.status.success());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let empty = String::from_utf8(ta).unwrap().lines().skip(1).flat_map(|l| l.split(',')).filter(|c| c.is_empty()).count();
    assert_eq!(empty, 300);
}

#[test]
fn dper_on_complete_data_matches_truth() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    let est = dir.path().join("dper.csv");
    assert!(corrgap(&["estimate", "--input", IRIS, "--method", "mean", "--output", path_str(&truth)]).status.success());
    assert!(corrgap(&["estimate", "--input", IRIS, "--method", "dper", "--output", path_str(&est)]).status.success());
    let o = corrgap(&["score", path_str(&truth), path_str(&est), "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rmse"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["valid_cells"], 16);
}

#[test]
fn score_writes_difference_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let masked = dir.path().join("m.csv");
    let truth = dir.path().join("t.csv");
    let est = dir.path().join("e.csv");
    assert!(corrgap(&["mask", "--input", IRIS, "--rate", "0.4", "--seed", "1", "--output", path_str(&masked)]).status.success());
    assert!(corrgap(&["estimate", "--input", IRIS, "--method", "mean", "--output", path_str(&truth)]).status.success());
    let o = corrgap(&["estimate", "--input", path_str(&masked), "--method", "knn", "--params", r#"{"k": 3}"#, "--output", path_str(&est)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diffs = dir.path().join("diffs");
    assert!(corrgap(&["score", path_str(&truth), path_str(&est), "--diff-dir", path_str(&diffs)]).status.success());
    assert!(diffs.join("abs_diff.csv").exists() && diffs.join("signed_diff.csv").exists());
}

#[test]
fn exit_codes() {
    // Usage errors.
    assert_eq!(corrgap(&["score", "--bogus"]).status.code(), Some(1));
    assert_eq!(corrgap(&[]).status.code(), Some(1));
    assert_eq!(corrgap(&["--help"]).status.code(), Some(0));
    // Config error: empty methods list, rejected before any work.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[]", "[0.1]");
    let o = corrgap(&["run", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
    // Unknown method name.
    assert_eq!(corrgap(&["estimate", "--input", IRIS, "--method", "forest", "--output", "x.csv"]).status.code(), Some(1));
    // Data errors: missing file and ragged CSV.
    assert_eq!(corrgap(&["score", "/nonexistent/a.csv", "/nonexistent/b.csv"]).status.code(), Some(2));
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3\n").unwrap();
    let o = corrgap(&["estimate", "--input", path_str(&ragged), "--method", "mean", "--output", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    // An all-null correlation leaves no valid cells to score.
    let null = dir.path().join("null.csv");
    std::fs::write(&null, "a,b\n,\n,\n").unwrap();
    let o = corrgap(&["score", path_str(&null), path_str(&null)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_matches_rescoring_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"[{"method": "mean"}, {"method": "dper"}, {"method": "knn"}]"#, "[0.1, 0.3, 0.5]");
    let o = corrgap(&["run", path_str(&cfg), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let report = ExperimentReport::load(&out.join("report.json")).unwrap();
    assert_eq!(report.methods.len(), 3);

    // Every persisted correlation rescored equals the reported RMSE.
    let truth = out.join(&report.ground_truth);
    for m in &report.methods {
        for r in &m.per_rate {
            let est = out.join(r.correlation.as_ref().unwrap());
            let o = corrgap(&["score", path_str(&truth), path_str(&est), "--json"]);
            let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
            assert!((v["rmse"].as_f64().unwrap() - r.rmse.unwrap()).abs() < 1e-9);
            assert_eq!(v["valid_cells"].as_u64().unwrap() as usize, r.valid_cells.unwrap());
            // Sublabels are reconstructible from the report alone.
            assert_eq!(r.sublabel.as_deref().unwrap(), format!("({}) RMSE: {:.4}", r.rank.unwrap(), r.rmse.unwrap()));
        }
    }

    // Rendering from the report reproduces the run's figures byte for byte.
    let redraw = dir.path().join("redraw");
    let o = corrgap(&["render", path_str(&out.join("report.json")), "--out-dir", path_str(&redraw)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in &report.figures {
        let name = Path::new(&f.path).file_name().unwrap();
        assert_eq!(std::fs::read(out.join(&f.path)).unwrap(), std::fs::read(redraw.join(name)).unwrap(), "{:?}", name);
    }
}

#[test]
fn failing_method_is_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    // k = 0 is rejected by the imputer at every rate.
    let cfg = write_config(dir.path(), r#"[{"method": "mean"}, {"method": "knn", "k": 0}]"#, "[0.2, 0.4]");
    let o = corrgap(&["run", path_str(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = ExperimentReport::load(&dir.path().join("out/report.json")).unwrap();
    let knn = report.method("KNNI").unwrap();
    assert!(!knn.in_figures);
    assert!(knn.per_rate.iter().all(|r| r.error.is_some() && r.rmse.is_none()));
    assert_eq!(report.column_order, ["Mean Impute"]);
    assert_eq!(report.figures.len(), 6);
}

#[test]
fn external_imputations_are_scored() {
    let dir = tempfile::tempdir().unwrap();
    // First pass writes the masks; an "external tool" then fills them with the truth.
    let cfg = write_config(dir.path(), r#"[{"method": "mean"}]"#, "[0.3]");
    assert!(corrgap(&["run", path_str(&cfg)]).status.success());
    std::fs::copy(IRIS, dir.path().join("filled.csv")).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"[{"method": "mean"}, {"method": "external", "label": "Oracle", "files": ["filled.csv"]}]"#,
        "[0.3]",
    );
    let o = corrgap(&["run", path_str(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = ExperimentReport::load(&dir.path().join("out/report.json")).unwrap();
    let oracle = report.method("Oracle").unwrap();
    assert!(oracle.per_rate[0].rmse.unwrap() < 1e-12);
    assert_eq!(oracle.rank_at_max_rate, Some(1));
}

#[test]
fn block_pattern_mask() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("img.csv");
    let mut text = (0..16).map(|j| format!("p{j}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for i in 0..10 {
        let row: Vec<String> = (0..16).map(|j| ((i * 7 + j * 3) % 11).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("m.csv");
    let o = corrgap(&[
        "mask", "--input", path_str(&input), "--pattern", "monotone-block", "--rate", "0.5", "--image-shape", "4x4",
        "--affected-rows", "0.3", "--output", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let masked = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<bool>> =
        masked.lines().skip(1).map(|l| l.split(',').map(str::is_empty).collect()).collect();
    let affected: Vec<&Vec<bool>> = rows.iter().filter(|r| r.iter().any(|&m| m)).collect();
    assert_eq!(affected.len(), 3);
    // Bottom-right 2x2 block of a 4x4 image.
    let expected: Vec<bool> = (0..16).map(|f| f / 4 >= 2 && f % 4 >= 2).collect();
    assert!(affected.iter().all(|r| **r == expected));
    // Without an image shape the pattern cannot be placed.
    let o = corrgap(&["mask", "--input", path_str(&input), "--pattern", "monotone-block", "--rate", "0.5", "--output", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
