use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn failfoundry(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_failfoundry")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = failfoundry(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn errors_use_the_kind_msg_line() {
    let out = failfoundry(&["plot", "--kind", "line", "--in", "/nonexistent/in.csv", "--out", "/tmp/x.svg"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    assert!(line.starts_with("error: kind=") && line.contains(" msg="), "{line}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    fs::write(&cfg, "[experiment]\nstages = dataio, nonsense\n").unwrap();
    let out = failfoundry(&["run", "--config", p(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("error: kind=config msg="));
}

#[test]
fn plot_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    let svg = dir.path().join("line.svg");
    fs::write(&input, "x,y\n0,0\n1,1\n").unwrap();
    ok(&["plot", "--kind", "line", "--in", p(&input), "--out", p(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);
}

#[test]
fn synth_gbt_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    let model = dir.path().join("model.txt");
    let preds = dir.path().join("preds.csv");
    let common = ["--n-features", "12", "--positive-rate", "0.2", "--part-types", "2", "--shared-features", "4"];
    ok(&[&["synth", "--n-rows", "600", "--seed", "1", "--out", p(&train)][..], &common[..]].concat());
    ok(&[&["synth", "--n-rows", "300", "--seed", "2", "--out", p(&test)][..], &common[..]].concat());
    ok(&["gbt", "fit", "--input", p(&train), "--n-trees", "30", "--max-depth", "3", "--out", p(&model)]);
    ok(&["gbt", "predict", "--model", p(&model), "--input", p(&test), "--out", p(&preds)]);
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 301);

    let importance = ok(&["gbt", "importance", "--model", p(&model), "--top-k", "3"]);
    assert_eq!(importance.lines().next(), Some("feature,gain"));
    assert_eq!(importance.lines().count(), 4);

    let out_dir = dir.path().join("metrics");
    let line = ok(&["metrics", "--input", p(&preds), "--out-dir", p(&out_dir)]);
    let auc: f64 = line.split_whitespace().next().unwrap().strip_prefix("auc=").unwrap().parse().unwrap();
    assert!(auc > 0.7, "{line}");
    assert!(out_dir.join("roc.csv").exists() && out_dir.join("mcc_sweep.csv").exists());
}

#[test]
fn reliability_simulate_fit_quantile() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("life.csv");
    let draws = dir.path().join("draws.csv");
    ok(&["reliability", "simulate", "--n", "400", "--seed", "3", "--out", p(&data)]);
    ok(&[
        "reliability", "fit", "--input", p(&data), "--chains", "2", "--burnin", "300", "--samples", "500", "--draws-out",
        p(&draws),
    ]);
    let out = ok(&["reliability", "quantile", "--draws", p(&draws), "--x", "0.5,0.5,0.5", "--q", "0.5"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("q,lifetime,draws_used,draws_excluded"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lifetime: f64 = row[1].parse().unwrap();
    let used: usize = row[2].parse().unwrap();
    let excluded: usize = row[3].parse().unwrap();
    assert!(lifetime > 0.0);
    assert_eq!(used + excluded, 1000);
}

#[test]
fn run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    fs::write(
        &cfg,
        "[experiment]\nseed = 4\noutput_dir = out\nstages = dataio, gbt, metrics\n[dataio]\nn_rows = 400\nn_features = 10\npart_types = 2\nshared_features = 2\n[gbt]\nn_trees = 10\n",
    )
    .unwrap();
    let stdout = ok(&["run", "--config", p(&cfg)]);
    assert!(stdout.contains("3 stages"), "{stdout}");
    let manifest = fs::read_to_string(dir.path().join("out/manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    assert!(manifest.lines().skip(1).all(|l| l.ends_with("\tok")));
}
