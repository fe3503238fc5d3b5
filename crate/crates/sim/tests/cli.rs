use std::path::Path;
use std::process::{Command, Output};

use khoploc::report::HEADER;
use khoploc::{ExperimentSpec, FitFile};

fn khoploc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khoploc")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "side = 5\nn_total = 80\nn_anchors = 6\nanchor_mode = random\niterations = 5\ntrials = 2\n";

#[test]
fn defaults_parse_back() {
    let out = khoploc(&["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ExperimentSpec::from_config_str(&text).unwrap(), ExperimentSpec::default());
}

#[test]
fn experiment_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let csv = dir.path().join("out.csv");
    let out = khoploc(&["experiment", "--config", &cfg, "--out", csv.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    // 2 trials × 74 targets × 2 algorithms, 2 × 2 trial summaries, 2 overall
    assert_eq!(lines.len(), 1 + 2 * 74 * 2 + 4 + 2);
    assert!(lines.iter().any(|l| l.contains(",ALL,ALL,khoploc,")));

    let stdout = khoploc(&["experiment", "--config", &cfg, "--seed", "9", "--threads", "2"]);
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), text);
}

#[test]
fn algorithm_and_trial_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = khoploc(&["localize", "--config", &cfg, "--algorithms", "dvhop"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",dvhop,")));
    assert_eq!(text.lines().count(), 1 + 74 + 1 + 1);
}

#[test]
fn train_then_reuse_fit_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let fit_path = dir.path().join("model.fit");
    let out = khoploc(&["train", "--config", &cfg, "--out", fit_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let file = FitFile::read(&fit_path).unwrap();
    assert_eq!(file.iterations, 5);
    assert!((file.density - 80.0 / 25.0).abs() < 1e-12);

    // an experiment driven by the saved model matches one that trains in-process
    let trained = khoploc(&["experiment", "--config", &cfg, "--algorithms", "khoploc"]);
    let cfg2 = write_config(dir.path(), &format!("{SMALL}fit_model = {}\n", fit_path.display()));
    let loaded = khoploc(&["experiment", "--config", &cfg2, "--algorithms", "khoploc"]);
    assert!(loaded.status.success());
    assert_eq!(trained.stdout, loaded.stdout);
}

#[test]
fn sweep_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = khoploc(&["sweep", "--config", &cfg, "--axis", "anchors", "--range", "4:6:2", "--trials", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let anchors: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(anchors.contains(&"4") && anchors.contains(&"6"));

    let empty = khoploc(&["sweep", "--config", &cfg, "--range", "500:400"]);
    assert!(empty.status.success());
    assert_eq!(String::from_utf8(empty.stdout).unwrap().trim(), HEADER);

    let density = khoploc(&["density", "--config", &cfg, "--trials", "3"]);
    assert!(density.status.success());
    assert_eq!(String::from_utf8(density.stdout).unwrap().lines().count(), 4);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "n_total = lots\n");
    assert!(!khoploc(&["experiment", "--config", &bad]).status.success());
    assert!(!khoploc(&["experiment", "--config", "/nonexistent/exp.cfg"]).status.success());
    let cfg = write_config(dir.path(), SMALL);
    assert!(!khoploc(&["experiment", "--config", &cfg, "--out", "/nonexistent/dir/out.csv"]).status.success());
    assert!(!khoploc(&["sweep", "--config", &cfg]).status.success());
    assert!(!khoploc(&["experiment", "--algorithms", "asp"]).status.success());
    let missing_fit = write_config(dir.path(), &format!("{SMALL}fit_model = /nonexistent.fit\n"));
    assert!(!khoploc(&["experiment", "--config", &missing_fit]).status.success());
}
