//! End-to-end tests of the `east` binary: every command runs against tiny
//! datasets in a temp directory, and the exit-code contract (0 success,
//! 1 runtime failure, 2 usage error) is checked on real processes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn east(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_east"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn east")
}

fn assert_code(out: &Output, want: i32) {
    let got = out.status.code();
    assert_eq!(
        got,
        Some(want),
        "exit code {got:?}, expected {want}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Generate a 60-clip dataset small enough for sub-second training runs.
fn gen_tiny(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let out = east(
        dir,
        &[
            "gen-data", "--clips", "60", "--classes", "4", "--latent", "6", "--frames", "2",
            "--channels", "6", "--teacher-channels", "6", "--seed", &seed.to_string(),
            "-o", name,
        ],
    );
    assert_code(&out, 0);
    dir.join(name)
}

/// Flags that keep a training run to a few milliseconds.
const FAST: [&str; 6] = ["--arch", "6x2,4x1", "--epochs", "2", "--batch-size", "8"];

/// The given flags followed by the fast-run flags.
fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&FAST);
    v
}

fn read_manifest(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading manifest {}: {e}", path.display()));
    serde_json::from_str(&text).expect("manifest is valid JSON")
}

/// The three metric fields of the single data row in a metrics table.
fn metric_fields(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).expect("metrics file");
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("system\tembedding\tmap\tmacro_f1\troc_auc"),
        "unexpected metrics header in {}",
        path.display()
    );
    let row = lines.next().expect("metrics row");
    assert_eq!(lines.next(), None, "more than one metrics row");
    row.split('\t').skip(2).map(str::to_owned).collect()
}

#[test]
fn gen_data_is_deterministic_and_manifested() {
    let dir = TempDir::new().unwrap();
    let out = east(
        dir.path(),
        &[
            "gen-data", "--clips", "60", "--classes", "4", "--latent", "6", "--frames", "2",
            "--channels", "6", "--teacher-channels", "6", "--seed", "3", "-o", "a.east",
        ],
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("60 clips"));
    gen_tiny(dir.path(), "b.east", 3);
    assert_eq!(
        fs::read(dir.path().join("a.east")).unwrap(),
        fs::read(dir.path().join("b.east")).unwrap(),
        "same flags must produce identical containers"
    );

    let manifest = read_manifest(&dir.path().join("a.east.manifest.json"));
    assert_eq!(manifest["command"], "gen-data");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["clips"], 60);
    assert!(manifest["tool_version"].as_str().is_some_and(|s| !s.is_empty()));
    let artifact = manifest["artifacts"][0].as_str().expect("artifact path");
    assert!(dir.path().join(artifact).exists());
}

#[test]
fn lambda_zero_feature_run_matches_baseline() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    let base = ["train", "--data", "d.east", "--seed", "5"];
    let out = east(dir.path(), &with_fast(&[&base[..], &["--system", "baseline"]].concat()));
    assert_code(&out, 0);
    let out = east(
        dir.path(),
        &with_fast(&[&base[..], &["--system", "east-final", "--lambda", "0"]].concat()),
    );
    assert_code(&out, 0);

    assert_eq!(
        metric_fields(&dir.path().join("runs/baseline-d-metrics.tsv")),
        metric_fields(&dir.path().join("runs/east-final-d-metrics.tsv")),
        "a feature-regularized run with zero weight must reproduce the baseline"
    );
}

#[test]
fn distillation_requires_a_teacher_checkpoint() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    for system in ["kd", "east-kd"] {
        let out = east(
            dir.path(),
            &with_fast(&["train", "--data", "d.east", "--system", system]),
        );
        assert_code(&out, 2);
        assert!(stderr(&out).contains("--teacher"), "error should name the missing flag");
    }

    // A student checkpoint is not a teacher.
    let out = east(
        dir.path(),
        &with_fast(&["train", "--data", "d.east", "--system", "baseline"]),
    );
    assert_code(&out, 0);
    let out = east(
        dir.path(),
        &with_fast(&[
            "train", "--data", "d.east", "--system", "kd",
            "--teacher", "runs/baseline-d.ckpt",
        ]),
    );
    assert_code(&out, 2);
    assert!(stderr(&out).contains("teacher-lr"));
}

#[test]
fn teacher_checkpoint_flows_into_distillation() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    let out = east(
        dir.path(),
        &["train", "--data", "d.east", "--system", "teacher-lr"],
    );
    assert_code(&out, 0);
    let teacher = dir.path().join("runs/teacher-lr-d.ckpt");
    assert!(teacher.exists());

    for system in ["kd", "east-kd"] {
        let out = east(
            dir.path(),
            &with_fast(&[
                "train", "--data", "d.east", "--system", system,
                "--teacher", "runs/teacher-lr-d.ckpt",
            ]),
        );
        assert_code(&out, 0);
        let metrics = metric_fields(&dir.path().join(format!("runs/{system}-d-metrics.tsv")));
        assert_eq!(metrics.len(), 3);
        for field in &metrics {
            assert!(
                field.parse::<f64>().is_ok_and(|v| (0.0..=1.0).contains(&v)),
                "metric '{field}' should be a 4-decimal value in [0, 1]"
            );
        }
    }
}

#[test]
fn train_artifacts_are_reproducible_and_manifested() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    for out_dir in ["runA", "runB"] {
        let out = east(
            dir.path(),
            &with_fast(&[
                "train", "--data", "d.east", "--system", "east-all",
                "--seed", "9", "--out-dir", out_dir,
            ]),
        );
        assert_code(&out, 0);
    }
    for file in [
        "east-all-d.ckpt",
        "east-all-d-history.tsv",
        "east-all-d-metrics.tsv",
    ] {
        assert_eq!(
            fs::read(dir.path().join("runA").join(file)).unwrap(),
            fs::read(dir.path().join("runB").join(file)).unwrap(),
            "{file} must be identical across same-seed runs"
        );
    }

    let manifest = read_manifest(&dir.path().join("runA/east-all-d.manifest.json"));
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["system"], "east-all");
    let artifacts = manifest["artifacts"].as_array().expect("artifact list");
    assert_eq!(artifacts.len(), 3);
    for artifact in artifacts {
        assert!(dir.path().join(artifact.as_str().unwrap()).exists());
    }

    let history = fs::read_to_string(dir.path().join("runA/east-all-d-history.tsv")).unwrap();
    assert!(history.starts_with("epoch\ttrain_loss\tval_map\n"));
    assert_eq!(history.lines().count(), 3, "header plus one line per epoch");
}

#[test]
fn sweep_reports_the_grid_and_best_lambda() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    let out = east(
        dir.path(),
        &with_fast(&["sweep", "--data", "d.east", "--grid", "0.0,0.5"]),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("best lambda:"));

    let table = fs::read_to_string(dir.path().join("runs/east-final-d-sweep.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "lambda\tval_map\ttest_map");
    assert_eq!(lines.len(), 3, "header plus one row per grid value");
    assert!(lines[1].starts_with("0\t"));
    assert!(lines[2].starts_with("0.5\t"));
    assert!(dir.path().join("runs/east-final-d-sweep.tsv.manifest.json").exists());
}

#[test]
fn limited_emits_the_full_factorial_table() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);
    let out = east(
        dir.path(),
        &with_fast(&[
            "limited", "--data", "d.east", "--fractions", "0.5,1.0", "--seeds", "2",
        ]),
    );
    assert_code(&out, 0);

    let table = fs::read_to_string(dir.path().join("runs/limited-d.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "system\tfraction\tseed\tmap");
    assert_eq!(lines.len(), 1 + 4 * 2 * 2, "4 systems x 2 fractions x 2 seeds");
    for system in ["baseline", "kd", "east-cos-diff", "east-final"] {
        let rows = lines[1..]
            .iter()
            .filter(|l| l.starts_with(&format!("{system}\t")))
            .count();
        assert_eq!(rows, 4, "{system} should appear once per (fraction, seed)");
    }
}

#[test]
fn complexity_reports_parameter_and_rate_columns() {
    let dir = TempDir::new().unwrap();
    let out = east(
        dir.path(),
        &[
            "complexity", "--arch", "8x2,8x1", "--channels", "12", "--frames", "40",
            "--classes", "3", "--seconds", "0.05",
        ],
    );
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("Parameters (M)") && text.contains("iterations/s"));

    let report = fs::read_to_string(dir.path().join("runs/complexity.tsv")).unwrap();
    assert_eq!(report, text, "the written report matches what was printed");
    let manifest = read_manifest(&dir.path().join("runs/complexity.tsv.manifest.json"));
    assert_eq!(manifest["config"]["channels"], 12);
}

#[test]
fn selftest_passes_and_writes_a_report() {
    let dir = TempDir::new().unwrap();
    let out = east(dir.path(), &["selftest"]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains(": PASS") && !text.contains("FAIL"));
    assert!(text.contains("checks passed"));

    let report = fs::read_to_string(dir.path().join("runs/selftest.txt")).unwrap();
    assert!(report.contains("checks passed"));
    assert!(dir.path().join("runs/selftest.txt.manifest.json").exists());
}

#[test]
fn usage_and_runtime_failures_use_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    gen_tiny(dir.path(), "d.east", 3);

    // Usage errors: exit 2.
    let unknown_system = east(dir.path(), &["train", "--data", "d.east", "--system", "resnet"]);
    assert_code(&unknown_system, 2);
    assert!(stderr(&unknown_system).contains("east-final"), "should list valid systems");
    let bad_arch = east(
        dir.path(),
        &["train", "--data", "d.east", "--system", "baseline", "--arch", "16"],
    );
    assert_code(&bad_arch, 2);
    let bad_lambda = east(
        dir.path(),
        &with_fast(&[
            "train", "--data", "d.east", "--system", "east-final", "--lambda", "1.5",
        ]),
    );
    assert_code(&bad_lambda, 2);
    let unknown_flag = east(dir.path(), &["train", "--no-such-flag"]);
    assert_code(&unknown_flag, 2);
    let bad_measure = east(
        dir.path(),
        &with_fast(&[
            "train", "--data", "d.east", "--system", "east-final", "--measure", "pearson",
        ]),
    );
    assert_code(&bad_measure, 2);

    // Runtime failures: exit 1.
    let missing_data = east(dir.path(), &["train", "--data", "nope.east", "--system", "baseline"]);
    assert_code(&missing_data, 1);

    // Help is not an error.
    let help = east(dir.path(), &["--help"]);
    assert_code(&help, 0);
}
