use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn vsql(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsql")).current_dir(dir).args(args).output().expect("spawn vsql")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gen_qsd_binary_writes_the_documented_split() {
    let dir = TempDir::new().unwrap();
    let out = vsql(dir.path(), &["gen", "qsd-binary", "--seed", "7", "--out", "qsd.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("300 states"), "{text}");
    assert!(text.contains("100/200"), "{text}");
    let ds: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("qsd.json")).unwrap()).unwrap();
    assert!(ds.is_object());
}

#[test]
fn noisy_generation_validates_the_cap() {
    let dir = TempDir::new().unwrap();
    let ok = write(dir.path(), "ok.json", r#"{"noise_cap": 0.5, "seed": 1}"#);
    let out = vsql(dir.path(), &["gen", "noisy", "--config", &ok, "--out", "noisy.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("80 states"));

    let bad = write(dir.path(), "bad.json", r#"{"noise_cap": 1.5}"#);
    assert_eq!(code(&vsql(dir.path(), &["gen", "noisy", "--config", &bad, "--out", "x.json"])), 2);
}

#[test]
fn malformed_or_unknown_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let broken = write(dir.path(), "broken.json", "{\"noise_cap\": ");
    assert_eq!(code(&vsql(dir.path(), &["gen", "noisy", "--config", &broken, "--out", "x.json"])), 2);
    let unknown = write(dir.path(), "unknown.json", r#"{"noise_cap": 0.5, "colour": "red"}"#);
    assert_eq!(code(&vsql(dir.path(), &["gen", "noisy", "--config", &unknown, "--out", "x.json"])), 2);
    assert_eq!(code(&vsql(dir.path(), &["train", "--config", "missing.json", "--out", "m.json"])), 2);
    assert_eq!(code(&vsql(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn train_then_eval_on_qsd() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("qsd-binary.json");
    let out = vsql(dir.path(), &["train", "--config", cfg.to_str().unwrap(), "--out", "qsd.ckpt.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("val acc 1.0000"), "{}", stdout(&out));
    assert!(dir.path().join("qsd.ckpt.json").exists());
    let metrics = fs::read_to_string(dir.path().join("qsd.ckpt.metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next(), Some("iteration,loss,train_acc,val_acc"));

    let data = write(dir.path(), "data.json", r#"{"qsd-binary": {"seed": 0}}"#);
    let out = vsql(dir.path(), &["eval", "--ckpt", "qsd.ckpt.json", "--data", &data]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("accuracy 1.0000"));
    let preds = fs::read_to_string(dir.path().join("qsd.ckpt.predictions.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("index,label,predicted"));
    assert_eq!(preds.lines().count(), 61);
}

#[test]
fn metrics_are_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("qsd-binary.json");
    for name in ["a.json", "b.json"] {
        let out = vsql(dir.path(), &["--threads", "2", "train", "--config", cfg.to_str().unwrap(), "--out", name]);
        assert_eq!(code(&out), 0);
    }
    let a = fs::read(dir.path().join("a.metrics.csv")).unwrap();
    let b = fs::read(dir.path().join("b.metrics.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn eval_rejects_mismatched_or_missing_checkpoints() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "noisy.json",
        r#"{"data": {"noisy": {"noise_cap": 0.5, "seed": 0}},
            "ansatz": {"kind": "mnist", "n_qsc": 2},
            "train": {"epochs": 1, "max_iterations": 5}}"#,
    );
    assert_eq!(code(&vsql(dir.path(), &["train", "--config", &cfg, "--out", "noisy.ckpt.json"])), 0);
    let two_qubit = write(dir.path(), "two.json", r#"{"qsd-binary": {"seed": 0}}"#);
    assert_eq!(code(&vsql(dir.path(), &["eval", "--ckpt", "noisy.ckpt.json", "--data", &two_qubit])), 2);
    assert_eq!(code(&vsql(dir.path(), &["eval", "--ckpt", "absent.json", "--data", &two_qubit])), 2);
    let junk = write(dir.path(), "junk.json", "[1, 2, 3]");
    assert_eq!(code(&vsql(dir.path(), &["eval", "--ckpt", &junk, "--data", &two_qubit])), 2);
}

#[test]
fn theory_verifiers_pass() {
    let dir = TempDir::new().unwrap();
    let fast = write(dir.path(), "t3.json", r#"{"theta_points": 20, "uv_points": 20, "report_out": "t3.report.json"}"#);
    assert_eq!(code(&vsql(dir.path(), &["verify", "theorem3", "--config", &fast])), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t3.report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(code(&vsql(dir.path(), &["verify", "corollary1"])), 0);
}

#[test]
fn landscape_csv_has_one_row_per_grid_point() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("landscape.json");
    let out = vsql(dir.path(), &["verify", "landscape", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("landscape.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("theta1,theta2,loss"));
    assert_eq!(csv.lines().count(), 2501);
}

#[test]
fn small_bp_scan_writes_variance_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "bp.json",
        r#"{"n_list": [6], "n_qsc_list": [2, 4], "trials": 200, "seed": 1, "csv_out": "bp.csv"}"#,
    );
    let out = vsql(dir.path(), &["verify", "bp-scan", "--config", &cfg]);
    assert!(matches!(code(&out), 0 | 1));
    let csv = fs::read_to_string(dir.path().join("bp.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,n_qsc,trials,mean,variance"));
    assert_eq!(csv.lines().count(), 3);
}
