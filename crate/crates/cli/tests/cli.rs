//! Drives the binary end to end: synth -> validate-config -> run -> report.

use std::fs;
use std::path::Path;
use std::process::Command;

fn ciex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ciex"))
}

#[test]
fn synth_then_policy_run_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("data");
    let status = ciex()
        .args([
            "synth",
            "--n-accept",
            "800",
            "--n-reject",
            "400",
            "--bias",
            "0.4",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&synth_dir)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["accepts.csv", "rejects.csv", "hidden.csv", "schema.txt"] {
        assert!(synth_dir.join(f).exists(), "{f}");
    }

    let out_dir = tmp.path().join("run");
    let config_path = tmp.path().join("config.toml");
    fs::write(
        &config_path,
        format!(
            r#"
kind = "policy_sweep"
output_dir = "{}"
seeds = [1]
alpha_grid = [0.5]

[selection]
criteria = "kickout"

[policy]
accepts_csv = "{}"
schema = "{}"
label_column = "target"
epsilons = [0.5]
features = ["f0", "f1", "f2"]
l1_strength = 0.001

[[methods]]
name = "bm"

[[methods]]
name = "a-dw"
"#,
            out_dir.display(),
            synth_dir.join("accepts.csv").display(),
            synth_dir.join("schema.txt").display(),
        ),
    )
    .unwrap();

    let status = ciex()
        .args(["validate-config", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert!(status.success());

    let status = ciex()
        .args(["run", "--jobs", "2", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert!(status.success());

    let status = ciex().args(["report", "--dir"]).arg(&out_dir).status().unwrap();
    assert!(status.success());
    assert!(out_dir.join("report/auc_matrix.csv").exists());
    let matrix = fs::read_to_string(out_dir.join("report/auc_matrix.csv")).unwrap();
    assert!(matrix.starts_with("method,eps0.50\n"), "{matrix}");
}

#[test]
fn invalid_config_exits_nonzero_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("bad.toml");
    fs::write(
        &config_path,
        r#"
kind = "synthetic"
output_dir = "x"
seeds = [1]

[[methods]]
name = "bm"
"#,
    )
    .unwrap();
    let out = ciex()
        .args(["validate-config", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("synthetic"), "{stderr}");
}

#[test]
fn out_flag_overrides_config_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("config.toml");
    let override_dir = tmp.path().join("elsewhere");
    fs::write(
        &config_path,
        format!(
            r#"
kind = "synthetic"
output_dir = "{}"
seeds = [2]
alpha_grid = [1.0]

[synthetic]
n_accept = 120
n_reject = 150
bias = 0.3

[[methods]]
name = "bm"
"#,
            tmp.path().join("ignored").display()
        ),
    )
    .unwrap();
    let status = ciex()
        .args(["run", "--jobs", "1", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&override_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(override_dir.join("manifest.json").exists());
    assert!(!Path::new(&tmp.path().join("ignored")).exists());
}
