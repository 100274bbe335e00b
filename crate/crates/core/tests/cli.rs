//! End-to-end checks of the `nlkm` binary: outputs, file layout and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn nlkm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlkm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "[grid]\nlx = 8.0\nly = 8.0\nnx = 24\nny = 24\n\
                     [control]\nt_end = 0.5\nsnapshot_stride = 100\n";

fn sorted_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn analyze_prints_equilibria_and_both_condition_sets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = nlkm(&["analyze", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bare soil"));
    assert!(text.contains("0.3333333333333333"));
    assert!(text.contains("vegetated (high)"));
    assert!(text.contains("printed conditions (as typeset)"));
    assert!(text.contains("standard conditions"));
    let json_start = text.find("\n{").unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(doc["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn kernel_info_reports_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = nlkm(&["kernel-info", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("lambda_disc")).unwrap();
    let lambda: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(lambda > 0.999 && lambda <= 1.0, "{lambda}");
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[model]\nd1 = 0.01\nd2 = 0.01\n");
    let out = nlkm(&["analyze", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("(D)"), "{err}");

    let cfg = write(dir.path(), "d.toml", "[control]\ndt = 1.0\n");
    let out = nlkm(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = Command::new(env!("CARGO_BIN_EXE_nlkm"))
        .args(["analyze", "--config", &cfg])
        .env("NLKM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = nlkm(&["analyze", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let cfg = write(dir.path(), "c.toml", SMALL);
    let blocker = write(dir.path(), "not_a_dir", "");
    let out = nlkm(&["simulate", "--config", &cfg, "--out", &blocker]);
    assert_eq!(out.status.code(), Some(4));

    let cfg = write(
        dir.path(),
        "f.toml",
        "[initial]\nkind = \"from_file\"\nn_path = \"/nonexistent/n.raw\"\nw_path = \"/nonexistent/w.raw\"\n",
    );
    let out = nlkm(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn zero_horizon_writes_manifest_and_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{SMALL}t_end = 0.0\n").replace("t_end = 0.5\n", ""),
    );
    let out_dir = dir.path().join("run");
    let out = nlkm(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        sorted_names(&out_dir),
        [
            "manifest.json",
            "n_000000.csv",
            "n_000000.pgm",
            "w_000000.csv",
            "w_000000.pgm"
        ]
    );
}

#[test]
fn final_snapshot_uses_zero_padded_step_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out_dir = dir.path().join("run");
    let out = nlkm(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let steps = manifest["derived"]["steps"].as_u64().unwrap();
    let last = manifest["snapshots"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .clone();
    assert_eq!(last["diagnostics"]["t"].as_f64().unwrap(), 0.5);
    let names: Vec<&str> = last["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let expected: Vec<String> = ["n_{:06}.csv", "w_{:06}.csv", "n_{:06}.pgm", "w_{:06}.pgm"]
        .iter()
        .map(|p| p.replace("{:06}", &format!("{steps:06}")))
        .collect();
    assert_eq!(names, expected);
    for f in &expected {
        assert!(out_dir.join(f).exists());
    }
}

#[test]
fn manifest_rerun_reproduces_raw_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{SMALL}[output]\nformats = [\"raw\"]\n[initial]\nkind = \"uniform_plus_noise\"\namplitude = 0.2\nseed = 11\n"),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(
        nlkm(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    let manifest = a.join("manifest.json");
    let out = Command::new(env!("CARGO_BIN_EXE_nlkm"))
        .args([
            "simulate",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ])
        .env("NLKM_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let raws: Vec<String> = sorted_names(&a)
        .into_iter()
        .filter(|n| n.ends_with(".raw"))
        .collect();
    assert!(raws.len() >= 4);
    for name in raws {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn compare_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let local = write(
        dir.path(),
        "l.toml",
        &format!("{SMALL}[model]\nmode = \"local\"\n"),
    );
    let nonlocal = write(dir.path(), "n.toml", SMALL);
    let out_dir = dir.path().join("cmp");
    let out = nlkm(&[
        "compare",
        "--local",
        &local,
        "--nonlocal",
        &nonlocal,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["l2_distance"].as_f64().unwrap() > 0.0);
    assert!(doc["local"]["coefficient_of_variation"].as_f64().is_some());
    assert!(out_dir.join("compare.json").exists());

    let out = nlkm(&[
        "compare",
        "--local",
        &nonlocal,
        "--nonlocal",
        &local,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
