//! End-to-end checks of the `flab` binary: exit codes, deterministic
//! report bytes, and the main command surfaces.

use std::process::Command;

fn flab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flab"))
}

#[test]
fn check_suite_passes_with_exit_zero() {
    let out = flab()
        .args([
            "check",
            "cross_engine",
            "--metric",
            "fubini_study",
            "--n",
            "1",
            "--samples",
            "10",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["pass"], true);
}

#[test]
fn failing_suite_exits_one() {
    let out = flab()
        .args([
            "check",
            "kahler",
            "--metric",
            "hermitian_nonkahler",
            "--samples",
            "20",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unverified_hypothesis_exits_two() {
    let out = flab()
        .args([
            "compare",
            "laplacian",
            "--metric",
            "euclidean",
            "--n",
            "2",
            "--lambda",
            "1.0",
            "--radii",
            "0.5:0.5:1",
            "--directions",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluation_error_exits_three() {
    let out = flab()
        .args(["check", "kahler", "--metric", "no_such_metric"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let run = |threads: &str| -> Vec<u8> {
        let out = flab()
            .env("FLAB_THREADS", threads)
            .args([
                "check",
                "j_invariance",
                "--metric",
                "complex_minkowski_quartic",
                "--n",
                "2",
                "--samples",
                "16",
                "--seed",
                "9",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a, b, "reports differ across thread counts");
}

#[test]
fn geodesic_csv_output() {
    let out = flab()
        .args([
            "geodesic",
            "--metric",
            "euclidean",
            "--n",
            "1",
            "--from",
            "[0.0, 0.0]",
            "--dir",
            "[1.0, 0.0]",
            "--len",
            "1.0",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,x1,x2,xdot1,xdot2"));
}

#[test]
fn tensors_dump_is_valid_json() {
    let out = flab()
        .args([
            "tensors",
            "--metric",
            "fubini_study",
            "--n",
            "1",
            "--at",
            r#"{"x": [0.1, 0.0], "y": [1.0, 0.2]}"#,
            "--dump-jets",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["real"]["g"].is_array());
    assert!(doc["complex"]["levi"].is_array());
    assert!(doc["jets"]["entries"].is_array());
}

#[test]
fn metric_file_is_accepted() {
    let dir = std::env::temp_dir().join(format!("flab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("metric.json");
    std::fs::write(&path, r#"{"expression": "abs2(v1)+abs2(v2)", "n": 2}"#).unwrap();
    let out = flab()
        .args([
            "check",
            "homogeneity",
            "--metric",
            path.to_str().unwrap(),
            "--samples",
            "20",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_diameter_small_run() {
    let out = flab()
        .args([
            "compare",
            "diameter",
            "--metric",
            "fubini_study",
            "--n",
            "2",
            "--lambda",
            "1.0",
            "--geodesics",
            "3",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
