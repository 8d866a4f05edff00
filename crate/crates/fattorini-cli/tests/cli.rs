//! End-to-end tests of the command-line interface: exit codes, report
//! files, and determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fattorini"))
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("missing {}: {e}", path.display()))
}

#[test]
fn rect_prints_k_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["rect", "--sigma", "100", "--c", "1", "--d", "2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("K_sigma=10"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("rect_report.json"))).unwrap();
    assert_eq!(report["k_sigma"], 10);
    assert!(dir.path().join("rect_multiplicities.csv").exists());
}

#[test]
fn rect_rejects_bad_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["rect", "--sigma", "10", "--c", "1", "--d", "4"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rect_scan_finds_square_collision() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["rect", "--inv-c2", "1,1", "--alpha-max", "5"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let scan: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("scan.json"))).unwrap();
    assert_eq!(scan["collision_found"], true);
}

#[test]
fn demo_coupled_heat_reports_jordan_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("demo-coupled-heat")
        .arg("--quiet")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rank: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("rank_report.json"))).unwrap();
    assert_eq!(rank["overall_admissible"], true);
    for entry in rank["entries"].as_array().unwrap() {
        assert_eq!(entry["geometric_mult"], 1);
        assert_eq!(entry["pass"], true);
    }
    let spectrum: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("spectrum.json"))).unwrap();
    for cluster in spectrum["clusters"].as_array().unwrap() {
        assert_eq!(cluster["algebraic_mult"], 2);
        assert_eq!(cluster["geometric_mult"], 1);
        assert_eq!(cluster["jordan_depth"], 2);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["exit_code"], 0);
    assert!(summary["abscissa_after"].as_f64().unwrap() < -5.0);
}

#[test]
fn criterion_failure_exits_two() {
    // first-block actuation on the coupled heat system: structurally
    // uncontrollable, a mathematical negative rather than an error
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "model": {
            "family": "coupled_heat",
            "n": 10,
            "length": std::f64::consts::PI,
            "omega": [4, 6],
            "channels": "first_block"
        },
        "actuators": "auto",
        "sigma": 60.0,
        "seed": 0
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let out = bin()
        .arg("check")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--quiet")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["exit_code"], 2);
    assert_eq!(summary["uc_sigma_pass"], false);
    assert!(!summary["structural_clusters"].as_array().unwrap().is_empty());
}

#[test]
fn operational_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "model": {"family": "laplacian1d", "n": 1, "length": 1.0},
        "sigma": 0.0,
        "seed": 0
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = bin()
        .arg("spectrum")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--quiet")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["error"]["code"], "invalid-dimension");
    assert_eq!(summary["error"]["module"], "operator-models");
}

#[test]
fn same_seed_gives_byte_identical_summaries() {
    let config = serde_json::json!({
        "model": {
            "family": "reaction_diffusion",
            "n": 30,
            "length": std::f64::consts::PI,
            "shift": 12.0,
            "omega": [10, 18]
        },
        "actuators": "auto",
        "sigma": 1.0,
        "eps": 0.5,
        "simulate": {"t_final": 2.0, "dt": 0.01, "scheme": "implicit_euler", "y0": "random-seeded", "window": [0.5, 2.0]},
        "seed": 7
    });
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("config.json");
        fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
        let out = bin()
            .arg("simulate")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--quiet")
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        (
            read(&dir.path().join("summary.json")),
            read(&dir.path().join("trace.csv")),
        )
    };
    let (s1, t1) = run_once();
    let (s2, t2) = run_once();
    assert_eq!(s1, s2);
    assert_eq!(t1, t2);
}

#[test]
fn spectrum_on_custom_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    // a 3x3 matrix with known eigenvalues 1, 2, 3 written as Matrix Market
    let mtx = "%%MatrixMarket matrix array real general\n3 3\n1\n0\n0\n0\n2\n0\n0\n0\n3\n";
    let mtx_path = dir.path().join("gen.mtx");
    fs::write(&mtx_path, mtx).unwrap();
    let config = serde_json::json!({
        "model": {"family": "custom", "path": mtx_path.to_str().unwrap()},
        "seed": 0
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = bin()
        .arg("spectrum")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--quiet")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let spectrum: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("spectrum.json"))).unwrap();
    let clusters = spectrum["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 3);
    // descending real part: 3, 2, 1
    assert!((clusters[0]["lambda"]["re"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((clusters[2]["lambda"]["re"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn dynamic_flag_builds_extended_controller() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "model": {
            "family": "reaction_diffusion",
            "n": 30,
            "length": std::f64::consts::PI,
            "shift": 12.0,
            "omega": [10, 18]
        },
        "actuators": "auto",
        "sigma": 1.0,
        "eps": 0.5,
        "dynamic": true,
        "simulate": {"t_final": 3.0, "dt": 0.005, "scheme": "implicit_euler", "y0": "random-seeded", "window": [1.0, 3.0]},
        "seed": 3
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--quiet")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let fb: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("feedback.json"))).unwrap();
    assert!(fb["lambda"].is_array());
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert!(summary["abscissa_after"].as_f64().unwrap() < -1.0);
    assert!(summary["decay"]["rate"].as_f64().unwrap() > 0.9);
}
