//! End-to-end runs of the `iimp` binary against the shipped configs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iimp"))
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn ratio_curves_writes_the_contracted_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "ratio-curves",
            "--config",
            &config("ratio_jc_p1_fock6.json"),
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,delta_target,delta_reference,ratio,scaled_ratio");
    assert_eq!(csv.lines().count(), 81); // header + 80 grid points

    let limits: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("limits.json")).unwrap())
            .unwrap();
    let extrapolated = limits["extrapolated"].as_f64().unwrap();
    let exact = limits["exact"].as_f64().unwrap();
    let abs_diff = limits["abs_diff"].as_f64().unwrap();
    assert!((extrapolated - 2.0).abs() <= 1e-4);
    assert!(abs_diff <= 1e-4, "abs_diff {abs_diff}");
    assert!((extrapolated - exact).abs() <= 1e-4);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn cutoff_check_flag_is_accepted_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "ratio-curves",
            "--config",
            &config("ratio_jc_p1_fock6.json"),
            "--cutoff-check",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let limits: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("limits.json")).unwrap())
            .unwrap();
    let check = &limits["cutoff_check"];
    assert_eq!(check["base_cutoff"], 30);
    assert_eq!(check["grown_cutoff"], 45);
    assert!(check["passed"].as_bool().unwrap());
    assert!(check["drift"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn tomography_writes_density_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["tomography", "--config", &config("tomography.json"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dm: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("density_matrix.json")).unwrap(),
    )
    .unwrap();
    assert!((dm["ee"]["re"].as_f64().unwrap() - 0.64).abs() <= 5e-3);
    assert!((dm["eg"]["im"].as_f64().unwrap() - 0.24).abs() <= 5e-3);
    let stage0 = std::fs::read_to_string(dir.path().join("stage0/curves.csv")).unwrap();
    assert_eq!(
        stage0.lines().next().unwrap(),
        "t,delta_target,delta_reference,ratio,scaled_ratio,fidelity"
    );
}

#[test]
fn qfi_reports_zero_at_time_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["qfi", "--config", &config("qfi_jc_p1.json"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let qfi_csv = std::fs::read_to_string(dir.path().join("qfi.csv")).unwrap();
    let mut lines = qfi_csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,f_target,f_reference,f_indirect,indirect_over_direct"
    );
    // the t = 0 row carries F = 0 for both states
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    assert!(first[1].parse::<f64>().unwrap().abs() <= 1e-10);
    assert!(first[2].parse::<f64>().unwrap().abs() <= 1e-10);
}

#[test]
fn qfi_self_reference_ratio_column_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("qfi_jc_p1.json")).unwrap()).unwrap();
    cfg["reference_state"] = cfg["target_state"].clone();
    let cfg_path = dir.path().join("self.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    let out = bin()
        .args(["qfi", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let qfi_csv = std::fs::read_to_string(dir.path().join("qfi.csv")).unwrap();
    for line in qfi_csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[0].parse::<f64>().unwrap() == 0.0 {
            continue; // 0/0 cell is empty at t = 0
        }
        let ratio: f64 = cells[4].parse().unwrap();
        assert_eq!(ratio, 1.0, "line {line}");
    }
}

#[test]
fn validate_exits_zero_and_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["validate", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failed"], 0);
    assert_eq!(report["seed"], 3);
    assert!(dir.path().join("validate.json").exists());
}

#[test]
fn missing_config_fails_with_nonzero_exit() {
    let out = bin()
        .args(["ratio-curves", "--config", "/nonexistent/x.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn identical_runs_produce_identical_bytes() {
    let run = |dir: &Path| {
        let out = bin()
            .args(["ratio-curves", "--config", &config("ratio_rabi_p2_fock6.json"), "--out"])
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        (
            std::fs::read(dir.join("curves.csv")).unwrap(),
            std::fs::read(dir.join("limits.json")).unwrap(),
            std::fs::read(dir.join("report.json")).unwrap(),
        )
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = run(d1.path());
    let b = run(d2.path());
    assert_eq!(a, b);
}
