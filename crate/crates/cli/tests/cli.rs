use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use fluxcouple::cooling::{cooling_record, temperature_for_occupation, CoolingSpec, CouplingKind};
use fluxcouple_cli::{execute, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxcouple"))
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(config: &Path, out: &Path, jobs: usize) -> Output {
    bin()
        .args(["run", config.to_str().unwrap(), "--jobs", &jobs.to_string(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
}

fn stderr_record(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Data rows of a series CSV, comment lines dropped.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn extract_config() -> Value {
    json!({
        "kind": "extract",
        "device": {"omega1": 1.0, "omega2": 0.75, "alpha_ej": 0.02},
        "drive": {"f_zz": 0.05},
        "output": "zz"
    })
}

fn cool_config() -> Value {
    json!({
        "kind": "cool",
        "device": {"omega": 1.0, "omega_s": 1.5, "gamma_s": 0.02, "kappa": 1e-4, "n_th": 0.05},
        "drive": {"g": 0.01},
        "output": "cool"
    })
}

#[test]
fn extract_reports_the_analytic_numeric_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zz.json", &extract_config());
    let o = run(&cfg, dir.path(), 1);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("zz.result.json")).unwrap()).unwrap();
    let r = &doc["points"][0]["result"];
    // cos(π/2 − f) ≈ f at first order: c_zz = −αE_J f c1 c2 with c = 1.
    let expected = -0.02 * 0.05;
    let analytic = r["analytic"]["zz"].as_f64().unwrap();
    assert!((analytic - expected).abs() < 1e-15);
    for method in ["average", "floquet"] {
        let x = r[method]["zz"].as_f64().unwrap();
        assert!((x / expected - 1.0).abs() < 0.03, "{method}: {x}");
        assert!(r[method]["xx"].as_f64().unwrap().abs() < 1e-2 * 0.02 * 0.05);
    }
    assert_eq!(doc["kind"], "extract");
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn cool_row_matches_the_cooling_module() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cool.json", &cool_config());
    let o = run(&cfg, dir.path(), 1);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&fs::read_to_string(dir.path().join("cool.series.csv")).unwrap());
    assert_eq!(rows.len(), 1);
    let col = |name: &str| -> f64 {
        let i = header.iter().position(|h| h == name).unwrap();
        rows[0][i].parse().unwrap()
    };
    let spec = CoolingSpec {
        omega: 1.0,
        omega_s: 1.5,
        g: 0.01,
        gamma_s: 0.02,
        kappa: 1e-4,
        temperature: temperature_for_occupation(1.0, 0.05).unwrap(),
        coupling_kind: CouplingKind::Exchange,
        shadow_thermal: true,
    };
    let rec = cooling_record(&spec).unwrap();
    // 17 significant digits round-trip exactly.
    assert_eq!(col("rho_plus_analytic"), rec.rho_plus_analytic);
    assert_eq!(col("rho_plus_lindblad"), rec.rho_plus_lindblad);
    assert_eq!(col("t_eff_analytic"), rec.t_eff_analytic);
    assert_eq!(col("t_eff_lindblad"), rec.t_eff_lindblad);
    assert_eq!(col("excitation_lindblad"), rec.excitation_lindblad);
}

#[test]
fn missing_field_exits_nonzero_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = extract_config();
    v["device"].as_object_mut().unwrap().remove("omega1");
    let cfg = write_config(dir.path(), "bad.json", &v);
    let o = run(&cfg, dir.path(), 1);
    assert!(!o.status.success());
    let rec = stderr_record(&o);
    assert_eq!(rec["error"]["kind"], "schema");
    assert_eq!(rec["error"]["path"], "device.omega1");
    assert!(rec["error"]["message"].as_str().unwrap().contains("omega1"));
    assert!(!dir.path().join("zz.result.json").exists());
}

#[test]
fn unknown_field_is_a_schema_error() {
    let mut v = extract_config();
    v["drive"]["f_qq"] = json!(0.1);
    let e = ExperimentConfig::from_value(v).unwrap_err();
    assert_eq!(e.path(), Some("drive.f_qq"));
}

#[test]
fn physics_failure_is_reported_with_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = cool_config();
    v["sweep"] = json!({"path": "device.omega_s", "values": [1.5, 0.5]});
    let cfg = write_config(dir.path(), "cool.json", &v);
    let o = run(&cfg, dir.path(), 2);
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_record(&o);
    assert_eq!(rec["error"]["kind"], "experiment");
    assert_eq!(rec["error"]["point"], 1);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let mut v = cool_config();
    v["drive"]["coupling_kind"] = json!("xx");
    v["sweep"] = json!({"path": "drive.g", "values": [0.05, 0.0, 0.02, 0.01, 0.005]});
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &v);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a, 1).status.success());
    assert!(run(&cfg, &b, 4).status.success());
    for f in ["cool.result.json", "cool.series.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (header, rows) = csv_rows(&fs::read_to_string(a.join("cool.series.csv")).unwrap());
    assert_eq!(header[..2], ["sweep_index", "drive.g"]);
    let order: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(order, vec![0, 1, 2, 3, 4]);
    let g: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(g, vec![0.05, 0.0, 0.02, 0.01, 0.005]);
}

#[test]
fn warnings_are_embedded_and_not_fatal() {
    let v = json!({
        "kind": "extract",
        "device": {"omega1": 1.0, "omega2": 0.75, "alpha_ej": 0.2},
        "drive": {"f_zz": 0.05},
        "options": {"floquet": false}
    });
    let cfg = ExperimentConfig::from_value(v).unwrap();
    let out = execute(&cfg, 1).unwrap();
    let doc: Value = serde_json::from_str(&out.json).unwrap();
    let w = doc["warnings"].as_array().unwrap();
    assert!(w.iter().any(|w| w.as_str().unwrap().starts_with("alpha_ej =")), "{w:?}");
    assert_eq!(doc["points"][0]["warnings"], doc["warnings"]);
    assert!(out.csv.contains("# warning: alpha_ej"));
    assert!(out.csv.starts_with(&format!("# config_hash={}", cfg.hash())));
}

#[test]
fn multilevel_exports_matrix_elements() {
    let v = json!({
        "kind": "multilevel",
        "device": {"omega1": 1.0, "omega2": 1.25, "alpha1": 0.05, "alpha2": 0.0625, "coupling": 0.0125, "levels": 3},
        "drive": {"k": [0.1, 0.1, 0.1, 0.1]},
        "options": {"method": "average"}
    });
    let out = execute(&ExperimentConfig::from_value(v).unwrap(), 1).unwrap();
    let (header, rows) = csv_rows(&out.csv);
    assert_eq!(header, ["bra", "ket", "re", "im"]);
    let doc: Value = serde_json::from_str(&out.json).unwrap();
    let elements = doc["points"][0]["result"]["elements"].as_array().unwrap();
    assert_eq!(elements.len(), rows.len());
    let hop = rows.iter().find(|r| r[0] == "01" && r[1] == "10").expect("single-photon hop present");
    assert!(hop[2].parse::<f64>().unwrap().abs() > 1e-4);
    // Hermitian export: every element has its transpose partner.
    for r in &rows {
        assert!(rows.iter().any(|s| s[0] == r[1] && s[1] == r[0]));
    }
}

#[test]
fn selfcheck_passes_and_is_deterministic() {
    let a = bin().arg("selfcheck").output().unwrap();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 14);
    assert!(!text.contains("FAIL"));
    let b = bin().arg("selfcheck").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn selfcheck_json_lists_every_check() {
    let o = bin().args(["selfcheck", "--json"]).output().unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
}
