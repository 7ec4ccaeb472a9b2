use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stepflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepflow"))
        .current_dir(dir)
        .args(args)
        .env_remove("STEPFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RUN: &str = r#"{
  "coefficients": {"nondimensional": {"c1": 1, "c2": 1, "c3": 1, "a": 0.1}},
  "grid": {"n": 16, "length": 1.0},
  "slope": [1.0, 0.5],
  "initial": {"random": {"seed": 9, "kmax": 4, "amplitude": 0.05}},
  "evolution": {"dt": 1e-4, "t_end": 2e-3},
  "snapshot_every": 10
}"#;

fn manifests(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
        .count()
}

#[test]
fn coeffs_prints_gamma0() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["coeffs", "--preset", "zhu2009"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = v["gamma0"].as_f64().unwrap();
    assert!(((g - 9.7109e-8) / 9.7109e-8).abs() < 5e-3, "{g}");
}

#[test]
fn missing_config_exits_2_and_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["evolve", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_line_and_column() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.json"), "{\n  \"coefficients\": {\"preset\": \"unit\"},\n  \"grid\": [1, 2,\n}").unwrap();
    let o = stepflow(tmp.path(), &["evolve", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json") && err.contains("line 4"), "{err}");
}

#[test]
fn unknown_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = RUN.replace("\"snapshot_every\"", "\"snapshot_evry\"");
    fs::write(tmp.path().join("run.json"), text).unwrap();
    let o = stepflow(tmp.path(), &["evolve", "--config", "run.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("snapshot_evry"), "{}", stderr(&o));
}

#[test]
fn evolve_is_deterministic_and_writes_one_manifest_per_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("run.json"), RUN).unwrap();
    for out in ["a", "b"] {
        let trace = format!("{out}/trace.csv");
        let snaps = format!("{out}/snaps");
        let o = stepflow(dir, &["evolve", "--config", "run.json", "--out", &trace, "--snapshots", &snaps]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read(dir.join("a/trace.csv")).unwrap();
    assert_eq!(a, fs::read(dir.join("b/trace.csv")).unwrap());
    for name in ["snapshot_00000000.csv", "snapshot_00000010.csv", "snapshot_00000020.csv"] {
        assert_eq!(
            fs::read(dir.join("a/snaps").join(name)).unwrap(),
            fs::read(dir.join("b/snaps").join(name)).unwrap(),
            "{name}"
        );
    }
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,E_total,E_nonlocal,E_log,E_lin,E_cubic,mass,max_slope,dt"
    );
    assert_eq!(text.lines().count(), 1 + 21);
    assert_eq!(manifests(&dir.join("a")), 1);
    assert_eq!(manifests(&dir.join("a/snaps")), 1);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "evolve");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["grid"]["n"], 16);
    assert!(m["outputs"].as_array().unwrap().iter().all(|o| o["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn manifest_reruns_bit_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("run.json"), RUN).unwrap();
    assert!(stepflow(dir, &["evolve", "--config", "run.json", "--out", "a/trace.csv"]).status.success());
    let o = stepflow(dir, &["evolve", "--config", "a/manifest.json", "--out", "b/trace.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(dir.join("a/trace.csv")).unwrap(), fs::read(dir.join("b/trace.csv")).unwrap());
}

#[test]
fn energy_of_a_snapshot_matches_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("run.json"), RUN).unwrap();
    let o = stepflow(dir, &["evolve", "--config", "run.json", "--out", "trace.csv", "--snapshots", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cfg = r#"{"coefficients": {"nondimensional": {"c1": 1, "c2": 1, "c3": 1, "a": 0.1}},
                  "initial": {"snapshot": {"path": "s/snapshot_00000020.bin"}}}"#;
    fs::write(dir.join("energy.json"), cfg).unwrap();
    let o = stepflow(dir, &["energy", "--config", "energy.json", "--out", "e"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (got, want) = (e["total"].as_f64().unwrap(), summary["energy_end"]["total"].as_f64().unwrap());
    assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
    assert_eq!(manifests(&dir.join("e")), 1);
}

#[test]
fn selfcheck_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["selfcheck"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn transition_scan_writes_csv_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["transition-scan", "--vary", "lt", "--points", "21", "--out", "tr"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("tr");
    let csv = fs::read_to_string(dir.join("transition_lt_over_a.csv")).unwrap();
    assert!(csv.starts_with("parameter,n_steps,eps0,lt,"));
    assert_eq!(csv.lines().count(), 22);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("transition.json")).unwrap()).unwrap();
    assert_eq!(v[0]["crossings"].as_array().unwrap().len(), 1);
    assert_eq!(manifests(&dir), 1);
}

#[test]
fn scaling_sweep_fits_inverse_square() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["scaling-sweep", "--points", "7", "--out", "sc"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["slope"].as_f64().unwrap() + 2.0).abs() < 0.05);
    let csv = fs::read_to_string(tmp.path().join("sc/scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn invalid_sweep_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["scaling-sweep", "--a-max", "1e-2", "--a-min", "1e-3", "--out", "sc"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn convexity_audit_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stepflow(tmp.path(), &["convexity-audit", "--preset", "unit", "--samples", "400", "--out", "au"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["psi_convex"], true);
    let dir = tmp.path().join("au");
    let rows = fs::read_to_string(dir.join("audit.csv")).unwrap();
    assert!(rows.starts_with("r,phi,eigmin_psi,eigmin_psi0\n"));
    assert_eq!(rows.lines().count(), 401);
    assert!(dir.join("density.csv").exists());
}

#[test]
fn example_profiles() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["meander", "bunch"] {
        let out = format!("p/{kind}.csv");
        let o = stepflow(tmp.path(), &["profile", kind, "--n", "32", "--out", &out]);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = fs::read_to_string(tmp.path().join(&out)).unwrap();
        assert!(csv.starts_with("x1,x2,h\n"));
        assert_eq!(csv.lines().count(), 1 + 32 * 32);
    }
    assert_eq!(manifests(&tmp.path().join("p")), 1);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stepflow"))
        .current_dir(tmp.path())
        .args(["coeffs"])
        .env("STEPFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("STEPFLOW_THREADS"));
}
