use std::path::Path;
use std::process::{Command, Output};

fn corrcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrcache"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{"files": 3, "users": 3, "cache": 0.5, "optimizer": {"resolution": 8}}"#;

#[test]
fn sweep_writes_csv_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("fig1.csv");
    let run = corrcache(&[
        "sweep",
        "--config",
        &config,
        "--mode",
        "fig1",
        "--grid-steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "sweep_var,value,p_ub,p_ub_closed,p_lb,p_baseline,pi_1,pi_2,pi_3,worst_demand,verified"
    );
    assert_eq!(lines.len(), 4);
    let values: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values, ["0", "0.5", "1"]);
    assert!(lines[1..].iter().all(|l| l.starts_with("alpha_3,") && l.ends_with(",pass")));
    // the closed-form gap goes to the per-row log
    assert!(String::from_utf8_lossy(&run.stderr).contains("closed_gap="));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let args = ["sweep", "--config", &config, "--mode", "fig2", "--grid-steps", "2"];
    let a = corrcache(&args);
    let b = corrcache(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 3);
}

#[test]
fn sweep_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = corrcache(&[
        "sweep", "--config", &config, "--mode", "memory", "--grid-steps", "2", "--json",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["sweep_var"], "M");
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert!(report["rows"][0]["closed_gap"].is_number());
    assert_eq!(report["gates"]["verified"], true);
}

#[test]
fn bound_reports_all_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"files": 3, "users": 3, "alpha": [0.5, 0, 0.5], "optimizer": {"resolution": 6}}"#,
    );
    let run = corrcache(&["bound", "--config", &config, "--variant", "as-printed"]);
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8(run.stdout).unwrap();
    for key in ["p_ub:", "p_ub_closed:", "closed_gap:", "p_lb:", "p_baseline:", "worst_demand:", "verified: pass"] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
}

#[test]
fn verify_with_fixed_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"files": 3, "users": 3, "alpha": [0.25, 0.5, 0.25], "cache": 0.4, "allocation": [0.3, 0.4, 0.3]}"#,
    );
    let run = corrcache(&["verify", "--config", &config, "--json"]);
    assert_eq!(run.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["report"]["demands"], 27);
    assert_eq!(report["report"]["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn optimize_prints_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = corrcache(&["optimize", "--config", &config, "--json"]);
    assert_eq!(run.status.code(), Some(0));
    let opt: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(opt["allocation"], serde_json::json!([1.0, 0.0, 0.0]));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_alpha = write_config(dir.path(), r#"{"files": 2, "users": 2, "alpha": [0.7, 0.7]}"#);
    assert_eq!(corrcache(&["bound", "--config", &bad_alpha]).status.code(), Some(2));
    let unknown = write_config(dir.path(), r#"{"fils": 2}"#);
    assert_eq!(corrcache(&["optimize", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(
        corrcache(&["sweep", "--mode", "fig1", "--grid-steps", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        corrcache(&["verify", "--config", "/nonexistent/config.json"]).status.code(),
        Some(2)
    );
    // the default 5^5 demand space exceeds this guard without a sampling seed
    let guarded = corrcache(&["optimize", "--max-demands", "100"]);
    assert_eq!(guarded.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&guarded.stderr).contains("exceeds the limit"));
}
