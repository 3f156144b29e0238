use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn efl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efl")).args(args).env("EFL_LOG", "off").output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    efl(&args)
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn helix_validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&scenario("helix_validate.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["status"], "ok");
    let suites = r["validation"].as_array().unwrap();
    assert!(suites.iter().any(|s| s["suite"] == "frame_identity_residuals"));
    assert!(suites.iter().all(|s| s["pass"] == true));
    assert_eq!(r["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn residual_table_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("helix_validate.toml"), dir.path(), &["--mode", "diagnose"]).status.code(), Some(0));
    let residuals = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert!(residuals.starts_with("s,z,t,kappa,torsion,ds_kappa,speed,Dt_speed,res_r,res_b,degenerate,"));
    let disturbance = std::fs::read_to_string(dir.path().join("disturbance.csv")).unwrap();
    assert!(disturbance.starts_with("r0_tilde,z,t,L0,Lx,Lt\n"));
}

#[test]
fn straight_tube_with_sinusoid_has_no_time_rate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("straight_tube_sinusoid.toml"), dir.path(), &[]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("disturbance.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[5] <= 1e-9 && (r[3] - 2.0).abs() <= 1e-9));
}

#[test]
fn crossing_the_stagnation_plane_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&scenario("stagnation_swirl_bad_span.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(dir.path());
    assert_eq!(r["error"]["kind"], "NotUnilateral");
    assert!(r["error"]["message"].as_str().unwrap().contains("z=-1"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[field]\nfixture = \"Nope\"\n").unwrap();
    assert_eq!(run(&bad, &dir.path().join("o1"), &[]).status.code(), Some(1));

    let text = std::fs::read_to_string(scenario("poiseuille.toml")).unwrap().replace("nu = 1.0", "nu = -1.0");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(run(&bad, &dir.path().join("o2"), &[]).status.code(), Some(1));
    assert_eq!(report(&dir.path().join("o2"))["error"]["kind"], "ConfigError");

    assert_eq!(run(&dir.path().join("missing.toml"), &dir.path().join("o3"), &[]).status.code(), Some(1));
    assert_eq!(efl(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(efl(&["--version"]).status.code(), Some(0));
}

#[test]
fn jsonl_format_and_seed_lattice_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&scenario("poiseuille.toml"), dir.path(), &["--format", "jsonl", "--seed-lattice", "3x2", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(dir.path())["seeds"].as_array().unwrap().len(), 6);
    let line = std::fs::read_to_string(dir.path().join("trajectories.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(first.get("theta").is_some());
    assert!(!dir.path().join("trajectories.csv").exists());
}

#[test]
fn indicators_are_tagged_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("pulsatile_inflow.toml"), dir.path(), &[]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("indicators.jsonl")).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    for k in ["breakdown", "blowup", "momentum_flux", "pulsatile"] {
        assert!(kinds.iter().any(|x| x == k), "{k} missing");
    }
}

#[test]
fn catalogue_commands() {
    let out = efl(&["list-fixtures"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 7);
    let out = efl(&["describe", "Womersley"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("= 2\n"));
    assert_eq!(efl(&["describe", "Nope"]).status.code(), Some(1));
    let out = efl(&["describe", "Poiseuille", "--config", scenario("poiseuille.toml").to_str().unwrap()]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("exact Euler: false"));
}
