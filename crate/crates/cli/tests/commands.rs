use std::fs;
use std::process::Command;

use camholm::diagnostics::{breaking_detector, DiagnosticsReport};
use camholm::evolution::integrate;
use camholm_cli::commands::{cmd_compare, cmd_convergence, cmd_run, cmd_verify, run_checks};
use camholm_cli::scenario::build_scenario;
use camholm_cli::RunConfig;

fn config(lines: &[&str]) -> RunConfig {
    let overrides: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    RunConfig::parse("", &overrides).unwrap()
}

#[test]
fn run_on_zero_data_writes_zero_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("outputs.directory = \"{}\"", dir.path().display());
    let cfg = config(&["initial.kind = zero", "grid.n = 256", "time.t_end = 0.2", "time.output_every = 0.1", "outputs.x_samples = 51", &out]);
    let summary = cmd_run(&cfg).unwrap();
    assert_eq!(summary.outputs, 3);
    assert_eq!(summary.e0, 0.0);

    for i in 0..3 {
        let text = fs::read_to_string(dir.path().join(format!("frame_{i}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u,ux,ux_valid,rho,rho_valid"));
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 51);
        for r in rows {
            assert_eq!((r[1], r[2], r[3], r[4], r[5]), (0.0, 0.0, 1.0, 0.0, 1.0));
        }
    }

    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(lines.next(), Some(DiagnosticsReport::CSV_HEADER));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == 0.0));

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "completed");
    assert!((meta["e0"].as_f64().unwrap() - rows[0][1]).abs() <= 1e-12);
}

#[test]
fn metadata_energy_matches_first_diagnostics_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("outputs.directory = \"{}\"", dir.path().display());
    let cfg = config(&["grid.n = 512", "time.t_end = 0.1", "time.dt = 1e-2", "outputs.write_frames = false", &out]);
    cmd_run(&cfg).unwrap();
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let first: f64 = diag.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert!((meta["e0"].as_f64().unwrap() - first).abs() <= 1e-12);
    assert!(!dir.path().join("frame_0.csv").exists());
}

#[test]
fn binary_rejects_too_few_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_camholm"))
        .args(["run", "--out"])
        .arg(dir.path())
        .args(["--override", "grid.n=8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N >= 16"));
}

#[test]
fn binary_rejects_unknown_keys() {
    let out = Command::new(env!("CARGO_BIN_EXE_camholm"))
        .args(["verify", "--override", "grid.nodes=64"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_lists_presets() {
    let out = Command::new(env!("CARGO_BIN_EXE_camholm")).arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["camassa_holm", "hyperelastic_rod", "constantin_lannes", "two_component_ch", "custom_polynomial"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn verify_passes_on_default_config() {
    let rep = cmd_verify(&RunConfig::default()).unwrap();
    assert!(rep.passed(), "{rep}");
}

#[test]
fn verify_flags_corrupted_state() {
    let cfg = config(&["grid.n = 1024", "time.t_end = 0.1", "time.dt = 1e-2"]);
    let s = build_scenario(&cfg).unwrap();
    let mut states = integrate(&s.state, &s.model, 0.1, 1e-2, &[0.0, 0.1], &cfg.numerics()).unwrap();
    let bad = states.last_mut().unwrap();
    bad.x[500] += 0.05;
    bad.u[300] += 0.05;
    let rep = run_checks(&s, &states).unwrap();
    assert!(!rep.passed());
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failed.iter().any(|n| n.contains("u_Z")), "{failed:?}");
    assert!(failed.iter().any(|n| n.contains("x_Z")), "{failed:?}");
}

#[test]
fn compare_on_zero_data_is_zero() {
    let cfg = config(&["initial.kind = zero", "grid.n = 256", "time.t_end = 0.2", "time.dt = 1e-2"]);
    let table = cmd_compare(&cfg).unwrap();
    assert!(table.oracle_message.is_none());
    assert_eq!(table.rows.len(), 3);
    for r in &table.rows {
        assert_eq!(r.max_diff_u, Some(0.0));
        assert_eq!(r.max_diff_rho, Some(0.0));
    }
}

#[test]
fn compare_past_breaking_reports_guard() {
    let cfg = config(&[
        "initial.kind = peakon_antipeakon",
        "initial.amplitude = 1",
        "initial.rho_amplitude = 0",
        "grid.x_min = -20",
        "grid.x_max = 20",
        "grid.n = 2048",
        "time.t_end = 2.5",
        "time.dt = 1e-3",
        "time.output_every = 0.5",
    ]);
    let table = cmd_compare(&cfg).unwrap();
    let msg = table.oracle_message.as_deref().expect("oracle stops before the collision");
    assert!(msg.contains("guard"), "{msg}");
    assert_eq!(table.rows.len(), 6);
    assert!(table.rows[0].max_diff_u.is_some());
    assert!(table.rows.last().unwrap().max_diff_u.is_none());
}

#[test]
fn convergence_on_zero_data_is_zero() {
    let cfg = config(&["initial.kind = zero", "grid.n = 64", "time.t_end = 0.1", "time.dt = 1e-2"]);
    let table = cmd_convergence(&cfg, 3).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(table.rows.iter().all(|r| r.error == 0.0));
}

#[test]
fn convergence_order_on_gaussian() {
    let cfg = config(&["grid.n = 512", "time.t_end = 0.5", "time.dt = 1e-2"]);
    let table = cmd_convergence(&cfg, 4).unwrap();
    let order = table.rows[0].order.expect("order of the coarsest level");
    assert!(order >= 1.0, "{table}");
}

/// `e^{-|x-1|} - e^{-|x+1|}` has the peakon on the right moving right and
/// the antipeakon on the left moving left, so nothing collides.
#[test]
fn separating_peakon_pair_never_breaks() {
    let cfg = config(&[
        "initial.kind = peakon_antipeakon",
        "initial.amplitude = -1",
        "initial.rho_amplitude = 0",
        "grid.x_min = -20",
        "grid.x_max = 20",
        "grid.n = 2048",
        "time.t_end = 3",
        "time.dt = 1e-3",
    ]);
    let s = build_scenario(&cfg).unwrap();
    assert!((s.initial.u(1.0) - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    let times: Vec<f64> = (0..=6).map(|i| 0.5 * i as f64).collect();
    let states = integrate(&s.state, &s.model, 3.0, 1e-3, &times, &cfg.numerics()).unwrap();
    let crest_gap = |st: &camholm::LagrangianState| {
        let imax = (0..st.len()).max_by(|&a, &b| st.u[a].total_cmp(&st.u[b])).unwrap();
        let imin = (0..st.len()).min_by(|&a, &b| st.u[a].total_cmp(&st.u[b])).unwrap();
        st.x[imax] - st.x[imin]
    };
    for st in &states {
        assert_eq!(breaking_detector(st, 1e-6).measure, 0.0, "t = {}", st.t);
    }
    assert!(crest_gap(&states[6]) > crest_gap(&states[0]) + 2.0);
}

#[test]
fn run_output_is_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = format!("outputs.directory = \"{}\"", d.path().display());
        cmd_run(&config(&["grid.n = 256", "time.t_end = 0.2", "time.dt = 1e-2", "outputs.x_samples = 101", &out])).unwrap();
    }
    for name in ["frame_0.csv", "frame_2.csv", "diagnostics.csv"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
