//! Subcommand implementations. Each returns a value that `main` prints; `run`
//! also writes files.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use camholm::diagnostics::{diagnose, frechet_check, residual_uz, residual_xz, DiagnosticsContext, DiagnosticsReport};
use camholm::evolution::{integrate, integrate_with, output_schedule};
use camholm::nonlocal::{compute_p_px, compute_p_px_direct};
use camholm::oracle::{oracle_integrate, EulerianState};
use camholm::reconstruction::{sample_frame, sample_u, EulerianFrame};
use camholm::{LagrangianState, Preset};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::scenario::{build_scenario, Scenario};

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_frame(path: &Path, frame: &EulerianFrame) -> CliResult<()> {
    let io = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "x,u,ux,ux_valid,rho,rho_valid").map_err(io)?;
    for i in 0..frame.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt17(frame.x[i]),
            fmt17(frame.u[i]),
            fmt17(frame.ux[i]),
            u8::from(frame.ux_valid[i]),
            fmt17(frame.rho[i]),
            u8::from(frame.rho_valid[i])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn diagnostics_context(s: &Scenario) -> DiagnosticsContext {
    let mut ctx = DiagnosticsContext::new(&s.state, &s.model);
    ctx.breaking_eps = s.config.numerics.breaking_eps;
    ctx
}

fn output_times(config: &RunConfig) -> Vec<f64> {
    output_schedule(config.time.t_end, config.time.output_every)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outputs: usize,
    pub e0: f64,
    pub last: Option<DiagnosticsReport>,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wrote {} output times to {}", self.outputs, self.out_dir.display())?;
        write!(f, "E(0) = {:.12}", self.e0)?;
        if let Some(r) = &self.last {
            write!(
                f,
                "\nfinal t = {}: energy drift {:.3e}, residual u_Z {:.3e}, residual x_Z {:.3e}, v in [{:.4}, {:.4}]",
                r.t, r.energy_drift_rel, r.residual_uz, r.residual_xz, r.v_min, r.v_max
            )?;
        }
        Ok(())
    }
}

fn write_metadata(path: &Path, s: &Scenario, e0: f64, times: &[f64], status: &str) -> CliResult<()> {
    let (za, zb) = (s.state.grid.z_min(), s.state.grid.z_max());
    let meta = json!({
        "config": s.config,
        "e0": e0,
        "e0_eulerian_quadrature": s.e0_quadrature,
        "model": { "f": s.model.tables().f.to_string(), "g": s.model.tables().g.to_string() },
        "padding": s.padding,
        "computational_window": [s.initial.window.0, s.initial.window.1],
        "z_window": [za, zb],
        "nodes": s.state.len(),
        "dz": s.state.dz(),
        "output_times": times,
        "status": status,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Integrates the configured scenario, writing `frame_<i>.csv`,
/// `diagnostics.csv` and `metadata.json` into the output directory. Files
/// written before a failure are kept.
pub fn cmd_run(config: &RunConfig) -> CliResult<RunSummary> {
    let s = build_scenario(config)?;
    let dir = config.outputs.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let ctx = diagnostics_context(&s);
    let times = output_times(config);
    let meta_path = dir.join("metadata.json");
    write_metadata(&meta_path, &s, ctx.e_bar, &times, "running")?;

    let diag_path = dir.join("diagnostics.csv");
    let mut diag = if config.outputs.write_diagnostics {
        let mut w = BufWriter::new(File::create(&diag_path).map_err(|e| CliError::io(&diag_path, e))?);
        writeln!(w, "{}", DiagnosticsReport::CSV_HEADER).map_err(|e| CliError::io(&diag_path, e))?;
        Some(w)
    } else {
        None
    };

    let mut index = 0usize;
    let mut last = None;
    let mut io_error: Option<CliError> = None;
    let result = integrate_with(&s.state, &s.model, config.time.t_end, config.time.dt, &times, &config.numerics(), |st| {
        let report = diagnose(st, &s.model, &ctx)?;
        if let Some(w) = diag.as_mut() {
            let r = writeln!(w, "{}", report.csv_row()).and_then(|_| w.flush());
            if let Err(e) = r {
                io_error = Some(CliError::io(&diag_path, e));
                return Err(camholm::Error::Precondition("cannot write diagnostics".into()));
            }
        }
        if config.outputs.write_frames {
            let xs = s.sample_grid(st, config.outputs.x_samples);
            let frame = sample_frame(st, &xs, &config.sample_options())?;
            let path = dir.join(format!("frame_{index}.csv"));
            if let Err(e) = write_frame(&path, &frame) {
                io_error = Some(e);
                return Err(camholm::Error::Precondition("cannot write frame".into()));
            }
        }
        last = Some(report);
        index += 1;
        Ok(())
    });
    if let Err(e) = result {
        let err = io_error.unwrap_or(CliError::Core(e));
        write_metadata(&meta_path, &s, ctx.e_bar, &times, &format!("failed: {err}"))?;
        return Err(err);
    }
    write_metadata(&meta_path, &s, ctx.e_bar, &times, "completed")?;
    Ok(RunSummary { out_dir: dir, outputs: index, e0: ctx.e_bar, last })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, value: f64, limit: String, passed: bool) {
        self.checks.push(CheckResult { name: name.to_string(), value, limit, passed });
    }

    fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.push(name, value, format!("<= {limit:.1e}"), value <= limit);
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<40} {:>12.4e}  ({})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            )?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "some checks failed" })
    }
}

/// Invariant suite over a trajectory of `scenario` (first state at `T = 0`).
pub fn run_checks(s: &Scenario, states: &[LagrangianState]) -> CliResult<VerifyReport> {
    let mut rep = VerifyReport::default();
    let ctx = diagnostics_context(s);
    let first = &states[0];
    let last = &states[states.len() - 1];

    for (label, st) in [("nonlocal fast vs direct (first)", first), ("nonlocal fast vs direct (last)", last)] {
        let fast = compute_p_px(st, &s.model)?;
        let direct = compute_p_px_direct(st, &s.model)?;
        let scale = 1.0 + fast.p.iter().chain(&fast.px).fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = fast
            .p
            .iter()
            .zip(&direct.p)
            .chain(fast.px.iter().zip(&direct.px))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rep.at_most(label, diff / scale, 1e-10);
    }

    let (mut ruz, mut rxz, mut drift, mut rho_drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut v_min = f64::INFINITY;
    let mut bound_error = None;
    for st in states {
        ruz = ruz.max(residual_uz(st));
        rxz = rxz.max(residual_xz(st));
        v_min = st.v.iter().copied().fold(v_min, f64::min);
        match diagnose(st, &s.model, &ctx) {
            Ok(r) => {
                drift = drift.max(r.energy_drift_rel);
                rho_drift = rho_drift.max(r.rho_invariant_drift);
            }
            Err(e) => bound_error = Some(e.to_string()),
        }
    }
    rep.at_most("residual u_Z - v sin(w)/2", ruz, 1e-3);
    rep.at_most("residual x_Z - v cos^2(w/2)", rxz, 1e-3);
    rep.at_most("relative energy drift", drift, 1e-4);
    rep.push("min v", v_min, "> 0".into(), v_min > 0.0);
    let bound_ok = bound_error.is_none();
    rep.push("sup u^2 <= E(0) (1 + 1e-6)", f64::from(u8::from(!bound_ok)), bound_error.unwrap_or_else(|| "holds".into()), bound_ok);
    if s.model.has_unit_curvature() {
        rep.at_most("rho v cos^2(w/2) drift", rho_drift, 1e-6);
    }

    let c = s.config.initial.center;
    let phi: Vec<f64> = first.x.iter().map(|x| (-(x - c) * (x - c)).exp()).collect();
    let f4 = frechet_check(first, &s.model, &phi, 1e-4)?;
    let f5 = frechet_check(first, &s.model, &phi, 1e-5)?;
    rep.at_most("Frechet residual P_x (eps = 1e-5)", f5.px, 1e-3);
    rep.at_most("Frechet residual d_Z P_x (eps = 1e-5)", f5.pxz, 1e-3);
    if f5.px > 1e-12 {
        let ratio = f4.px / f5.px;
        rep.push("Frechet ratio eps 1e-4 / 1e-5", ratio, "in [5, 20]".into(), (5.0..=20.0).contains(&ratio));
    }
    Ok(rep)
}

/// Integrates the configured scenario and runs [`run_checks`]; adds a
/// refinement check comparing the initial `x_Z` residual at `N/2` and `N`.
pub fn cmd_verify(config: &RunConfig) -> CliResult<VerifyReport> {
    let s = build_scenario(config)?;
    let times = output_times(config);
    let states = integrate(&s.state, &s.model, config.time.t_end, config.time.dt, &times, &config.numerics())?;
    let mut rep = run_checks(&s, &states)?;

    let mut half = config.clone();
    half.grid.n = (config.grid.n / 2).max(camholm::lagrangian::MIN_NODES);
    let coarse = build_scenario(&half)?;
    let (r_full, r_half) = (residual_xz(&s.state), residual_xz(&coarse.state));
    if r_full > 1e-11 {
        let ratio = r_half / r_full;
        rep.push("x_Z residual ratio N/2 vs N", ratio, ">= 3 (second order)".into(), ratio >= 3.0);
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub max_diff_u: Option<f64>,
    pub max_diff_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    /// Why the oracle stopped early, if it did.
    pub oracle_message: Option<String>,
}

impl CompareTable {
    pub fn max_diff_u(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.max_diff_u).fold(0.0, f64::max)
    }
}

impl fmt::Display for CompareTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} {:>14} {:>14}", "t", "max|du|", "max|drho|")?;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
        for r in &self.rows {
            writeln!(f, "{:>12.6} {:>14} {:>14}", r.t, show(r.max_diff_u), show(r.max_diff_rho))?;
        }
        if let Some(m) = &self.oracle_message {
            write!(f, "oracle: {m}")?;
        }
        Ok(())
    }
}

/// Lagrangian pipeline against the Eulerian oracle on the configured
/// scenario. The oracle uses `grid.n` points on the computational window;
/// differences are taken at oracle nodes inside the data window.
pub fn cmd_compare(config: &RunConfig) -> CliResult<CompareTable> {
    let s = build_scenario(config)?;
    let times = output_times(config);
    let (t_end, dt) = (config.time.t_end, config.time.dt);
    let lag = integrate(&s.state, &s.model, t_end, dt, &times, &config.numerics())?;

    let (a, b) = s.initial.window;
    let init = &s.initial;
    let mut eul = EulerianState::sample(a, b, config.grid.n, |x| init.u(x), |x| init.rho(x))?;
    let idx: Vec<usize> = (0..eul.len())
        .filter(|&i| (s.data_window.0..=s.data_window.1).contains(&eul.x(i)))
        .collect();
    let xs: Vec<f64> = idx.iter().map(|&i| eul.x(i)).collect();

    let mut rows = Vec::with_capacity(times.len());
    let mut oracle_message = None;
    let mut prev_t = 0.0;
    for (k, &t) in times.iter().enumerate() {
        if oracle_message.is_none() && t > prev_t {
            let seg = t - prev_t;
            match oracle_integrate(&eul, &s.model, seg, dt.min(seg), &[seg], config.numerics.oracle_slope_guard) {
                Ok(mut out) => eul = out.pop().expect("one output"),
                Err(e @ camholm::Error::PreBreakingLimit { .. }) => oracle_message = Some(e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        prev_t = t;
        let (du, drho) = if oracle_message.is_none() {
            let frame = sample_frame(&lag[k], &xs, &config.sample_options())?;
            let du = idx.iter().enumerate().map(|(j, &i)| (frame.u[j] - eul.u[i]).abs()).fold(0.0, f64::max);
            let drho = idx
                .iter()
                .enumerate()
                .filter(|(j, _)| frame.rho_valid[*j])
                .map(|(j, &i)| (frame.rho[j] - eul.rho[i]).abs())
                .fold(0.0, f64::max);
            (Some(du), Some(drho))
        } else {
            (None, None)
        };
        rows.push(CompareRow { t, max_diff_u: du, max_diff_rho: drho });
    }
    Ok(CompareTable { rows, oracle_message })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dt: f64,
    /// Max-norm difference of `u(t_end)` against the finest level.
    pub error: f64,
    /// `log2(error / error of the next level)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>12} {:>14} {:>8}", "N", "dt", "error", "order")?;
        for r in &self.rows {
            let order = r.order.map_or("-".to_string(), |o| format!("{o:.3}"));
            writeln!(f, "{:>8} {:>12.4e} {:>14.6e} {:>8}", r.n, r.dt, r.error, order)?;
        }
        Ok(())
    }
}

/// Reruns the scenario at `N 2^k`, `dt / 2^k` for `k < levels` (in
/// parallel) and compares `u(t_end)` with the finest level.
pub fn cmd_convergence(config: &RunConfig, levels: usize) -> CliResult<ConvergenceTable> {
    if levels < 2 {
        return Err(CliError::Config("convergence needs at least two levels".into()));
    }
    let configs: Vec<RunConfig> = (0..levels)
        .map(|k| {
            let mut c = config.clone();
            c.grid.n = config.grid.n << k;
            c.time.dt = config.time.dt / (1u64 << k) as f64;
            c
        })
        .collect();
    let (lo, hi) = (config.grid.x_min, config.grid.x_max);
    let m = config.outputs.x_samples;
    let xs: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let t_end = config.time.t_end;

    let results: Vec<CliResult<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let xs = &xs;
                scope.spawn(move || -> CliResult<Vec<f64>> {
                    let s = build_scenario(c)?;
                    let out = integrate(&s.state, &s.model, t_end, c.time.dt, &[t_end], &c.numerics())?;
                    Ok(sample_u(out.last().expect("one output"), xs, &c.sample_options())?)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("convergence worker panicked")).collect()
    });
    let profiles: Vec<Vec<f64>> = results.into_iter().collect::<CliResult<_>>()?;
    let finest = &profiles[levels - 1];
    let errors: Vec<f64> = profiles
        .iter()
        .map(|p| p.iter().zip(finest).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let rows = (0..levels)
        .map(|k| ConvergenceRow {
            n: configs[k].grid.n,
            dt: configs[k].time.dt,
            error: errors[k],
            order: if k + 2 < levels && errors[k + 1] > 0.0 && errors[k] > 0.0 {
                Some((errors[k] / errors[k + 1]).log2())
            } else {
                None
            },
        })
        .collect();
    Ok(ConvergenceTable { rows })
}

pub fn presets() -> String {
    Preset::ALL
        .iter()
        .map(|p| format!("{:<18} {}", p.name(), p.description()))
        .collect::<Vec<_>>()
        .join("\n")
}
