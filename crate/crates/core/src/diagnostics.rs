//! Runtime checks of the conserved energy, the characteristic identities and
//! the a-priori bounds.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianState;
use crate::model::FluxModel;
use crate::nonlocal::{compute_p_px, kernel_sweeps, source_density, NonlocalFields};
use crate::oracle::{centred_derivative, eulerian_p_px, eulerian_source};
use crate::quadrature::trapezoid;
use crate::reconstruction::{stencil_residual, EulerianFrame};

/// `int (u^2 cos^2(w/2) + sin^2(w/2) + rho^2 cos^2(w/2)) v dZ`.
pub fn energy_lagrangian(state: &LagrangianState) -> f64 {
    let dens: Vec<f64> = (0..state.len())
        .map(|i| {
            let (s, c) = (0.5 * state.w[i]).sin_cos();
            let (s2, c2) = (s * s, c * c);
            let (u, r) = (state.u[i], state.rho[i]);
            (u * u * c2 + s2 + r * r * c2) * state.v[i]
        })
        .collect();
    trapezoid(&dens, state.dz())
}

/// `rho v cos^2(w/2)` per node.
pub fn rho_weight(state: &LagrangianState) -> Vec<f64> {
    (0..state.len())
        .map(|i| {
            let c = (0.5 * state.w[i]).cos();
            state.rho[i] * state.v[i] * c * c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakingSet {
    /// `count * dZ`.
    pub measure: f64,
    pub nodes: Vec<usize>,
}

/// Nodes with `cos^2(w/2) < eps`.
pub fn breaking_detector(state: &LagrangianState, eps: f64) -> BreakingSet {
    let nodes: Vec<usize> = (0..state.len())
        .filter(|&i| (0.5 * state.w[i]).cos().powi(2) < eps)
        .collect();
    BreakingSet { measure: nodes.len() as f64 * state.dz(), nodes }
}

/// `|D_Z u - v sin(w)/2|` over kink-free stencils.
pub fn residual_uz(state: &LagrangianState) -> f64 {
    stencil_residual(state, &state.u, |i| 0.5 * state.v[i] * state.w[i].sin())
}

/// `|D_Z x - v cos^2(w/2)|` over kink-free stencils.
pub fn residual_xz(state: &LagrangianState) -> f64 {
    stencil_residual(state, &state.x, |i| state.v[i] * (0.5 * state.w[i]).cos().powi(2))
}

/// `|D_Z P - v P_x cos^2(w/2)|` and `|D_Z P_x - (P v cos^2(w/2) - h)|` with
/// `h` the source density.
pub fn nonlocal_residuals(state: &LagrangianState, model: &FluxModel, fields: &NonlocalFields) -> (f64, f64) {
    let h = source_density(state, model);
    let c2 = |i: usize| (0.5 * state.w[i]).cos().powi(2);
    let rp = stencil_residual(state, &fields.p, |i| state.v[i] * fields.px[i] * c2(i));
    let rpx = stencil_residual(state, &fields.px, |i| fields.p[i] * state.v[i] * c2(i) - h[i]);
    (rp, rpx)
}

/// Directional derivative check of `P_x` and `d_Z P_x` with respect to `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetResidual {
    pub px: f64,
    pub pxz: f64,
}

/// Compares `(P_x(u + eps phi) - P_x(u)) / eps` against the linearised
/// operator: the kernel applied to `(g'(u) cos^2(w/2) + f'''(u)/2 sin^2(w/2))
/// v phi`. The same comparison is made for `d_Z P_x = P v cos^2(w/2) - h`.
pub fn frechet_check(state: &LagrangianState, model: &FluxModel, phi: &[f64], eps: f64) -> Result<FrechetResidual> {
    if phi.len() != state.len() {
        return Err(Error::Precondition("direction must have one entry per node".into()));
    }
    let base = compute_p_px(state, model)?;
    let mut pert = state.clone();
    for (u, p) in pert.u.iter_mut().zip(phi) {
        *u += eps * p;
    }
    let moved = compute_p_px(&pert, model)?;

    let n = state.len();
    let mut c2 = vec![0.0; n];
    let mut dh = vec![0.0; n];
    for i in 0..n {
        let (s, c) = (0.5 * state.w[i]).sin_cos();
        c2[i] = c * c;
        let u = state.u[i];
        dh[i] = (model.dg(u) * c * c + 0.5 * model.d3f(u) * s * s) * state.v[i] * phi[i];
    }
    let delta: Vec<f64> = base.xi.windows(2).map(|p| p[1] - p[0]).collect();
    let (dp, dpx) = kernel_sweeps(&delta, &dh, state.dz());

    let h0 = source_density(state, model);
    let h1 = source_density(&pert, model);
    let mut r = FrechetResidual { px: 0.0, pxz: 0.0 };
    for i in 0..n {
        let fd = (moved.px[i] - base.px[i]) / eps;
        r.px = r.px.max((fd - dpx[i]).abs());
        let q0 = base.p[i] * state.v[i] * c2[i] - h0[i];
        let q1 = moved.p[i] * state.v[i] * c2[i] - h1[i];
        let lin = dp[i] * state.v[i] * c2[i] - dh[i];
        r.pxz = r.pxz.max(((q1 - q0) / eps - lin).abs());
    }
    Ok(r)
}

/// Finite-difference residual of the local energy balance
/// `e_t + (f'(u) e)_x = (H(u) - 2 u P)_x` with `e = u^2 + u_x^2 + rho^2`,
/// on frames sampled at equally spaced times on one uniform `x` grid.
pub fn flux_balance_check(frames: &[EulerianFrame], model: &FluxModel) -> Result<f64> {
    if frames.len() < 3 {
        return Err(Error::Precondition("flux balance needs at least three frames".into()));
    }
    if let Some(f) = frames.iter().find(|f| !f.all_valid()) {
        return Err(Error::Precondition(format!("frame at t = {} contains breaking samples", f.t)));
    }
    let m = frames[0].len();
    if m < 3 || frames.iter().any(|f| f.len() != m || f.x != frames[0].x) {
        return Err(Error::Precondition("frames must share one x grid".into()));
    }
    let dx = frames[0].x[1] - frames[0].x[0];
    if frames[0].x.windows(2).any(|p| ((p[1] - p[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0)) {
        return Err(Error::Precondition("x grid must be uniform".into()));
    }
    let dt = frames[1].t - frames[0].t;
    if frames.windows(2).any(|p| ((p[1].t - p[0].t) - dt).abs() > 1e-9 * dt.abs().max(1e-300)) || dt <= 0.0 {
        return Err(Error::Precondition("frame times must be equally spaced".into()));
    }

    let density = |f: &EulerianFrame| -> Vec<f64> {
        (0..m).map(|i| f.u[i] * f.u[i] + f.ux[i] * f.ux[i] + f.rho[i] * f.rho[i]).collect()
    };
    let mut worst: f64 = 0.0;
    for n in 1..frames.len() - 1 {
        let f = &frames[n];
        let e_prev = density(&frames[n - 1]);
        let e_next = density(&frames[n + 1]);
        let e = density(f);
        let ux = centred_derivative(&f.u, dx);
        let (p, _) = eulerian_p_px(&eulerian_source(model, &f.u, &ux, &f.rho), dx);
        let flux: Vec<f64> = (0..m)
            .map(|i| model.df(f.u[i]) * e[i] - (model.eval_h(f.u[i]) - 2.0 * f.u[i] * p[i]))
            .collect();
        for i in 1..m - 1 {
            let et = (e_next[i] - e_prev[i]) / (2.0 * dt);
            let fx = (flux[i + 1] - flux[i - 1]) / (2.0 * dx);
            worst = worst.max((et + fx).abs());
        }
    }
    Ok(worst)
}

/// Reference quantities fixed at the initial time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsContext {
    pub e_bar: f64,
    pub w_inf0: f64,
    pub rho_weight0: Vec<f64>,
    pub track_rho_weight: bool,
    pub breaking_eps: f64,
    pub sup_u_slack: f64,
}

impl DiagnosticsContext {
    pub fn new(initial: &LagrangianState, model: &FluxModel) -> Self {
        DiagnosticsContext {
            e_bar: energy_lagrangian(initial),
            w_inf0: initial.w.iter().fold(0.0, |m, w| m.max(w.abs())),
            rho_weight0: rho_weight(initial),
            track_rho_weight: model.has_unit_curvature(),
            breaking_eps: 1e-6,
            sup_u_slack: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub t: f64,
    pub energy_lagrangian: f64,
    pub energy_drift_rel: f64,
    pub residual_uz: f64,
    pub residual_xz: f64,
    pub residual_pz: f64,
    pub residual_pxz: f64,
    pub sup_u_sq_ratio: f64,
    pub p_inf_ratio: f64,
    pub px_inf_ratio: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub breaking_measure: f64,
    pub rho_invariant_drift: f64,
    /// `(||w||_inf - ||w(0)||_inf)^+ / T`.
    pub w_growth_ratio: f64,
    /// `max |ln v| / (E T)`.
    pub v_log_ratio: f64,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str = "t,energy_lagrangian,energy_drift_rel,residual_uZ,residual_xZ,\
residual_PZ,residual_PxZ,sup_u_sq_ratio,P_inf_ratio,Px_inf_ratio,v_min,v_max,breaking_measure,\
rho_invariant_drift,w_growth_ratio,v_log_ratio";

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.energy_lagrangian,
            self.energy_drift_rel,
            self.residual_uz,
            self.residual_xz,
            self.residual_pz,
            self.residual_pxz,
            self.sup_u_sq_ratio,
            self.p_inf_ratio,
            self.px_inf_ratio,
            self.v_min,
            self.v_max,
            self.breaking_measure,
            self.rho_invariant_drift,
            self.w_growth_ratio,
            self.v_log_ratio,
        ]
    }

    /// One CSV row with 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        self.values().iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// Fills the report for `state` with precomputed `fields`; fails if
/// `sup u^2` exceeds the conserved energy or `v` is not positive.
pub fn bounds_report(
    state: &LagrangianState,
    model: &FluxModel,
    fields: &NonlocalFields,
    ctx: &DiagnosticsContext,
) -> Result<DiagnosticsReport> {
    let inf = |a: &[f64]| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let e = energy_lagrangian(state);
    let e_bar = ctx.e_bar;
    let sup_u2 = inf(&state.u).powi(2);
    let v_min = state.v.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = state.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(v_min > 0.0) {
        return Err(Error::Diagnostic(format!("positivity of v violated at t = {}: v_min = {v_min}", state.t)));
    }
    if sup_u2 > e_bar * (1.0 + ctx.sup_u_slack) + f64::MIN_POSITIVE {
        return Err(Error::Diagnostic(format!(
            "sup u^2 bound violated at t = {}: sup u^2 = {sup_u2}, energy = {e_bar}",
            state.t
        )));
    }
    let (residual_pz, residual_pxz) = nonlocal_residuals(state, model, fields);
    let rho_invariant_drift = if ctx.track_rho_weight {
        rho_weight(state)
            .iter()
            .zip(&ctx.rho_weight0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let t = state.t;
    let w_growth_ratio = if t > 0.0 { (inf(&state.w) - ctx.w_inf0).max(0.0) / t } else { 0.0 };
    let log_v = state.v.iter().fold(0.0f64, |m, v| m.max(v.ln().abs()));
    let v_log_ratio = if t > 0.0 { ratio(log_v, e_bar * t) } else { 0.0 };
    Ok(DiagnosticsReport {
        t,
        energy_lagrangian: e,
        energy_drift_rel: if e_bar > 0.0 { (e - e_bar).abs() / e_bar } else { e.abs() },
        residual_uz: residual_uz(state),
        residual_xz: residual_xz(state),
        residual_pz,
        residual_pxz,
        sup_u_sq_ratio: ratio(sup_u2, e_bar),
        p_inf_ratio: ratio(inf(&fields.p), e_bar),
        px_inf_ratio: ratio(inf(&fields.px), e_bar),
        v_min,
        v_max,
        breaking_measure: breaking_detector(state, ctx.breaking_eps).measure,
        rho_invariant_drift,
        w_growth_ratio,
        v_log_ratio,
    })
}

/// [`bounds_report`] with the nonlocal fields computed here.
pub fn diagnose(state: &LagrangianState, model: &FluxModel, ctx: &DiagnosticsContext) -> Result<DiagnosticsReport> {
    let fields = compute_p_px(state, model)?;
    bounds_report(state, model, &fields, ctx)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::evolution::{integrate, Numerics};
    use crate::lagrangian::{initialize, Gaussian, InitialData, InitialKind, LagrangianGrid, Peakon};
    use crate::model::Preset;
    use crate::reconstruction::{sample_frame, SampleOptions};

    fn ch0() -> FluxModel {
        FluxModel::make_preset(Preset::CamassaHolm, 0.0).unwrap()
    }

    fn rest(n: usize, lo: f64, hi: f64) -> LagrangianState {
        LagrangianState::rest(Arc::new(LagrangianGrid::uniform(lo, hi, n).unwrap()))
    }

    fn gaussian_state(n: usize, amp: f64, rho: f64) -> LagrangianState {
        let g = Gaussian { amplitude: amp, center: 0.0, width: 1.0, rho_amplitude: rho, rho_width: 1.0 };
        let d = InitialData::new(InitialKind::Gaussian, (-15.0, 15.0), Arc::new(g)).unwrap();
        initialize(&d, n).unwrap().0
    }

    #[test]
    fn zero_state_energy_and_breaking() {
        let s = rest(64, -3.0, 3.0);
        assert_eq!(energy_lagrangian(&s), 0.0);
        assert_eq!(breaking_detector(&s, 1e-6).measure, 0.0);
    }

    #[test]
    fn vertical_state_energy_is_window_length() {
        let mut s = rest(101, 0.0, 2.5);
        s.w.iter_mut().for_each(|w| *w = PI);
        assert!((energy_lagrangian(&s) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn breaking_measure_counts_nodes() {
        let mut s = rest(101, 0.0, 10.0);
        for i in [3, 4, 50] {
            s.w[i] = -PI;
        }
        let b = breaking_detector(&s, 1e-6);
        assert_eq!(b.nodes, vec![3, 4, 50]);
        assert!((b.measure - 0.3).abs() < 1e-14);
    }

    #[test]
    fn zero_state_report() {
        let s = rest(64, -3.0, 3.0);
        let ctx = DiagnosticsContext::new(&s, &ch0());
        let r = diagnose(&s, &ch0(), &ctx).unwrap();
        assert_eq!((r.v_min, r.v_max), (1.0, 1.0));
        assert_eq!(r.sup_u_sq_ratio, 0.0);
        assert_eq!(r.p_inf_ratio, 0.0);
        assert!(r.values().iter().all(|v| v.is_finite()));
        assert_eq!(r.csv_row().split(',').count(), DiagnosticsReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn peakon_report_at_start() {
        let p = Peakon { amplitude: 1.0, center: 0.0, rho_amplitude: 0.0, rho_width: 1.0 };
        let d = InitialData::new(InitialKind::Peakon, (-25.0, 25.0), Arc::new(p)).unwrap();
        let s = initialize(&d, 4096).unwrap().0;
        let ctx = DiagnosticsContext::new(&s, &ch0());
        assert!((ctx.e_bar - 2.0).abs() < 1e-5, "{}", ctx.e_bar);
        let r = diagnose(&s, &ch0(), &ctx).unwrap();
        assert!(r.sup_u_sq_ratio <= 0.5 && r.sup_u_sq_ratio > 0.49, "{}", r.sup_u_sq_ratio);
        assert!(r.residual_uz < 1e-3 && r.residual_xz < 1e-3, "{r:?}");
    }

    #[test]
    fn sup_bound_violation_is_reported() {
        let s = gaussian_state(256, 1.0, 0.0);
        let mut ctx = DiagnosticsContext::new(&s, &ch0());
        ctx.e_bar = 0.5;
        assert!(matches!(diagnose(&s, &ch0(), &ctx), Err(Error::Diagnostic(_))));
    }

    #[test]
    fn frechet_zero_state_is_exact() {
        let s = rest(128, -5.0, 5.0);
        let phi: Vec<f64> = s.grid.z_values().iter().map(|z| (-z * z).exp()).collect();
        // g'(0) = 0 and f''' = 0, so only the O(eps) Taylor remainder is left
        let r = frechet_check(&s, &ch0(), &phi, 1e-5).unwrap();
        assert!(r.px < 1e-4 && r.pxz < 1e-4, "{r:?}");
        let r8 = frechet_check(&s, &ch0(), &phi, 1e-8).unwrap();
        assert!(r8.px < 1e-7 && r8.pxz < 1e-7, "{r8:?}");
    }

    #[test]
    fn frechet_residual_is_first_order() {
        let s = gaussian_state(512, 1.0, 0.3);
        let phi: Vec<f64> = s.x.iter().map(|x| (-(x - 0.5) * (x - 0.5)).exp()).collect();
        for m in [ch0(), FluxModel::make_preset(Preset::ConstantinLannes, 0.0).unwrap()] {
            let a = frechet_check(&s, &m, &phi, 1e-4).unwrap();
            let b = frechet_check(&s, &m, &phi, 1e-5).unwrap();
            assert!(b.px < 1e-3 && b.pxz < 1e-3, "{b:?}");
            let ratio = a.px / b.px;
            assert!((5.0..=20.0).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn energy_drift_small_for_gaussian() {
        let s = gaussian_state(4096, 1.0, 0.3);
        let m = ch0();
        let ctx = DiagnosticsContext::new(&s, &m);
        let out = integrate(&s, &m, 1.0, 1e-3, &[1.0], &Numerics::default()).unwrap();
        let r = diagnose(&out[0], &m, &ctx).unwrap();
        assert!(r.energy_drift_rel < 1e-6, "{r:?}");
        assert!(r.rho_invariant_drift < 1e-8, "{r:?}");
        assert!(r.v_min > 0.0);
    }

    fn frames(n: usize, dt: f64, count: usize) -> Vec<EulerianFrame> {
        let s = gaussian_state(n, 0.5, 0.2);
        let times: Vec<f64> = (0..count).map(|i| i as f64 * dt).collect();
        let out = integrate(&s, &ch0(), times[count - 1], dt, &times, &Numerics::default()).unwrap();
        let xs: Vec<f64> = (0..=400).map(|i| -6.0 + 0.03 * i as f64).collect();
        out.iter().map(|st| sample_frame(st, &xs, &SampleOptions::default()).unwrap()).collect()
    }

    #[test]
    fn flux_balance_converges() {
        let coarse = flux_balance_check(&frames(1024, 0.02, 5), &ch0()).unwrap();
        let fine = flux_balance_check(&frames(4096, 0.01, 5), &ch0()).unwrap();
        assert!(fine < coarse && fine < 1e-2, "{coarse} {fine}");

        let mut bad = frames(1024, 0.02, 5);
        bad[2].u.iter_mut().for_each(|u| *u *= 1.1);
        let spiked = flux_balance_check(&bad, &ch0()).unwrap();
        assert!(spiked > 10.0 * coarse, "{spiked} {coarse}");
    }

    #[test]
    fn flux_balance_rejects_breaking_frames() {
        let mut f = frames(256, 0.02, 3);
        f[1].ux_valid[10] = false;
        assert!(matches!(flux_balance_check(&f, &ch0()), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_trajectory_balances() {
        let s = rest(64, -3.0, 3.0);
        let xs: Vec<f64> = (0..=20).map(|i| -2.0 + 0.2 * i as f64).collect();
        let f: Vec<EulerianFrame> = (0..3)
            .map(|k| {
                let mut st = s.clone();
                st.t = k as f64 * 0.1;
                sample_frame(&st, &xs, &SampleOptions::default()).unwrap()
            })
            .collect();
        assert_eq!(flux_balance_check(&f, &ch0()).unwrap(), 0.0);
    }
}
