//! Semi-linear evolution in characteristic coordinates and its RK4 driver.
//!
//! ```text
//! u_T   = -P_x
//! rho_T = -(1/2 + f''(u)/2) rho tan(w/2)
//! w_T   = 2 (g(u) - P + rho^2/2) cos^2(w/2) - f''(u) sin^2(w/2)
//! v_T   = (g(u) - P + f''(u)/2 + rho^2/2) v sin w
//! x_T   = f'(u)
//! ```
//!
//! Every right side is 2*pi-periodic in `w`, so `w` is evolved unwrapped and
//! passes through `-pi` smoothly at wave breaking.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianState;
use crate::model::FluxModel;
use crate::nonlocal::{compute_p_px, NonlocalFields};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    /// Bound applied to `tan(w/2)` in the density equation.
    pub tan_max: f64,
    /// A step is split in half while some node with `rho != 0` has
    /// `|cos(w/2)|` below this threshold.
    pub substep_cos_threshold: f64,
    pub max_substep_depth: u32,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { tan_max: 1e8, substep_cos_threshold: 1e-4, max_substep_depth: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDerivative {
    pub du: Vec<f64>,
    pub drho: Vec<f64>,
    pub dw: Vec<f64>,
    pub dv: Vec<f64>,
    pub dx: Vec<f64>,
}

impl TimeDerivative {
    fn check(&self) -> Result<()> {
        for (field, a) in [
            ("du", &self.du),
            ("drho", &self.drho),
            ("dw", &self.dw),
            ("dv", &self.dv),
            ("dx", &self.dx),
        ] {
            if let Some(node) = a.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric { field, node });
            }
        }
        Ok(())
    }
}

/// Right side for precomputed nonlocal fields.
pub fn rhs_with_fields(
    state: &LagrangianState,
    model: &FluxModel,
    fields: &NonlocalFields,
    numerics: &Numerics,
) -> TimeDerivative {
    let n = state.len();
    let mut d = TimeDerivative {
        du: vec![0.0; n],
        drho: vec![0.0; n],
        dw: vec![0.0; n],
        dv: vec![0.0; n],
        dx: vec![0.0; n],
    };
    for i in 0..n {
        let u = state.u[i];
        let r = state.rho[i];
        let v = state.v[i];
        let (sh, ch) = (0.5 * state.w[i]).sin_cos();
        let (s2, c2) = (sh * sh, ch * ch);
        let sin_w = 2.0 * sh * ch;
        let g = model.g(u);
        let fpp = model.d2f(u);
        let p = fields.p[i];
        let half_r2 = 0.5 * r * r;
        let tan_half = (sh / ch).clamp(-numerics.tan_max, numerics.tan_max);

        d.du[i] = -fields.px[i];
        d.drho[i] = if r == 0.0 { 0.0 } else { -(0.5 + 0.5 * fpp) * r * tan_half };
        d.dw[i] = 2.0 * (g - p + half_r2) * c2 - fpp * s2;
        d.dv[i] = (g - p + 0.5 * fpp + half_r2) * v * sin_w;
        d.dx[i] = model.df(u);
    }
    d
}

pub fn rhs(state: &LagrangianState, model: &FluxModel, numerics: &Numerics) -> Result<TimeDerivative> {
    let fields = compute_p_px(state, model)?;
    let d = rhs_with_fields(state, model, &fields, numerics);
    d.check()?;
    Ok(d)
}

fn advance(base: &LagrangianState, k: &TimeDerivative, h: f64) -> LagrangianState {
    let axpy = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a + h * b).collect();
    LagrangianState {
        t: base.t + h,
        grid: base.grid.clone(),
        u: axpy(&base.u, &k.du),
        rho: axpy(&base.rho, &k.drho),
        w: axpy(&base.w, &k.dw),
        v: axpy(&base.v, &k.dv),
        x: axpy(&base.x, &k.dx),
    }
}

fn needs_substep(state: &LagrangianState, numerics: &Numerics) -> bool {
    state
        .w
        .iter()
        .zip(&state.rho)
        .any(|(&w, &r)| r != 0.0 && (0.5 * w).cos().abs() < numerics.substep_cos_threshold)
}

fn rk4_single(state: &LagrangianState, model: &FluxModel, dt: f64, numerics: &Numerics) -> Result<LagrangianState> {
    let k1 = rhs(state, model, numerics)?;
    let k2 = rhs(&advance(state, &k1, 0.5 * dt), model, numerics)?;
    let k3 = rhs(&advance(state, &k2, 0.5 * dt), model, numerics)?;
    let k4 = rhs(&advance(state, &k3, dt), model, numerics)?;
    let comb = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    Ok(LagrangianState {
        t: state.t + dt,
        grid: state.grid.clone(),
        u: comb(&state.u, &k1.du, &k2.du, &k3.du, &k4.du),
        rho: comb(&state.rho, &k1.drho, &k2.drho, &k3.drho, &k4.drho),
        w: comb(&state.w, &k1.dw, &k2.dw, &k3.dw, &k4.dw),
        v: comb(&state.v, &k1.dv, &k2.dv, &k3.dv, &k4.dv),
        x: comb(&state.x, &k1.dx, &k2.dx, &k3.dx, &k4.dx),
    })
}

fn step_depth(
    state: &LagrangianState,
    model: &FluxModel,
    dt: f64,
    numerics: &Numerics,
    depth: u32,
) -> Result<LagrangianState> {
    if depth < numerics.max_substep_depth && needs_substep(state, numerics) {
        let mid = step_depth(state, model, 0.5 * dt, numerics, depth + 1)?;
        return step_depth(&mid, model, 0.5 * dt, numerics, depth + 1);
    }
    rk4_single(state, model, dt, numerics)
}

/// One classical RK4 step of size `dt` (split adaptively near breaking
/// points that carry density).
pub fn step_rk4(state: &LagrangianState, model: &FluxModel, dt: f64, numerics: &Numerics) -> Result<LagrangianState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let next = step_depth(state, model, dt, numerics, 0)?;
    for (field, a) in next.fields() {
        if let Some(node) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric { field, node });
        }
    }
    if let Some(i) = next.v.iter().position(|&v| v <= 0.0) {
        return Err(Error::Integration {
            t: next.t,
            reason: format!("v = {:.3e} <= 0 at node {i}; reduce dt (currently {dt})", next.v[i]),
        });
    }
    Ok(next)
}

/// Integrates to `t_end`, landing exactly on each of `output_times`
/// (relative to the initial time) and calling `on_output` there.
pub fn integrate_with<F>(
    state: &LagrangianState,
    model: &FluxModel,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
    numerics: &Numerics,
    mut on_output: F,
) -> Result<()>
where
    F: FnMut(&LagrangianState) -> Result<()>,
{
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if t_end == 0.0 {
        return on_output(state);
    }
    if !(dt > 0.0 && dt <= t_end) {
        return Err(Error::Config(format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")));
    }
    if output_times.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Config("output times must be sorted".into()));
    }
    if output_times.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::Config(format!("output times must lie in [0, {t_end}]")));
    }
    let t0 = state.t;
    let mut cur = state.clone();
    for &target in output_times {
        loop {
            let remaining = target - (cur.t - t0);
            if remaining <= 1e-9 * dt {
                break;
            }
            let h = remaining.min(dt);
            cur = step_rk4(&cur, model, h, numerics)?;
            if h == remaining {
                cur.t = t0 + target;
            }
        }
        cur.t = t0 + target;
        on_output(&cur)?;
    }
    Ok(())
}

/// Collecting variant of [`integrate_with`].
pub fn integrate(
    state: &LagrangianState,
    model: &FluxModel,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
    numerics: &Numerics,
) -> Result<Vec<LagrangianState>> {
    let mut out = Vec::with_capacity(output_times.len());
    integrate_with(state, model, t_end, dt, output_times, numerics, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// `0, every, 2 every, ...` up to and including `t_end`.
pub fn output_schedule(t_end: f64, every: f64) -> Vec<f64> {
    if t_end <= 0.0 || every <= 0.0 {
        return vec![0.0];
    }
    let m = (t_end / every - 1e-9).ceil() as usize;
    let mut out: Vec<f64> = (0..m).map(|i| i as f64 * every).collect();
    out.push(t_end);
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::lagrangian::{initialize, Gaussian, InitialData, InitialKind, LagrangianGrid};
    use crate::model::Preset;

    fn ch0() -> FluxModel {
        FluxModel::make_preset(Preset::CamassaHolm, 0.0).unwrap()
    }

    fn gaussian_state(n: usize) -> LagrangianState {
        let g = Gaussian { amplitude: 1.0, center: 0.0, width: 1.0, rho_amplitude: 0.3, rho_width: 1.0 };
        let d = InitialData::new(InitialKind::Gaussian, (-15.0, 15.0), Arc::new(g)).unwrap();
        initialize(&d, n).unwrap().0
    }

    #[test]
    fn rest_state_is_stationary() {
        let s = LagrangianState::rest(Arc::new(LagrangianGrid::uniform(-5.0, 5.0, 64).unwrap()));
        let d = rhs(&s, &ch0(), &Numerics::default()).unwrap();
        assert!(d.du.iter().chain(&d.drho).chain(&d.dw).chain(&d.dv).chain(&d.dx).all(|&v| v == 0.0));
        let next = step_rk4(&s, &ch0(), 0.1, &Numerics::default()).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.w, s.w);
        assert!((next.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn vertical_tangent_node_turns_at_unit_rate() {
        let mut s = LagrangianState::rest(Arc::new(LagrangianGrid::uniform(-5.0, 5.0, 64).unwrap()));
        s.w[20] = PI;
        let d = rhs(&s, &ch0(), &Numerics::default()).unwrap();
        assert!((d.dw[20] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rhs_is_invariant_under_full_turns() {
        let s = gaussian_state(256);
        let mut t = s.clone();
        t.w.iter_mut().for_each(|w| *w += 2.0 * PI);
        let m = FluxModel::make_preset(Preset::ConstantinLannes, 0.0).unwrap();
        let a = rhs(&s, &m, &Numerics::default()).unwrap();
        let b = rhs(&t, &m, &Numerics::default()).unwrap();
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        assert!(close(&a.du, &b.du) && close(&a.drho, &b.drho));
        assert!(close(&a.dw, &b.dw) && close(&a.dv, &b.dv));
    }

    #[test]
    fn fourth_order_in_time() {
        let s = gaussian_state(256);
        let m = ch0();
        let num = Numerics::default();
        let run = |dt: f64, steps: usize| {
            let mut c = s.clone();
            for _ in 0..steps {
                c = step_rk4(&c, &m, dt, &num).unwrap();
            }
            c
        };
        let reference = run(0.0125, 16);
        let err = |c: &LagrangianState| {
            c.u.iter().zip(&reference.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let coarse = err(&run(0.2, 1));
        let fine = err(&run(0.1, 2));
        let ratio = coarse / fine;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn integrate_lands_on_output_times() {
        let s = gaussian_state(128);
        let out = integrate(&s, &ch0(), 0.35, 0.1, &[0.0, 0.15, 0.35], &Numerics::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].t, 0.0);
        assert_eq!(out[1].t, 0.15);
        assert_eq!(out[2].t, 0.35);
        let only = integrate(&s, &ch0(), 0.0, 0.1, &[0.0], &Numerics::default()).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only[0], s);
    }

    #[test]
    fn integrate_rejects_bad_requests() {
        let s = gaussian_state(64);
        let num = Numerics::default();
        assert!(integrate(&s, &ch0(), 1.0, 0.0, &[1.0], &num).is_err());
        assert!(integrate(&s, &ch0(), 1.0, 0.1, &[0.5, 0.2], &num).is_err());
        assert!(integrate(&s, &ch0(), 1.0, 0.1, &[2.0], &num).is_err());
    }

    #[test]
    fn schedule_includes_end() {
        assert_eq!(output_schedule(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(output_schedule(0.3, 0.25), vec![0.0, 0.25, 0.3]);
        assert_eq!(output_schedule(0.0, 0.25), vec![0.0]);
    }

    #[test]
    fn density_weight_is_conserved_per_node() {
        let s = gaussian_state(512);
        let inv = |c: &LagrangianState| -> Vec<f64> {
            (0..c.len()).map(|i| c.rho[i] * c.v[i] * (0.5 * c.w[i]).cos().powi(2)).collect()
        };
        let i0 = inv(&s);
        let out = integrate(&s, &ch0(), 0.5, 0.01, &[0.5], &Numerics::default()).unwrap();
        let drift = inv(&out[0]).iter().zip(&i0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "{drift}");
    }
}
