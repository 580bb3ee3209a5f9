//! Eulerian method-of-lines solver for the nonlocal form
//!
//! ```text
//! u_t + f'(u) u_x + P_x = 0
//! rho_t + f'(u) rho_x + (1/2 + f''(u)/2) rho u_x = 0
//! P = 1/2 e^{-|x|} * (g(u) + f''(u)/2 u_x^2 + rho^2/2)
//! ```
//!
//! Centred differences in space, RK4 in time. Only meaningful before wave
//! breaking; the integrator stops once `max |u_x|` exceeds a guard.

use crate::error::{Error, Result};
use crate::model::FluxModel;
use crate::nonlocal::{kernel_direct, kernel_sweeps};

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianState {
    pub t: f64,
    pub x0: f64,
    pub dx: f64,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
}

impl EulerianState {
    /// Samples `u` and `rho` on `n` points spanning `[x_min, x_max]`.
    pub fn sample(
        x_min: f64,
        x_max: f64,
        n: usize,
        u: impl Fn(f64) -> f64,
        rho: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if n < 3 || !(x_max > x_min) {
            return Err(Error::Config(format!("oracle grid needs n >= 3 and x_max > x_min, got n = {n}")));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        let xs = (0..n).map(|i| x_min + i as f64 * dx);
        Ok(EulerianState {
            t: 0.0,
            x0: x_min,
            dx,
            u: xs.clone().map(&u).collect(),
            rho: xs.map(&rho).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }
}

/// Centred difference with zero values beyond the ends.
pub fn centred_derivative(a: &[f64], dx: f64) -> Vec<f64> {
    let n = a.len();
    let at = |i: isize| if i < 0 || i >= n as isize { 0.0 } else { a[i as usize] };
    (0..n as isize).map(|i| (at(i + 1) - at(i - 1)) / (2.0 * dx)).collect()
}

/// `g(u) + f''(u)/2 u_x^2 + rho^2/2`.
pub fn eulerian_source(model: &FluxModel, u: &[f64], ux: &[f64], rho: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| model.g(u[i]) + 0.5 * model.d2f(u[i]) * ux[i] * ux[i] + 0.5 * rho[i] * rho[i])
        .collect()
}

/// `(P, P_x)` on a uniform grid by the two-pass exponential recurrence.
pub fn eulerian_p_px(source: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let delta = vec![dx; source.len().saturating_sub(1)];
    kernel_sweeps(&delta, source, dx)
}

/// Same cell integrals as [`eulerian_p_px`], summed directly in O(N^2).
pub fn eulerian_p_px_direct(source: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..source.len()).map(|i| i as f64 * dx).collect();
    kernel_direct(&xs, source, dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianDerivative {
    pub du: Vec<f64>,
    pub drho: Vec<f64>,
}

pub fn oracle_rhs(state: &EulerianState, model: &FluxModel) -> Result<EulerianDerivative> {
    let ux = centred_derivative(&state.u, state.dx);
    let rx = centred_derivative(&state.rho, state.dx);
    let h = eulerian_source(model, &state.u, &ux, &state.rho);
    let (_, px) = eulerian_p_px(&h, state.dx);
    let n = state.len();
    let mut d = EulerianDerivative { du: vec![0.0; n], drho: vec![0.0; n] };
    for i in 0..n {
        let u = state.u[i];
        let speed = model.df(u);
        d.du[i] = -speed * ux[i] - px[i];
        d.drho[i] = -speed * rx[i] - (0.5 + 0.5 * model.d2f(u)) * state.rho[i] * ux[i];
    }
    for (field, a) in [("du", &d.du), ("drho", &d.drho)] {
        if let Some(node) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric { field, node });
        }
    }
    Ok(d)
}

fn shifted(s: &EulerianState, d: &EulerianDerivative, h: f64) -> EulerianState {
    EulerianState {
        t: s.t + h,
        x0: s.x0,
        dx: s.dx,
        u: s.u.iter().zip(&d.du).map(|(a, b)| a + h * b).collect(),
        rho: s.rho.iter().zip(&d.drho).map(|(a, b)| a + h * b).collect(),
    }
}

pub fn oracle_step(state: &EulerianState, model: &FluxModel, dt: f64) -> Result<EulerianState> {
    let k1 = oracle_rhs(state, model)?;
    let k2 = oracle_rhs(&shifted(state, &k1, 0.5 * dt), model)?;
    let k3 = oracle_rhs(&shifted(state, &k2, 0.5 * dt), model)?;
    let k4 = oracle_rhs(&shifted(state, &k3, dt), model)?;
    let comb = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    Ok(EulerianState {
        t: state.t + dt,
        x0: state.x0,
        dx: state.dx,
        u: comb(&state.u, &k1.du, &k2.du, &k3.du, &k4.du),
        rho: comb(&state.rho, &k1.drho, &k2.drho, &k3.drho, &k4.drho),
    })
}

pub const DEFAULT_SLOPE_GUARD: f64 = 1e3;

/// RK4 up to `t_end`, returning the states at `output_times` (exact
/// landing). Fails with [`Error::PreBreakingLimit`] once the discrete slope
/// exceeds `slope_guard`.
pub fn oracle_integrate(
    state: &EulerianState,
    model: &FluxModel,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
    slope_guard: f64,
) -> Result<Vec<EulerianState>> {
    if t_end == 0.0 {
        return Ok(vec![state.clone()]);
    }
    if !(dt > 0.0 && dt <= t_end) {
        return Err(Error::Config(format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")));
    }
    if output_times.windows(2).any(|p| p[1] < p[0]) || output_times.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::Config(format!("output times must be sorted and lie in [0, {t_end}]")));
    }
    let t0 = state.t;
    let mut cur = state.clone();
    let mut out = Vec::with_capacity(output_times.len());
    let guard = |s: &EulerianState| -> Result<()> {
        let max_slope = centred_derivative(&s.u, s.dx).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_slope > slope_guard {
            return Err(Error::PreBreakingLimit { t: s.t, max_slope });
        }
        Ok(())
    };
    for &target in output_times {
        loop {
            let remaining = target - (cur.t - t0);
            if remaining <= 1e-9 * dt {
                break;
            }
            let h = remaining.min(dt);
            cur = oracle_step(&cur, model, h)?;
            guard(&cur)?;
        }
        cur.t = t0 + target;
        out.push(cur.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn ch0() -> FluxModel {
        FluxModel::make_preset(Preset::CamassaHolm, 0.0).unwrap()
    }

    fn gaussian(n: usize) -> EulerianState {
        EulerianState::sample(-15.0, 15.0, n, |x| (-x * x).exp(), |x| 0.3 * (-x * x).exp()).unwrap()
    }

    #[test]
    fn zero_state_is_stationary() {
        let s = EulerianState::sample(-5.0, 5.0, 101, |_| 0.0, |_| 0.0).unwrap();
        let d = oracle_rhs(&s, &ch0()).unwrap();
        assert!(d.du.iter().chain(&d.drho).all(|&v| v == 0.0));
        let out = oracle_integrate(&s, &ch0(), 0.0, 0.1, &[0.0], DEFAULT_SLOPE_GUARD).unwrap();
        assert_eq!(out, vec![s]);
    }

    #[test]
    fn even_data_gives_odd_velocity() {
        let s = EulerianState::sample(-10.0, 10.0, 401, |x| (-x * x).exp(), |_| 0.0).unwrap();
        let h = eulerian_source(&ch0(), &s.u, &centred_derivative(&s.u, s.dx), &s.rho);
        let (p, px) = eulerian_p_px(&h, s.dx);
        let n = s.len();
        for i in 0..n {
            assert!((p[i] - p[n - 1 - i]).abs() < 1e-13);
            assert!((px[i] + px[n - 1 - i]).abs() < 1e-13);
        }
        let d = oracle_rhs(&s, &ch0()).unwrap();
        for i in 0..n {
            assert!((d.du[i] + d.du[n - 1 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn sweeps_match_direct_sum() {
        let s = gaussian(801);
        let ux = centred_derivative(&s.u, s.dx);
        let h = eulerian_source(&ch0(), &s.u, &ux, &s.rho);
        let (p, px) = eulerian_p_px(&h, s.dx);
        let (pd, pxd) = eulerian_p_px_direct(&h, s.dx);
        for i in 0..s.len() {
            assert!((p[i] - pd[i]).abs() < 1e-10 && (px[i] - pxd[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn p_matches_closed_form_double_integral() {
        // u = e^{-x^2}: P(0) = 1/2 int e^{-|y|} (e^{-2y^2} + 2 y^2 e^{-2y^2}) dy
        let s = EulerianState::sample(-12.0, 12.0, 4801, |x| (-x * x).exp(), |_| 0.0).unwrap();
        let exact_ux: Vec<f64> = s.x_values().iter().map(|&x| -2.0 * x * (-x * x).exp()).collect();
        let h = eulerian_source(&ch0(), &s.u, &exact_ux, &s.rho);
        let (p, _) = eulerian_p_px(&h, s.dx);
        let integrand = |y: f64| (-y.abs()).exp() * (1.0 + 2.0 * y * y) * (-2.0 * y * y).exp();
        let bp: Vec<f64> = (0..=2400).map(|i| i as f64 * 0.005).collect();
        let half = crate::quadrature::composite_gauss5(integrand, &bp);
        assert!((p[2400] - half).abs() < 1e-6, "{} vs {half}", p[2400]);
    }

    #[test]
    fn energy_is_conserved_before_breaking() {
        let s = gaussian(1201);
        let m = ch0();
        let energy = |s: &EulerianState| {
            let ux = centred_derivative(&s.u, s.dx);
            s.dx * (0..s.len()).map(|i| s.u[i] * s.u[i] + ux[i] * ux[i] + s.rho[i] * s.rho[i]).sum::<f64>()
        };
        let out = oracle_integrate(&s, &m, 0.3, 2e-3, &[0.3], DEFAULT_SLOPE_GUARD).unwrap();
        let (e0, e1) = (energy(&s), energy(&out[0]));
        assert!(((e1 - e0) / e0).abs() < 1e-3, "{e0} {e1}");
    }

    #[test]
    fn guard_fires_before_nan() {
        let s = EulerianState::sample(-10.0, 10.0, 2001, |x| 2.0 * (-x * x).exp() - 2.0 * x * (-x * x).exp(), |_| 0.0)
            .unwrap();
        let err = oracle_integrate(&s, &ch0(), 5.0, 1e-3, &[5.0], 50.0).unwrap_err();
        match err {
            Error::PreBreakingLimit { max_slope, .. } => assert!(max_slope.is_finite() && max_slope > 50.0),
            e => panic!("unexpected {e:?}"),
        }
    }
}
