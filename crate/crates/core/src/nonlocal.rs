//! Helmholtz-kernel source terms in characteristic coordinates.
//!
//! With `xi(Z) = int v cos^2(w/2) dZ` (the Eulerian distance between
//! characteristics) and source density
//! `h = (g(u) cos^2(w/2) + f''(u)/2 sin^2(w/2) + rho^2/2 cos^2(w/2)) v`,
//!
//! ```text
//! A(Z) = int_{-inf}^{Z} e^{-(xi(Z) - xi(Z'))} h(Z') dZ'
//! B(Z) = int_{Z}^{+inf} e^{-(xi(Z') - xi(Z))} h(Z') dZ'
//! P = (A + B) / 2,   P_x = (B - A) / 2.
//! ```
//!
//! `A` and `B` satisfy one-cell recurrences, so both fields cost O(N). Inside
//! each cell `xi` is linear (trapezoid accumulation) and `h` is linear, and
//! the product with the exponential is integrated exactly. The kernel depends
//! only on `xi` differences, so plateaus where `cos(w/2) = 0` contribute no
//! decay, exactly as in the continuous formula.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianState;
use crate::model::FluxModel;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalFields {
    pub xi: Vec<f64>,
    pub p: Vec<f64>,
    pub px: Vec<f64>,
}

/// Per-cell integration weights for kernel increment `delta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellWeights {
    /// `e^{-delta}`
    pub decay: f64,
    /// Weight of the node the sum is carried towards.
    pub near: f64,
    /// Weight of the node the sum is carried away from.
    pub far: f64,
}

const SERIES_CUTOFF: f64 = 0.1;

impl CellWeights {
    /// `far = int_0^1 e^{-delta r} r dr`, `near = int_0^1 e^{-delta r} (1 - r) dr`.
    ///
    /// Small increments use the Taylor series (the closed form cancels
    /// catastrophically); `delta = 0` reduces to the trapezoid rule.
    #[inline]
    pub fn new(delta: f64) -> Self {
        let decay = (-delta).exp();
        let (phi1, psi) = if delta < SERIES_CUTOFF {
            // phi1 = sum (-d)^n / (n+1)!,  psi = sum (-d)^n / (n! (n+2))
            let mut phi1 = 0.0;
            let mut psi = 0.0;
            let mut term = 1.0; // (-d)^n / n!
            for n in 0..12 {
                phi1 += term / (n + 1) as f64;
                psi += term / (n + 2) as f64;
                term *= -delta / (n + 1) as f64;
            }
            (phi1, psi)
        } else {
            let phi1 = -(-delta).exp_m1() / delta;
            let psi = (1.0 - decay * (1.0 + delta)) / (delta * delta);
            (phi1, psi)
        };
        CellWeights { decay, near: phi1 - psi, far: psi }
    }
}

/// O(N) evaluation of `(P, P_x)` for kernel increments `delta[k] =
/// xi[k+1] - xi[k]` and source values `h` on a uniform grid of spacing
/// `width`. Sources vanish outside the grid.
pub fn kernel_sweeps(delta: &[f64], h: &[f64], width: f64) -> (Vec<f64>, Vec<f64>) {
    let n = h.len();
    debug_assert_eq!(delta.len() + 1, n);
    let weights: Vec<CellWeights> = delta.iter().map(|&d| CellWeights::new(d)).collect();

    let mut a = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let cw = weights[k];
        a[k + 1] = cw.decay * a[k] + width * (cw.far * h[k] + cw.near * h[k + 1]);
    }
    let mut b = vec![0.0; n];
    for k in (0..n.saturating_sub(1)).rev() {
        let cw = weights[k];
        b[k] = cw.decay * b[k + 1] + width * (cw.far * h[k + 1] + cw.near * h[k]);
    }
    let p = a.iter().zip(&b).map(|(a, b)| 0.5 * (a + b)).collect();
    let px = a.iter().zip(&b).map(|(a, b)| 0.5 * (b - a)).collect();
    (p, px)
}

/// O(N^2) double sum of the same cell integrals; each target node collects
/// every cell with the kernel factor evaluated directly from `xi`.
pub fn kernel_direct(xi: &[f64], h: &[f64], width: f64) -> (Vec<f64>, Vec<f64>) {
    let n = h.len();
    let cells: Vec<(f64, f64)> = (0..n.saturating_sub(1))
        .map(|j| {
            let cw = CellWeights::new(xi[j + 1] - xi[j]);
            // (towards right end, towards left end)
            (
                width * (cw.far * h[j] + cw.near * h[j + 1]),
                width * (cw.far * h[j + 1] + cw.near * h[j]),
            )
        })
        .collect();
    let mut p = vec![0.0; n];
    let mut px = vec![0.0; n];
    for k in 0..n {
        let mut a = 0.0;
        let mut b = 0.0;
        for (j, &(to_right, to_left)) in cells.iter().enumerate() {
            if j < k {
                a += (-(xi[k] - xi[j + 1])).exp() * to_right;
            } else {
                b += (-(xi[j] - xi[k])).exp() * to_left;
            }
        }
        p[k] = 0.5 * (a + b);
        px[k] = 0.5 * (b - a);
    }
    (p, px)
}

/// Cell increments of `xi`: trapezoid rule for `v cos^2(w/2)`.
fn measure_increments(state: &LagrangianState) -> Vec<f64> {
    let half = 0.5 * state.dz();
    let dens: Vec<f64> = state
        .w
        .iter()
        .zip(&state.v)
        .map(|(&w, &v)| {
            let c = (0.5 * w).cos();
            v * c * c
        })
        .collect();
    dens.windows(2).map(|p| half * (p[0] + p[1])).collect()
}

/// `xi(Z) = int_{Z_min}^{Z} v cos^2(w/2)`, with `xi(Z_min) = 0`.
pub fn cumulative_measure(state: &LagrangianState) -> Vec<f64> {
    let mut xi = Vec::with_capacity(state.len());
    xi.push(0.0);
    let mut acc = 0.0;
    for d in measure_increments(state) {
        acc += d;
        xi.push(acc);
    }
    xi
}

pub fn source_density(state: &LagrangianState, model: &FluxModel) -> Vec<f64> {
    (0..state.len())
        .map(|i| {
            let u = state.u[i];
            let r = state.rho[i];
            let (s, c) = (0.5 * state.w[i]).sin_cos();
            let (s2, c2) = (s * s, c * c);
            (model.g(u) * c2 + 0.5 * model.d2f(u) * s2 + 0.5 * r * r * c2) * state.v[i]
        })
        .collect()
}

fn checked_source(state: &LagrangianState, model: &FluxModel) -> Result<Vec<f64>> {
    let h = source_density(state, model);
    if let Some(node) = h.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric { field: "source density", node });
    }
    Ok(h)
}

pub fn compute_p_px(state: &LagrangianState, model: &FluxModel) -> Result<NonlocalFields> {
    let h = checked_source(state, model)?;
    let inc = measure_increments(state);
    let (p, px) = kernel_sweeps(&inc, &h, state.dz());
    let mut xi = Vec::with_capacity(h.len());
    xi.push(0.0);
    for d in &inc {
        xi.push(xi.last().unwrap() + d);
    }
    Ok(NonlocalFields { xi, p, px })
}

/// Brute-force reference for [`compute_p_px`].
pub fn compute_p_px_direct(state: &LagrangianState, model: &FluxModel) -> Result<NonlocalFields> {
    let h = checked_source(state, model)?;
    let xi = cumulative_measure(state);
    let (p, px) = kernel_direct(&xi, &h, state.dz());
    Ok(NonlocalFields { xi, p, px })
}

/// Distance beyond which the decay bound `min{1, e^{E0 - v_minus |eta| / 2}}`
/// drops below `tol`: `2 (E0 + ln(1/tol)) / v_minus`. For `tol >= 1` the
/// bound is already below `tol` everywhere past `2 E0 / v_minus`.
pub fn truncation_padding(e0: f64, v_minus: f64, tol: f64) -> Result<f64> {
    if !(v_minus > 0.0 && v_minus.is_finite()) {
        return Err(Error::Config(format!("lower bound on v must be positive, got {v_minus}")));
    }
    if !(tol > 0.0) || !e0.is_finite() || e0 < 0.0 {
        return Err(Error::Config(format!("invalid padding request E0 = {e0}, tol = {tol}")));
    }
    let log_term = if tol >= 1.0 { 0.0 } else { (1.0 / tol).ln() };
    Ok(2.0 * (e0 + log_term) / v_minus)
}
