//! Eulerian profiles from a Lagrangian state.
//!
//! `u(t, x(T, Z)) = u(T, Z)`. Between two characteristics `u` is interpolated
//! linearly in `x`; on a plateau (a run of characteristics sharing one
//! position) the common value of `u` is returned. The slope is recovered as
//! `u_x = tan(w/2)` and is flagged invalid wherever `cos(w/2)` vanishes.

use crate::error::{Error, Result};
use crate::lagrangian::LagrangianState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Relative `x` increment (in units of `dZ`) below which two neighbouring
    /// characteristics count as one point; also the `|cos(w/2)|` threshold
    /// for valid slopes.
    pub eps_plateau: f64,
    /// Largest tolerated decrease of `x` between neighbours, relative to `dZ`.
    pub monotone_tol: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { eps_plateau: 1e-8, monotone_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianFrame {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub ux_valid: Vec<bool>,
    pub rho: Vec<f64>,
    pub rho_valid: Vec<bool>,
    /// `u^2 + u_x^2 + rho^2` where valid, `u^2` elsewhere.
    pub energy_density: Vec<f64>,
}

impl EulerianFrame {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn all_valid(&self) -> bool {
        self.ux_valid.iter().chain(&self.rho_valid).all(|&b| b)
    }
}

/// `n` equally spaced points spanning the characteristic positions.
pub fn uniform_x_grid(state: &LagrangianState, n: usize) -> Vec<f64> {
    let lo = state.x[0];
    let hi = state.x[state.len() - 1];
    if n < 2 {
        return vec![0.5 * (lo + hi); n];
    }
    let dx = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * dx }).collect()
}

fn check_monotone(state: &LagrangianState, opts: &SampleOptions) -> Result<()> {
    let tol = opts.monotone_tol * state.dz();
    for (i, p) in state.x.windows(2).enumerate() {
        if p[1] - p[0] < -tol {
            return Err(Error::StateCorruption(format!(
                "characteristics cross between nodes {i} and {}: x decreases by {:.3e}",
                i + 1,
                p[0] - p[1]
            )));
        }
    }
    Ok(())
}

/// Bracketing cell and interpolation weight for each query point.
fn locate(state: &LagrangianState, x_grid: &[f64], eps_plateau: f64) -> Result<Vec<(usize, f64, bool)>> {
    let n = state.len();
    let (lo, hi) = (state.x[0], state.x[n - 1]);
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let eps = eps_plateau * state.dz();
    x_grid
        .iter()
        .map(|&q| {
            if !(q >= lo - slack && q <= hi + slack) {
                return Err(Error::Precondition(format!(
                    "query x = {q} outside the characteristic range [{lo}, {hi}]"
                )));
            }
            let j = state.x.partition_point(|&x| x <= q).clamp(1, n - 1);
            let k = j - 1;
            if state.x[k + 1] - state.x[k] <= eps {
                return Ok((k, 0.5, true));
            }
            let theta = ((q - state.x[k]) / (state.x[k + 1] - state.x[k])).clamp(0.0, 1.0);
            Ok((k, theta, false))
        })
        .collect()
}

/// `u` at the query points.
pub fn sample_u(state: &LagrangianState, x_grid: &[f64], opts: &SampleOptions) -> Result<Vec<f64>> {
    check_monotone(state, opts)?;
    Ok(locate(state, x_grid, opts.eps_plateau)?
        .into_iter()
        .map(|(k, th, _)| (1.0 - th) * state.u[k] + th * state.u[k + 1])
        .collect())
}

/// Full frame: `u`, `u_x`, `rho` and their validity flags.
pub fn sample_frame(state: &LagrangianState, x_grid: &[f64], opts: &SampleOptions) -> Result<EulerianFrame> {
    check_monotone(state, opts)?;
    let cells = locate(state, x_grid, opts.eps_plateau)?;
    let m = x_grid.len();
    let mut f = EulerianFrame {
        t: state.t,
        x: x_grid.to_vec(),
        u: Vec::with_capacity(m),
        ux: Vec::with_capacity(m),
        ux_valid: Vec::with_capacity(m),
        rho: Vec::with_capacity(m),
        rho_valid: Vec::with_capacity(m),
        energy_density: Vec::with_capacity(m),
    };
    let eps = opts.eps_plateau;
    for (k, th, on_plateau) in cells {
        let lerp = |a: &[f64]| (1.0 - th) * a[k] + th * a[k + 1];
        let u = lerp(&state.u);
        let (s0, c0) = (0.5 * state.w[k]).sin_cos();
        let (s1, c1) = (0.5 * state.w[k + 1]).sin_cos();
        let valid = !on_plateau && c0.abs() > eps && c1.abs() > eps;
        let (ux, rho) = if valid {
            ((1.0 - th) * s0 / c0 + th * s1 / c1, lerp(&state.rho))
        } else {
            (0.0, 0.0)
        };
        f.u.push(u);
        f.ux.push(ux);
        f.ux_valid.push(valid);
        f.rho.push(rho);
        f.rho_valid.push(valid);
        f.energy_density.push(u * u + ux * ux + rho * rho);
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerianEnergy {
    /// Trapezoid integral of the energy density over cells with two valid ends.
    pub energy: f64,
    pub invalid_fraction: f64,
}

pub fn eulerian_energy(frame: &EulerianFrame) -> EulerianEnergy {
    let m = frame.len();
    if m < 2 {
        return EulerianEnergy { energy: 0.0, invalid_fraction: 0.0 };
    }
    let ok = |i: usize| frame.ux_valid[i] && frame.rho_valid[i];
    let energy = (0..m - 1)
        .filter(|&i| ok(i) && ok(i + 1))
        .map(|i| 0.5 * (frame.x[i + 1] - frame.x[i]) * (frame.energy_density[i] + frame.energy_density[i + 1]))
        .sum();
    let invalid = (0..m).filter(|&i| !ok(i)).count();
    EulerianEnergy { energy, invalid_fraction: invalid as f64 / m as f64 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    /// Max over smooth stencils of `|D_Z x - v cos^2(w/2)|`.
    pub residual_xz: f64,
    pub monotonicity_violations: usize,
}

pub fn characteristics_consistency(state: &LagrangianState) -> ConsistencyReport {
    let residual_xz = stencil_residual(state, &state.x, |i| {
        let c = (0.5 * state.w[i]).cos();
        state.v[i] * c * c
    });
    let monotonicity_violations = state.x.windows(2).filter(|p| p[1] < p[0]).count();
    ConsistencyReport { residual_xz, monotonicity_violations }
}

/// Max over nodes with a kink-free centred stencil of `|D_Z field - target|`.
pub fn stencil_residual(state: &LagrangianState, field: &[f64], target: impl Fn(usize) -> f64) -> f64 {
    let inv = 0.5 / state.dz();
    (1..state.len().saturating_sub(1))
        .filter(|&i| state.grid.smooth_stencil(i))
        .map(|i| ((field[i + 1] - field[i - 1]) * inv - target(i)).abs())
        .fold(0.0, f64::max)
}

/// Largest `|u(x1) - u(x2)| / |x1 - x2|^{1/2}` over all sample pairs.
pub fn holder_half_quotient(x: &[f64], u: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[j] - x[i]).abs();
            if d > 0.0 {
                best = best.max((u[j] - u[i]).abs() / d.sqrt());
            }
        }
    }
    best
}

/// Discrete `L^2` distance of two frames sampled on the same grid.
pub fn l2_distance(a: &EulerianFrame, b: &EulerianFrame) -> f64 {
    let d: Vec<f64> = a.u.iter().zip(&b.u).map(|(p, q)| (p - q) * (p - q)).collect();
    let m = d.len();
    if m < 2 {
        return 0.0;
    }
    (0..m - 1)
        .map(|i| 0.5 * (a.x[i + 1] - a.x[i]) * (d[i] + d[i + 1]))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::lagrangian::{initialize, Gaussian, InitialData, InitialKind, LagrangianGrid, Peakon};

    fn rest(n: usize) -> LagrangianState {
        LagrangianState::rest(Arc::new(LagrangianGrid::uniform(-5.0, 5.0, n).unwrap()))
    }

    #[test]
    fn zero_state_gives_zero_frame() {
        let s = rest(64);
        let xs = uniform_x_grid(&s, 101);
        let f = sample_frame(&s, &xs, &SampleOptions::default()).unwrap();
        assert!(f.u.iter().chain(&f.ux).chain(&f.rho).all(|&v| v == 0.0));
        assert!(f.all_valid());
        assert_eq!(eulerian_energy(&f).energy, 0.0);
        let c = characteristics_consistency(&s);
        assert!(c.residual_xz < 1e-12);
        assert_eq!(c.monotonicity_violations, 0);
    }

    #[test]
    fn unit_slope_node() {
        let mut s = rest(64);
        s.w[30] = PI / 2.0;
        let f = sample_frame(&s, &[s.x[30]], &SampleOptions::default()).unwrap();
        assert!((f.ux[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plateau_returns_common_value() {
        let mut s = rest(64);
        s.x[31] = s.x[30];
        s.u[30] = 0.7;
        s.u[31] = 0.7;
        s.w[30] = PI;
        s.w[31] = PI;
        let q = s.x[30];
        let f = sample_frame(&s, &[q, q + 1e-3], &SampleOptions::default()).unwrap();
        assert_eq!(f.u[0], 0.7);
        assert!(!f.ux_valid[0] && !f.rho_valid[0]);
    }

    #[test]
    fn breaking_nodes_are_flagged() {
        let mut s = rest(64);
        for i in 20..25 {
            s.w[i] = PI - 1e-10;
        }
        let f = sample_frame(&s, &s.x.clone(), &SampleOptions::default()).unwrap();
        for i in 19..25 {
            assert!(!f.ux_valid[i], "{i}");
        }
        assert!(f.ux_valid[10] && f.ux_valid[40]);
        let e = eulerian_energy(&f);
        assert!(e.invalid_fraction > 0.0);
    }

    #[test]
    fn decreasing_positions_are_rejected() {
        let mut s = rest(64);
        s.x[10] += 0.5;
        assert!(matches!(
            sample_u(&s, &[0.0], &SampleOptions::default()),
            Err(Error::StateCorruption(_))
        ));
        assert_eq!(characteristics_consistency(&s).monotonicity_violations, 1);
    }

    #[test]
    fn out_of_range_query_is_rejected() {
        let s = rest(64);
        assert!(matches!(sample_u(&s, &[6.0], &SampleOptions::default()), Err(Error::Precondition(_))));
    }

    fn gaussian(n: usize) -> (InitialData, LagrangianState) {
        let g = Gaussian { amplitude: 1.0, center: 0.0, width: 1.0, rho_amplitude: 0.5, rho_width: 1.0 };
        let d = InitialData::new(InitialKind::Gaussian, (-10.0, 10.0), Arc::new(g)).unwrap();
        let s = initialize(&d, n).unwrap().0;
        (d, s)
    }

    #[test]
    fn initial_reconstruction_is_second_order() {
        let err = |n: usize| {
            let (d, s) = gaussian(n);
            let xs: Vec<f64> = (0..997).map(|i| -8.0 + 16.0 * i as f64 / 996.0).collect();
            let f = sample_frame(&s, &xs, &SampleOptions::default()).unwrap();
            xs.iter().zip(&f.u).map(|(&x, &u)| (u - d.u(x)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(256), err(512));
        assert!(e1 < 5e-3, "{e1}");
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn initial_consistency_is_second_order() {
        let r1 = characteristics_consistency(&gaussian(256).1).residual_xz;
        let r2 = characteristics_consistency(&gaussian(512).1).residual_xz;
        assert!(r1 < 1e-2 && r1 / r2 > 3.5, "{r1} {r2}");
    }

    #[test]
    fn initial_peakon_energy() {
        let p = Peakon { amplitude: 1.0, center: 0.0, rho_amplitude: 0.0, rho_width: 1.0 };
        let d = InitialData::new(InitialKind::Peakon, (-20.0, 20.0), Arc::new(p)).unwrap();
        let s = initialize(&d, 4096).unwrap().0;
        let xs: Vec<f64> = (0..8001).map(|i| -20.0 + i as f64 * 0.005).collect();
        let f = sample_frame(&s, &xs, &SampleOptions::default()).unwrap();
        let e = eulerian_energy(&f);
        assert!((e.energy - 2.0).abs() < 5e-3, "{}", e.energy);
        assert_eq!(e.invalid_fraction, 0.0);
        assert!(holder_half_quotient(&f.x[3000..5000], &f.u[3000..5000]) < 2.0);
    }

    #[test]
    fn l2_distance_of_shifted_constant() {
        let s = rest(32);
        let xs = uniform_x_grid(&s, 11);
        let a = sample_frame(&s, &xs, &SampleOptions::default()).unwrap();
        let mut b = a.clone();
        b.u.iter_mut().for_each(|u| *u += 0.5);
        assert!((l2_distance(&a, &b) - 0.5 * 10f64.sqrt()).abs() < 1e-12);
    }
}
