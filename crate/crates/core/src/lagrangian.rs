//! Eulerian initial data and its image in energy-weighted characteristic
//! coordinates.
//!
//! The label of the characteristic through `x` is
//! `Z(x) = int_0^x (1 + u_x(0, s)^2) ds`, so the grid is uniform in `Z` and
//! automatically refined where the initial slope is large. At `T = 0` the
//! unknowns are `u = u0(x(Z))`, `rho = rho0(x(Z))`, `w = 2 atan u0_x(x(Z))`,
//! `v = 1`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss5, gauss5};

/// Eulerian profile `(u0, u0_x, rho0)` on the real line.
///
/// `ux` only needs to be meaningful almost everywhere; at an isolated kink
/// implementations return the mean of the one-sided slopes.
pub trait Profile: Send + Sync + fmt::Debug {
    fn u(&self, x: f64) -> f64;
    fn ux(&self, x: f64) -> f64;
    fn rho(&self, x: f64) -> f64;

    /// Positions where `u0_x` jumps.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Extra quadrature breakpoints (kinks are always included).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `sign(s)` with `sign(0) = 0`, which averages the one-sided slopes of
/// `e^{-|s|}` at its crest.
fn sgn(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero;

impl Profile for Zero {
    fn u(&self, _: f64) -> f64 {
        0.0
    }
    fn ux(&self, _: f64) -> f64 {
        0.0
    }
    fn rho(&self, _: f64) -> f64 {
        0.0
    }
}

/// `u0 = a exp(-((x - c)/s)^2)`, `rho0 = b exp(-((x - c)/r)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub rho_amplitude: f64,
    pub rho_width: f64,
}

impl Profile for Gaussian {
    fn u(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        self.amplitude * (-s * s).exp()
    }
    fn ux(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        -2.0 * s / self.width * self.amplitude * (-s * s).exp()
    }
    fn rho(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.rho_width;
        self.rho_amplitude * (-s * s).exp()
    }
}

/// Single peakon `u0 = c exp(-|x - x0|)` with an optional Gaussian density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peakon {
    pub amplitude: f64,
    pub center: f64,
    pub rho_amplitude: f64,
    pub rho_width: f64,
}

impl Profile for Peakon {
    fn u(&self, x: f64) -> f64 {
        self.amplitude * (-(x - self.center).abs()).exp()
    }
    fn ux(&self, x: f64) -> f64 {
        let s = x - self.center;
        -sgn(s) * self.amplitude * (-s.abs()).exp()
    }
    fn rho(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.rho_width;
        self.rho_amplitude * (-s * s).exp()
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.center]
    }
}

/// Peakon at `center - half_separation`, antipeakon at
/// `center + half_separation`: `u0 = c (e^{-|x - xl|} - e^{-|x - xr|})`.
/// With `c > 0` the two crests move towards each other and collide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakonAntipeakon {
    pub amplitude: f64,
    pub center: f64,
    pub half_separation: f64,
}

impl PeakonAntipeakon {
    fn crests(&self) -> (f64, f64) {
        (self.center - self.half_separation, self.center + self.half_separation)
    }
}

impl Profile for PeakonAntipeakon {
    fn u(&self, x: f64) -> f64 {
        let (l, r) = self.crests();
        self.amplitude * ((-(x - l).abs()).exp() - (-(x - r).abs()).exp())
    }
    fn ux(&self, x: f64) -> f64 {
        let (l, r) = self.crests();
        self.amplitude * (-sgn(x - l) * (-(x - l).abs()).exp() + sgn(x - r) * (-(x - r).abs()).exp())
    }
    fn rho(&self, _: f64) -> f64 {
        0.0
    }
    fn kinks(&self) -> Vec<f64> {
        let (l, r) = self.crests();
        vec![l, r]
    }
}

/// `u0 = 0`, `rho0` a tanh-smoothed box of the given height on
/// `[center - half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamBreak {
    pub height: f64,
    pub center: f64,
    pub half_width: f64,
    pub smoothing: f64,
}

impl Profile for DamBreak {
    fn u(&self, _: f64) -> f64 {
        0.0
    }
    fn ux(&self, _: f64) -> f64 {
        0.0
    }
    fn rho(&self, x: f64) -> f64 {
        let s = x - self.center;
        0.5 * self.height
            * (((s + self.half_width) / self.smoothing).tanh()
                - ((s - self.half_width) / self.smoothing).tanh())
    }
}

/// Tabulated data: `u` is the C1 cubic Hermite interpolant through the
/// samples with centred-difference slopes, `rho` is piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    xs: Vec<f64>,
    us: Vec<f64>,
    slopes: Vec<f64>,
    rhos: Vec<f64>,
}

impl Sampled {
    pub fn new(xs: Vec<f64>, us: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || us.len() != n || rhos.len() != n {
            return Err(Error::Data(format!(
                "sampled profile needs >= 3 rows of equal length (got x:{}, u:{}, rho:{})",
                n,
                us.len(),
                rhos.len()
            )));
        }
        if let Some(i) = xs
            .iter()
            .chain(&us)
            .chain(&rhos)
            .position(|v| !v.is_finite())
        {
            return Err(Error::Data(format!("non-finite sample (flat index {i})")));
        }
        if let Some(i) = xs.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::Data(format!("x not strictly increasing at row {}", i + 1)));
        }
        let slopes = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (us[b] - us[a]) / (xs[b] - xs[a])
            })
            .collect();
        Ok(Sampled { xs, us, slopes, rhos })
    }

    /// Reads a CSV file with header `x,u,rho`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "u", "rho"] {
            return Err(Error::Data(format!(
                "{}: expected header `x,u,rho`, found `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut xs, mut us, mut rhos) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| {
                    Error::Data(format!("{}: row {}: {e}", path.display(), line + 2))
                })
            };
            xs.push(parse(0)?);
            us.push(parse(1)?);
            rhos.push(parse(2)?);
        }
        Sampled::new(xs, us, rhos)
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return None;
        }
        let j = self.xs.partition_point(|&xi| xi <= x).clamp(1, n - 1) - 1;
        let h = self.xs[j + 1] - self.xs[j];
        Some((j, (x - self.xs[j]) / h))
    }
}

impl Profile for Sampled {
    fn u(&self, x: f64) -> f64 {
        let Some((j, t)) = self.locate(x) else { return 0.0 };
        let h = self.xs[j + 1] - self.xs[j];
        let (t2, t3) = (t * t, t * t * t);
        self.us[j] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.slopes[j] * h * (t3 - 2.0 * t2 + t)
            + self.us[j + 1] * (-2.0 * t3 + 3.0 * t2)
            + self.slopes[j + 1] * h * (t3 - t2)
    }
    fn ux(&self, x: f64) -> f64 {
        let Some((j, t)) = self.locate(x) else { return 0.0 };
        let h = self.xs[j + 1] - self.xs[j];
        let t2 = t * t;
        (self.us[j] * (6.0 * t2 - 6.0 * t) + self.us[j + 1] * (-6.0 * t2 + 6.0 * t)) / h
            + self.slopes[j] * (3.0 * t2 - 4.0 * t + 1.0)
            + self.slopes[j + 1] * (3.0 * t2 - 2.0 * t)
    }
    fn rho(&self, x: f64) -> f64 {
        let Some((j, t)) = self.locate(x) else { return 0.0 };
        self.rhos[j] * (1.0 - t) + self.rhos[j + 1] * t
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    Gaussian,
    Peakon,
    PeakonAntipeakon,
    DambreakRho,
    FromFile,
    Custom,
}

/// Initial data restricted to `window`; fields are extended by zero outside.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub kind: InitialKind,
    pub window: (f64, f64),
    profile: Arc<dyn Profile>,
}

impl InitialData {
    pub fn new(kind: InitialKind, window: (f64, f64), profile: Arc<dyn Profile>) -> Result<Self> {
        let (a, b) = window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("invalid window [{a}, {b}]")));
        }
        Ok(InitialData { kind, window, profile })
    }

    pub fn zero(window: (f64, f64)) -> Result<Self> {
        Self::new(InitialKind::Zero, window, Arc::new(Zero))
    }

    fn inside(&self, x: f64) -> bool {
        x >= self.window.0 && x <= self.window.1
    }

    pub fn u(&self, x: f64) -> f64 {
        if self.inside(x) {
            self.profile.u(x)
        } else {
            0.0
        }
    }

    pub fn ux(&self, x: f64) -> f64 {
        if self.inside(x) {
            self.profile.ux(x)
        } else {
            0.0
        }
    }

    pub fn rho(&self, x: f64) -> f64 {
        if self.inside(x) {
            self.profile.rho(x)
        } else {
            0.0
        }
    }

    /// Kinks of `u0` strictly inside the window.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .profile
            .kinks()
            .into_iter()
            .filter(|&x| x > self.window.0 && x < self.window.1)
            .collect();
        k.sort_by(f64::total_cmp);
        k
    }

    /// Sorted quadrature breakpoints: `cells` uniform cells plus kinks and
    /// profile-specific nodes.
    fn breakpoints(&self, cells: usize) -> Vec<f64> {
        let (a, b) = self.window;
        let h = (b - a) / cells as f64;
        let mut bp: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
        bp.extend(self.kinks());
        bp.extend(self.profile.breakpoints().into_iter().filter(|&x| x > a && x < b));
        bp.sort_by(f64::total_cmp);
        bp.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
        bp
    }

    /// Checks finiteness on a sample grid and decay at the window edges.
    pub fn validate(&self, edge_tol: f64) -> Result<()> {
        let (a, b) = self.window;
        let m = 4096;
        for i in 0..=m {
            let x = a + (b - a) * i as f64 / m as f64;
            let (u, ux, rho) = (self.u(x), self.ux(x), self.rho(x));
            if !(u.is_finite() && ux.is_finite() && rho.is_finite()) {
                return Err(Error::Data(format!("non-finite initial data at x = {x}")));
            }
        }
        for x in [a, b] {
            let (u, rho) = (self.profile.u(x).abs(), self.profile.rho(x).abs());
            if u > edge_tol || rho > edge_tol {
                return Err(Error::Data(format!(
                    "initial data has not decayed at window edge x = {x}: |u| = {u:.3e}, |rho| = {rho:.3e} \
                     (edge tolerance {edge_tol:.1e}); widen the window"
                )));
            }
        }
        Ok(())
    }
}

/// E(0) = int (u0^2 + u0_x^2 + rho0^2) dx over the window.
pub fn energy_e0(initial: &InitialData) -> Result<f64> {
    let bp = initial.breakpoints(8192);
    let e = composite_gauss5(
        |x| {
            let (u, ux, r) = (initial.u(x), initial.ux(x), initial.rho(x));
            u * u + ux * ux + r * r
        },
        &bp,
    );
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Data("initial energy is not finite".into()))
    }
}

/// Monotone map `x -> Z(x)` with its inverse, tabulated on a dense set of
/// breakpoints and evaluated between them by Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct ZMap {
    initial: InitialData,
    xs: Vec<f64>,
    zs: Vec<f64>,
}

/// Tabulates `Z(x) = int_0^x (1 + u0_x^2)` with `resolution` dense cells
/// (kinks become cell boundaries).
pub fn build_z_map(initial: &InitialData, resolution: usize) -> Result<ZMap> {
    let xs = initial.breakpoints(resolution.max(16));
    let density = |x: f64| {
        let ux = initial.ux(x);
        1.0 + ux * ux
    };
    let mut zs = Vec::with_capacity(xs.len());
    zs.push(0.0);
    for c in xs.windows(2) {
        let dz = gauss5(density, c[0], c[1]);
        if !dz.is_finite() {
            return Err(Error::Data(format!("non-finite u0_x on [{}, {}]", c[0], c[1])));
        }
        zs.push(zs.last().unwrap() + dz);
    }
    let mut map = ZMap { initial: initial.clone(), xs, zs };
    let z0 = map.z_of(0.0);
    map.zs.iter_mut().for_each(|z| *z -= z0);
    Ok(map)
}

impl ZMap {
    pub fn window(&self) -> (f64, f64) {
        self.initial.window
    }

    pub fn z_window(&self) -> (f64, f64) {
        (self.zs[0], *self.zs.last().unwrap())
    }

    fn density(&self, x: f64) -> f64 {
        let ux = self.initial.ux(x);
        1.0 + ux * ux
    }

    pub fn z_of(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.zs[0] + (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.zs[n - 1] + (x - self.xs[n - 1]);
        }
        let j = self.xs.partition_point(|&xi| xi <= x) - 1;
        self.zs[j] + gauss5(|s| self.density(s), self.xs[j], x)
    }

    /// Inverse map: Hermite initial guess inside the bracketing cell, then
    /// safeguarded Newton iterations on the quadrature of `Z`.
    pub fn x_of(&self, z: f64) -> f64 {
        let n = self.zs.len();
        if z <= self.zs[0] {
            return self.xs[0] + (z - self.zs[0]);
        }
        if z >= self.zs[n - 1] {
            return self.xs[n - 1] + (z - self.zs[n - 1]);
        }
        let j = (self.zs.partition_point(|&zi| zi <= z) - 1).min(n - 2);
        let (xa, xb) = (self.xs[j], self.xs[j + 1]);
        let (za, zb) = (self.zs[j], self.zs[j + 1]);
        let hz = zb - za;
        let t = (z - za) / hz;
        // dx/dZ = 1 / (1 + u_x^2), evaluated just inside the cell
        let eps = 1e-12 * (xb - xa);
        let (ma, mb) = (1.0 / self.density(xa + eps), 1.0 / self.density(xb - eps));
        let (t2, t3) = (t * t, t * t * t);
        let mut x = xa * (2.0 * t3 - 3.0 * t2 + 1.0)
            + ma * hz * (t3 - 2.0 * t2 + t)
            + xb * (-2.0 * t3 + 3.0 * t2)
            + mb * hz * (t3 - t2);
        x = x.clamp(xa, xb);
        let (mut lo, mut hi) = (xa, xb);
        for _ in 0..60 {
            let r = za + gauss5(|s| self.density(s), xa, x) - z;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = r / self.density(x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Uniform grid in the characteristic label `Z`.
///
/// Labels where the initial slope jumps (peakon crests) are recorded in
/// `kinks`. Up to two of them are placed exactly at cell midpoints, which
/// keeps trapezoid sums of piecewise-smooth integrands second order. Because
/// labels are material, the non-smooth set is the same at every time.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGrid {
    n: usize,
    z_min: f64,
    dz: f64,
    kinks: Vec<f64>,
    smooth_stencil: Vec<bool>,
}

pub const MIN_NODES: usize = 16;

impl LagrangianGrid {
    pub fn uniform(z_min: f64, z_max: f64, n: usize) -> Result<Self> {
        Self::with_kinks(z_min, z_max, n, Vec::new())
    }

    fn with_kinks(z_min: f64, z_max: f64, n: usize, mut kinks: Vec<f64>) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!("grid needs N >= {MIN_NODES} nodes, got N = {n}")));
        }
        if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
            return Err(Error::Config(format!("invalid Z window [{z_min}, {z_max}]")));
        }
        kinks.sort_by(f64::total_cmp);
        let dz = (z_max - z_min) / (n - 1) as f64;
        let smooth_stencil = (0..n)
            .map(|i| {
                let (a, b) = (z_min + (i as f64 - 1.0) * dz, z_min + (i as f64 + 1.0) * dz);
                i > 0 && i + 1 < n && !kinks.iter().any(|&k| k > a && k < b)
            })
            .collect();
        Ok(LagrangianGrid { n, z_min, dz, kinks, smooth_stencil })
    }

    /// Grid of `n` nodes spanning about `[z_lo, z_hi]`, shifted (and, for two
    /// or more kinks, stretched by well under one cell per gap) so that the
    /// first two kink labels sit at cell midpoints.
    pub fn covering(z_lo: f64, z_hi: f64, n: usize, kinks: Vec<f64>) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!("grid needs N >= {MIN_NODES} nodes, got N = {n}")));
        }
        if kinks.is_empty() {
            return Self::with_kinks(z_lo, z_hi, n, kinks);
        }
        let mut kinks = kinks;
        kinks.sort_by(f64::total_cmp);
        let dz0 = (z_hi - z_lo) / (n - 1) as f64;
        let dz = if kinks.len() >= 2 {
            let span = kinks[1] - kinks[0];
            span / (span / dz0).round().max(1.0)
        } else {
            dz0
        };
        let anchor = kinks[0];
        let center = 0.5 * (z_lo + z_hi);
        let first = center - 0.5 * (n - 1) as f64 * dz;
        let j = ((anchor - first) / dz - 0.5).round();
        let z_min = anchor - (j + 0.5) * dz;
        Self::with_kinks(z_min, z_min + (n - 1) as f64 * dz, n, kinks)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.n - 1)
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz
    }

    pub fn z_values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.z(i)).collect()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// True for interior nodes whose centred stencil does not straddle a
    /// kink label; identities that hold for a.e. `Z` are checked there.
    #[inline]
    pub fn smooth_stencil(&self, i: usize) -> bool {
        self.smooth_stencil[i]
    }
}

/// Lagrangian unknowns at time `t`, one entry per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub t: f64,
    pub grid: Arc<LagrangianGrid>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    /// Unwrapped angle `2 atan u_x`.
    pub w: Vec<f64>,
    /// Energy-weighted Jacobian `(1 + u_x^2) dx/dZ`.
    pub v: Vec<f64>,
    /// Characteristic positions.
    pub x: Vec<f64>,
}

impl LagrangianState {
    /// Rest state (`u = rho = w = 0`, `v = 1`, `x = Z`).
    pub fn rest(grid: Arc<LagrangianGrid>) -> Self {
        let n = grid.len();
        let x = grid.z_values();
        LagrangianState {
            t: 0.0,
            u: vec![0.0; n],
            rho: vec![0.0; n],
            w: vec![0.0; n],
            v: vec![1.0; n],
            x,
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dz(&self) -> f64 {
        self.grid.dz()
    }

    /// Checks array lengths, finiteness and `v > 0`.
    pub fn check(&self) -> Result<()> {
        let n = self.grid.len();
        for (name, a) in self.fields() {
            if a.len() != n {
                return Err(Error::StateCorruption(format!(
                    "field {name} has length {} but the grid has {n} nodes",
                    a.len()
                )));
            }
            if let Some(i) = a.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric { field: name, node: i });
            }
        }
        if let Some(i) = self.v.iter().position(|&v| v <= 0.0) {
            return Err(Error::StateCorruption(format!("v = {} <= 0 at node {i}", self.v[i])));
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, &Vec<f64>); 5] {
        [("u", &self.u), ("rho", &self.rho), ("w", &self.w), ("v", &self.v), ("x", &self.x)]
    }
}

/// Samples the initial data at the nodes of `grid`.
pub fn init_state(initial: &InitialData, zmap: &ZMap, grid: Arc<LagrangianGrid>) -> Result<LagrangianState> {
    let (za, zb) = zmap.z_window();
    if zmap.window() != initial.window {
        return Err(Error::Config("Z map was built for a different window".into()));
    }
    let slack = 0.05 * (zb - za);
    if grid.z_min() > za + slack || grid.z_max() < zb - slack {
        return Err(Error::Config(format!(
            "grid [{:.6}, {:.6}] does not cover the Z window [{za:.6}, {zb:.6}]",
            grid.z_min(),
            grid.z_max()
        )));
    }
    let n = grid.len();
    let mut s = LagrangianState::rest(grid);
    for i in 0..n {
        let xb = zmap.x_of(s.grid.z(i));
        s.x[i] = xb;
        s.u[i] = initial.u(xb);
        s.rho[i] = initial.rho(xb);
        s.w[i] = 2.0 * initial.ux(xb).atan();
    }
    s.check()?;
    Ok(s)
}

/// Builds the `Z` map and a kink-aligned grid of `n` nodes over the window,
/// and samples the initial state.
pub fn initialize(initial: &InitialData, n: usize) -> Result<(LagrangianState, ZMap)> {
    let zmap = build_z_map(initial, (4 * n).clamp(4096, 65536))?;
    let (za, zb) = zmap.z_window();
    let kinks = initial.kinks().into_iter().map(|x| zmap.z_of(x)).collect();
    let grid = Arc::new(LagrangianGrid::covering(za, zb, n, kinks)?);
    let state = init_state(initial, &zmap, grid)?;
    Ok((state, zmap))
}
