//! Flux pair `(f, g)` and every model-dependent symbol derived from it.
//!
//! All supported models are polynomial, so derivatives and antiderivatives
//! are carried as exact coefficient lists rather than numerical
//! approximations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn constant_term(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        out.extend(self.0.iter().enumerate().map(|(i, &c)| c / (i + 1) as f64));
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*u"),
                _ => format!("{c}*u^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    CamassaHolm,
    HyperelasticRod,
    ConstantinLannes,
    TwoComponentCh,
    CustomPolynomial,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::CamassaHolm,
        Preset::HyperelasticRod,
        Preset::ConstantinLannes,
        Preset::TwoComponentCh,
        Preset::CustomPolynomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CamassaHolm => "camassa_holm",
            Preset::HyperelasticRod => "hyperelastic_rod",
            Preset::ConstantinLannes => "constantin_lannes",
            Preset::TwoComponentCh => "two_component_ch",
            Preset::CustomPolynomial => "custom_polynomial",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::CamassaHolm => "f = u^2/2, g = k u + u^2 (k = 0 with rho = 0 is the classical CH equation)",
            Preset::HyperelasticRod => "f = k u^2/2, g = (3 - k) u^2/2 (hyper-elastic rod wave equation)",
            Preset::ConstantinLannes => "f = -7u^2 - u, g = 2u + 10u^2 - 2u^3 + 3u^4",
            Preset::TwoComponentCh => "f = u^2/2, g = k u + u^2 (two-component CH system)",
            Preset::CustomPolynomial => "user-supplied polynomial coefficients for f and g (g(0) = 0 required)",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model preset `{s}`")))
    }
}

/// Explicit derivative and antiderivative tables for a flux pair.
///
/// `FluxModel::from_polynomials` fills these symbolically; `from_tables`
/// accepts hand-written tables as-is so they can be audited with
/// [`check_derivatives`].
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTables {
    pub f: Poly,
    pub df: Poly,
    pub d2f: Poly,
    pub d3f: Poly,
    pub g: Poly,
    pub dg: Poly,
    pub int_f: Poly,
    pub int_g: Poly,
}

impl FluxTables {
    pub fn symbolic(f: Poly, g: Poly) -> Self {
        let df = f.derivative();
        let d2f = df.derivative();
        let d3f = d2f.derivative();
        FluxTables {
            int_f: f.antiderivative(),
            int_g: g.antiderivative(),
            dg: g.derivative(),
            f,
            df,
            d2f,
            d3f,
            g,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    preset: Preset,
    k: f64,
    t: FluxTables,
    /// H(u) = int_0^u (2 g(s) + f''(s) s^2) ds
    h: Poly,
}

impl FluxModel {
    pub fn make_preset(preset: Preset, k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Config(format!("dispersion parameter k = {k} is not finite")));
        }
        let (f, g) = match preset {
            Preset::CamassaHolm | Preset::TwoComponentCh => {
                (Poly::new(vec![0.0, 0.0, 0.5]), Poly::new(vec![0.0, k, 1.0]))
            }
            Preset::HyperelasticRod => (
                Poly::new(vec![0.0, 0.0, 0.5 * k]),
                Poly::new(vec![0.0, 0.0, 0.5 * (3.0 - k)]),
            ),
            Preset::ConstantinLannes => (
                Poly::new(vec![0.0, -1.0, -7.0]),
                Poly::new(vec![0.0, 2.0, 10.0, -2.0, 3.0]),
            ),
            Preset::CustomPolynomial => {
                return Err(Error::Config(
                    "custom_polynomial needs coefficient lists; use FluxModel::custom".into(),
                ))
            }
        };
        Ok(Self::build(preset, k, FluxTables::symbolic(f, g)))
    }

    /// Polynomial flux pair from ascending coefficient lists.
    pub fn custom(f_coeffs: Vec<f64>, g_coeffs: Vec<f64>) -> Result<Self> {
        Self::from_tables(FluxTables::symbolic(Poly::new(f_coeffs), Poly::new(g_coeffs)))
    }

    pub fn from_tables(tables: FluxTables) -> Result<Self> {
        let all = [
            &tables.f, &tables.df, &tables.d2f, &tables.d3f, &tables.g, &tables.dg, &tables.int_f,
            &tables.int_g,
        ];
        if all.iter().any(|p| p.coeffs().iter().any(|c| !c.is_finite())) {
            return Err(Error::Config("non-finite polynomial coefficient".into()));
        }
        if tables.g.constant_term() != 0.0 {
            return Err(Error::Config(format!(
                "g(0) must vanish, got g(0) = {}",
                tables.g.constant_term()
            )));
        }
        Ok(Self::build(Preset::CustomPolynomial, 0.0, tables))
    }

    fn build(preset: Preset, k: f64, t: FluxTables) -> Self {
        let s2 = Poly::new(vec![0.0, 0.0, 1.0]);
        let h = t.g.scale(2.0).add(&t.d2f.mul(&s2)).antiderivative();
        FluxModel { preset, k, t, h }
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tables(&self) -> &FluxTables {
        &self.t
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.t.f.eval(u)
    }
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        self.t.df.eval(u)
    }
    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        self.t.d2f.eval(u)
    }
    #[inline]
    pub fn d3f(&self, u: f64) -> f64 {
        self.t.d3f.eval(u)
    }
    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        self.t.g.eval(u)
    }
    #[inline]
    pub fn dg(&self, u: f64) -> f64 {
        self.t.dg.eval(u)
    }
    /// F(u) = int_0^u f
    pub fn int_f(&self, u: f64) -> f64 {
        self.t.int_f.eval(u)
    }
    /// G(u) = int_0^u g
    pub fn int_g(&self, u: f64) -> f64 {
        self.t.int_g.eval(u)
    }

    /// Energy-flux potential H(u) = int_0^u (2 g(s) + f''(s) s^2) ds.
    pub fn eval_h(&self, u: f64) -> f64 {
        self.h.eval(u)
    }

    /// True when f'' is identically one (CH and two-component CH), where
    /// `rho * v * cos^2(w/2)` is constant along each characteristic.
    pub fn has_unit_curvature(&self) -> bool {
        self.t.d2f.coeffs() == [1.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub pair: &'static str,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub checks: Vec<DerivativeCheck>,
    pub tol: f64,
}

impl DerivativeReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= self.tol
    }
}

/// Central-difference audit of every derivative/antiderivative pair.
///
/// Each residual is normalised by `1 + |next derivative| * h` so that the
/// truncation term of the difference quotient does not count against the
/// table.
pub fn check_derivatives(model: &FluxModel, points: &[f64], tol: f64) -> DerivativeReport {
    const H: f64 = 1e-5;
    let t = &model.t;
    let energy_integrand = |u: f64| 2.0 * t.g.eval(u) + t.d2f.eval(u) * u * u;
    let d_energy_integrand =
        |u: f64| 2.0 * t.dg.eval(u) + t.d3f.eval(u) * u * u + 2.0 * t.d2f.eval(u) * u;

    type Sym<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let pairs: Vec<(&'static str, Sym, Sym, Sym)> = vec![
        ("F' = f", Box::new(|u| t.int_f.eval(u)), Box::new(|u| t.f.eval(u)), Box::new(|u| t.df.eval(u))),
        ("f' ", Box::new(|u| t.f.eval(u)), Box::new(|u| t.df.eval(u)), Box::new(|u| t.d2f.eval(u))),
        ("f''", Box::new(|u| t.df.eval(u)), Box::new(|u| t.d2f.eval(u)), Box::new(|u| t.d3f.eval(u))),
        ("f'''", Box::new(|u| t.d2f.eval(u)), Box::new(|u| t.d3f.eval(u)), Box::new(|_| 0.0)),
        ("G' = g", Box::new(|u| t.int_g.eval(u)), Box::new(|u| t.g.eval(u)), Box::new(|u| t.dg.eval(u))),
        ("g'", Box::new(|u| t.g.eval(u)), Box::new(|u| t.dg.eval(u)), Box::new(|_| 0.0)),
        (
            "H' = 2g + f'' u^2",
            Box::new(|u| model.eval_h(u)),
            Box::new(energy_integrand),
            Box::new(d_energy_integrand),
        ),
    ];

    let checks = pairs
        .into_iter()
        .map(|(pair, prim, deriv, next)| {
            let max_residual = points
                .iter()
                .map(|&u| {
                    let fd = (prim(u + H) - prim(u - H)) / (2.0 * H);
                    (deriv(u) - fd).abs() / (1.0 + next(u).abs() * H)
                })
                .fold(0.0, f64::max);
            DerivativeCheck { pair, max_residual }
        })
        .collect();
    DerivativeReport { checks, tol }
}
