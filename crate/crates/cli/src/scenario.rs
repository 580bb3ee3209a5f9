//! Turns a [`RunConfig`] into a model, initial data and a Lagrangian state.

use std::sync::Arc;

use camholm::lagrangian::{
    energy_e0, initialize, DamBreak, Gaussian, InitialData, InitialKind, Peakon, PeakonAntipeakon, Profile,
    Sampled, ZMap, Zero,
};
use camholm::nonlocal::truncation_padding;
use camholm::{FluxModel, LagrangianState, Preset};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub model: FluxModel,
    /// Data on the padded computational window.
    pub initial: InitialData,
    /// `[x_min, x_max]` from the config.
    pub data_window: (f64, f64),
    pub padding: f64,
    /// `int (u0^2 + u0_x^2 + rho0^2) dx` by Gauss-Legendre quadrature.
    pub e0_quadrature: f64,
    pub state: LagrangianState,
    pub zmap: ZMap,
}

pub fn build_model(config: &RunConfig) -> CliResult<FluxModel> {
    let m = &config.model;
    Ok(match m.preset {
        Preset::CustomPolynomial => FluxModel::custom(m.f_coeffs.clone(), m.g_coeffs.clone())?,
        p => FluxModel::make_preset(p, m.k)?,
    })
}

pub fn build_profile(config: &RunConfig) -> CliResult<Arc<dyn Profile>> {
    let i = &config.initial;
    Ok(match i.kind {
        InitialKind::Zero => Arc::new(Zero),
        InitialKind::Gaussian => Arc::new(Gaussian {
            amplitude: i.amplitude,
            center: i.center,
            width: i.width,
            rho_amplitude: i.rho_amplitude,
            rho_width: i.rho_width,
        }),
        InitialKind::Peakon => Arc::new(Peakon {
            amplitude: i.amplitude,
            center: i.center,
            rho_amplitude: i.rho_amplitude,
            rho_width: i.rho_width,
        }),
        InitialKind::PeakonAntipeakon => Arc::new(PeakonAntipeakon {
            amplitude: i.amplitude,
            center: i.center,
            half_separation: i.separation,
        }),
        InitialKind::DambreakRho => Arc::new(DamBreak {
            height: i.height,
            center: i.center,
            half_width: i.half_width,
            smoothing: i.smoothing,
        }),
        InitialKind::FromFile => {
            let path = i.path.as_ref().ok_or_else(|| CliError::Config("initial.path is required".into()))?;
            Arc::new(Sampled::from_csv(path)?)
        }
        InitialKind::Custom => {
            return Err(CliError::Config(
                "initial.kind = custom is only available through the library API".into(),
            ))
        }
    })
}

/// Validates the data on the configured window, pads the window by the
/// kernel truncation length and builds the initial Lagrangian state.
pub fn build_scenario(config: &RunConfig) -> CliResult<Scenario> {
    config.validate()?;
    let model = build_model(config)?;
    let profile = build_profile(config)?;
    let g = &config.grid;
    let data_window = (g.x_min, g.x_max);
    let data = InitialData::new(config.initial.kind, data_window, profile.clone())?;
    data.validate(config.initial.edge_tol)?;
    let e0_data = energy_e0(&data)?;
    let padding = truncation_padding(e0_data, 1.0, g.pad_tol)?;
    let initial = InitialData::new(config.initial.kind, (g.x_min - padding, g.x_max + padding), profile)?;
    initial.validate(config.initial.edge_tol)?;
    let e0_quadrature = energy_e0(&initial)?;
    let (state, zmap) = initialize(&initial, g.n)?;
    Ok(Scenario { config: config.clone(), model, initial, data_window, padding, e0_quadrature, state, zmap })
}

impl Scenario {
    /// Uniform sample grid over the data window, clipped to the current
    /// characteristic range.
    pub fn sample_grid(&self, state: &LagrangianState, n: usize) -> Vec<f64> {
        let lo = self.data_window.0.max(state.x[0]);
        let hi = self.data_window.1.min(state.x[state.len() - 1]);
        let n = n.max(2);
        let dx = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * dx }).collect()
    }
}
