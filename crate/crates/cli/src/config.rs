//! Run configuration.
//!
//! Files are flat `key = value` lines with dotted section keys, parsed as
//! TOML (`model.preset = "camassa_holm"`, `grid.n = 4096`, `# comment`).
//! Every key has a default and unknown keys are rejected.

use std::path::{Path, PathBuf};

use camholm::evolution::Numerics;
use camholm::lagrangian::{InitialKind, MIN_NODES};
use camholm::model::Preset;
use camholm::reconstruction::SampleOptions;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub preset: Preset,
    pub k: f64,
    /// Ascending coefficients of `f`, used by `custom_polynomial`.
    pub f_coeffs: Vec<f64>,
    /// Ascending coefficients of `g`, used by `custom_polynomial`.
    pub g_coeffs: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { preset: Preset::CamassaHolm, k: 0.0, f_coeffs: vec![0.0, 0.0, 0.5], g_coeffs: vec![0.0, 0.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub center: f64,
    /// Half distance between the two crests of `peakon_antipeakon`.
    pub separation: f64,
    pub width: f64,
    pub rho_amplitude: f64,
    pub rho_width: f64,
    /// Dam-break density height.
    pub height: f64,
    pub half_width: f64,
    pub smoothing: f64,
    /// CSV with header `x,u,rho`, for `from_file`.
    pub path: Option<PathBuf>,
    /// Largest `|u|`, `|rho|` accepted at the data window edges.
    pub edge_tol: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Gaussian,
            amplitude: 0.5,
            center: 0.0,
            separation: 1.0,
            width: 1.0,
            rho_amplitude: 0.2,
            rho_width: 1.0,
            height: 1.0,
            half_width: 2.0,
            smoothing: 0.5,
            path: None,
            edge_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(alias = "N")]
    pub n: usize,
    pub pad_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x_min: -15.0, x_max: 15.0, n: 4096, pad_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    pub output_every: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_end: 1.0, dt: 1e-3, output_every: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub tan_clamp: f64,
    pub eps_plateau: f64,
    pub substep_cos_threshold: f64,
    /// `cos^2(w/2)` threshold of the breaking detector.
    pub breaking_eps: f64,
    /// Blow-up guard of the Eulerian oracle (`compare`).
    pub oracle_slope_guard: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            tan_clamp: 1e8,
            eps_plateau: 1e-8,
            substep_cos_threshold: 1e-4,
            breaking_eps: 1e-6,
            oracle_slope_guard: camholm::oracle::DEFAULT_SLOPE_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub directory: PathBuf,
    pub write_frames: bool,
    pub write_diagnostics: bool,
    pub x_samples: usize,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig { directory: PathBuf::from("out"), write_frames: true, write_diagnostics: true, x_samples: 1001 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub numerics: NumericsConfig,
    pub outputs: OutputsConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `key` (dotted) to `raw`, parsed as a TOML value when possible and as
/// a bare string otherwise.
fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("`{p}` in `{key}` is not a section"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Parses config text and applies `key=value` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override `{o}` is not of the form key=value")))?;
            set_dotted(&mut table, k, v)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    /// Checks the invariants that do not need the initial data.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let g = &self.grid;
        if g.n < MIN_NODES {
            return bad(format!("grid.n = {} violates N >= {MIN_NODES}", g.n));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max) {
            return bad(format!("grid window [{}, {}] must satisfy x_min < x_max", g.x_min, g.x_max));
        }
        if !(g.pad_tol > 0.0 && g.pad_tol < 1.0) {
            return bad(format!("grid.pad_tol = {} must lie in (0, 1)", g.pad_tol));
        }
        let t = &self.time;
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return bad(format!("time.t_end = {} violates t_end >= 0", t.t_end));
        }
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return bad(format!("time.dt = {} violates dt > 0", t.dt));
        }
        if t.t_end > 0.0 && t.dt > t.t_end {
            return bad(format!("time.dt = {} exceeds time.t_end = {}", t.dt, t.t_end));
        }
        if !(t.output_every > 0.0) {
            return bad(format!("time.output_every = {} must be positive", t.output_every));
        }
        let n = &self.numerics;
        for (name, v) in [
            ("numerics.tan_clamp", n.tan_clamp),
            ("numerics.eps_plateau", n.eps_plateau),
            ("numerics.substep_cos_threshold", n.substep_cos_threshold),
            ("numerics.breaking_eps", n.breaking_eps),
            ("numerics.oracle_slope_guard", n.oracle_slope_guard),
            ("initial.edge_tol", self.initial.edge_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.outputs.x_samples < 2 {
            return bad("outputs.x_samples must be at least 2".into());
        }
        let i = &self.initial;
        if matches!(i.kind, InitialKind::Gaussian) && !(i.width > 0.0 && i.rho_width > 0.0) {
            return bad("initial.width and initial.rho_width must be positive".into());
        }
        if matches!(i.kind, InitialKind::DambreakRho) && !(i.smoothing > 0.0 && i.half_width > 0.0) {
            return bad("initial.smoothing and initial.half_width must be positive".into());
        }
        if matches!(i.kind, InitialKind::FromFile) && i.path.is_none() {
            return bad("initial.kind = from_file requires initial.path".into());
        }
        Ok(())
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            tan_max: self.numerics.tan_clamp,
            substep_cos_threshold: self.numerics.substep_cos_threshold,
            ..Numerics::default()
        }
    }

    pub fn sample_options(&self) -> SampleOptions {
        SampleOptions { eps_plateau: self.numerics.eps_plateau, ..SampleOptions::default() }
    }

    /// Resolved config as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn dotted_keys_and_comments() {
        let text = "# peakon run\nmodel.preset = \"hyperelastic_rod\"\nmodel.k = 0.5\ninitial.kind = \"peakon\"\ngrid.N = 512\n";
        let c = RunConfig::parse(text, &[]).unwrap();
        assert_eq!(c.model.preset, Preset::HyperelasticRod);
        assert_eq!(c.model.k, 0.5);
        assert_eq!(c.initial.kind, InitialKind::Peakon);
        assert_eq!(c.grid.n, 512);
    }

    #[test]
    fn overrides_accept_bare_strings() {
        let c = RunConfig::parse(
            "",
            &["model.preset=constantin_lannes".into(), "time.dt = 0.01".into(), "outputs.directory=runs/a".into()],
        )
        .unwrap();
        assert_eq!(c.model.preset, Preset::ConstantinLannes);
        assert_eq!(c.time.dt, 0.01);
        assert_eq!(c.outputs.directory, PathBuf::from("runs/a"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = RunConfig::parse("grid.nodes = 10\n", &[]).unwrap_err();
        assert!(e.to_string().contains("nodes"), "{e}");
        assert!(RunConfig::parse("colour = 1\n", &[]).is_err());
        assert!(RunConfig::parse("", &["model.kk=1".into()]).is_err());
    }

    #[test]
    fn invariants_are_named() {
        let e = RunConfig::parse("grid.n = 8\n", &[]).unwrap_err();
        assert!(e.to_string().contains("N >= 16"), "{e}");
        assert!(RunConfig::parse("time.dt = 0\n", &[]).unwrap_err().to_string().contains("dt > 0"));
        assert!(RunConfig::parse("time.t_end = -1\n", &[]).unwrap_err().to_string().contains("t_end >= 0"));
        assert!(RunConfig::parse("grid.pad_tol = 1.5\n", &[]).unwrap_err().to_string().contains("(0, 1)"));
    }

    #[test]
    fn malformed_override() {
        assert!(RunConfig::parse("", &["grid.n".into()]).is_err());
        assert!(RunConfig::parse("", &["grid..n=3".into()]).is_err());
        assert!(RunConfig::parse("", &["grid.n.x=3".into()]).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.initial.path = Some(PathBuf::from("data.csv"));
        c.initial.kind = InitialKind::FromFile;
        assert_eq!(RunConfig::parse(&c.to_toml(), &[]).unwrap(), c);
    }
}
