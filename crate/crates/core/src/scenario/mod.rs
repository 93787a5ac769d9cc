//! Scenario configuration: JSON loading, the preset catalogue, initial
//! data recipes and the file outputs of a run.

mod output;
mod presets;
mod sweep;

pub use output::{
    check_run_dir, run_scenario, write_profile_csv, CheckReport, Manifest, RunStatus, ScenarioOutcome, PROFILE_COLUMNS,
};
pub use presets::{preset, PRESET_NAMES};
pub use sweep::{cartesian, dir_name, set_path, with_overrides, SweepAxis};

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analytic::{analytic_pressure, AnalyticError, AnalyticSetup};
use crate::grid::{density_from_pressure, FieldState, Grid1D, GridError, GridFunction};
use crate::kinetics::{GrowthSpec, KineticsError, ModelParameters};
use crate::solver::{
    pressure_gradient_velocity, read_checkpoint, solve_nutrient_quasistatic, BoundaryMode, CheckpointError,
    SolverConfig, SolverError,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config error at `{location}`: {message}")]
    Config { location: String, message: String },
    #[error("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "))]
    UnknownPreset { name: String },
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("checkpoint {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
}

/// Normal-cell fraction `μ₀(x)` of the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FractionProfile {
    Constant {
        value: f64,
    },
    /// The well-mixed equilibrium `μ*` of the constant transition rates.
    Equilibrium,
    /// `0.5 + 0.5·cos(2πx/R0)`, clipped to `[0, 1]`.
    Cosine,
    /// Piecewise-linear table, held constant outside its range.
    Table {
        x: Vec<f64>,
        mu: Vec<f64>,
    },
}

impl FractionProfile {
    fn validate(&self) -> Result<(), String> {
        match self {
            FractionProfile::Constant { value } if !(0.0..=1.0).contains(value) => {
                Err(format!("mu0 = {value} must lie in [0, 1]"))
            }
            FractionProfile::Table { x, mu } => {
                if x.is_empty() || x.len() != mu.len() {
                    return Err("mu0 table needs equally long, non-empty x and mu".into());
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("mu0 table x must be strictly increasing".into());
                }
                if mu.iter().any(|m| !(0.0..=1.0).contains(m)) {
                    return Err("mu0 table values must lie in [0, 1]".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn evaluator(&self, params: &ModelParameters, r0: f64) -> Result<Box<dyn Fn(f64) -> f64 + '_>, String> {
        Ok(match self {
            FractionProfile::Constant { value } => {
                let v = *value;
                Box::new(move |_| v)
            }
            FractionProfile::Equilibrium => {
                let eq = params
                    .equilibrium()
                    .ok_or("mu0 = equilibrium needs constant transition rates")?;
                Box::new(move |_| eq.mu_star)
            }
            FractionProfile::Cosine => {
                Box::new(move |x| (0.5 + 0.5 * (2.0 * std::f64::consts::PI * x / r0).cos()).clamp(0.0, 1.0))
            }
            FractionProfile::Table { x, mu } => Box::new(move |t| interpolate(x, mu, t)),
        })
    }
}

fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let k = xs.partition_point(|&x| x < t);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[k - 1];
    }
    let w = (t - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] * (1.0 - w) + ys[k] * w
}

fn default_mu0_one() -> FractionProfile {
    FractionProfile::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Pressure from the constant-fraction closed form on `(−R0, R0)`.
    AnalyticPressure {
        #[serde(rename = "R0")]
        r0: f64,
        mu0: FractionProfile,
        /// Fraction used in the closed-form pressure; defaults to `μ*` when
        /// the rates are constant, else to `μ₀` if constant, else 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pressure_mu: Option<f64>,
    },
    /// `p = 1 − cosh x / cosh R` on `(−R, R)`, nutrient `c ≡ c_B`.
    CustomCosh {
        #[serde(rename = "R")]
        r: f64,
        #[serde(default = "default_mu0_one")]
        mu0: FractionProfile,
    },
    /// Restart from a checkpoint file, relative to the config file.
    Checkpoint { path: PathBuf },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_true")]
    pub timeseries: bool,
    /// Snapshot times for profile CSVs; empty means the final time only.
    #[serde(default)]
    pub profile_times: Vec<f64>,
    #[serde(default)]
    pub final_checkpoint: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            timeseries: true,
            profile_times: Vec::new(),
            final_checkpoint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelParameters,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub t_end: f64,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |location: &str, message: String| {
            Err(ScenarioError::Config {
                location: location.into(),
                message,
            })
        };
        self.model.validate()?;
        self.solver.validate()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return err("t_end", format!("must be non-negative, got {}", self.t_end));
        }
        if let Some(t) = self
            .outputs
            .profile_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end))
        {
            return err("outputs.profile_times", format!("{t} lies outside [0, t_end]"));
        }
        match &self.initial {
            InitialData::AnalyticPressure { r0, mu0, pressure_mu } => {
                if !(*r0 > 0.0) {
                    return err("initial.R0", format!("must be positive, got {r0}"));
                }
                if let Some(m) = pressure_mu {
                    if !(0.0..=1.0).contains(m) {
                        return err("initial.pressure_mu", format!("{m} must lie in [0, 1]"));
                    }
                }
                mu0.validate().or_else(|m| err("initial.mu0", m))?;
            }
            InitialData::CustomCosh { r, mu0 } => {
                if !(*r > 0.0) {
                    return err("initial.R", format!("must be positive, got {r}"));
                }
                mu0.validate().or_else(|m| err("initial.mu0", m))?;
            }
            InitialData::Checkpoint { .. } => {}
        }
        Ok(())
    }

    /// Parses a config document; `{"preset": NAME}` selects a catalogue entry.
    pub fn from_json_value(value: Value, source: &str) -> Result<Self, ScenarioError> {
        if let Value::Object(map) = &value {
            if let Some(name) = map.get("preset") {
                if map.len() != 1 {
                    let extra: Vec<&str> = map.keys().map(String::as_str).filter(|k| *k != "preset").collect();
                    return Err(ScenarioError::Config {
                        location: source.to_string(),
                        message: format!("a preset reference takes no other keys, found {}", extra.join(", ")),
                    });
                }
                let name = name.as_str().ok_or_else(|| ScenarioError::Config {
                    location: "preset".into(),
                    message: "preset name must be a string".into(),
                })?;
                return preset(name);
            }
        }
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let location = e.path().to_string();
            ScenarioError::Config {
                location,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let value: Value = serde_json::from_str(text).map_err(|source| ScenarioError::Json {
            path: "<string>".into(),
            source,
        })?;
        Self::from_json_value(value, "<string>")
    }
}

/// Loads a config file. Checkpoint paths are resolved against its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let file = File::open(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_reader(BufReader::new(file)).map_err(|source| ScenarioError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = ScenarioConfig::from_json_value(value, &path.display().to_string())?;
    if let InitialData::Checkpoint { path: ck } = &mut cfg.initial {
        if ck.is_relative() {
            if let Some(dir) = path.parent() {
                *ck = dir.join(&*ck);
            }
        }
        if !ck.exists() {
            return Err(ScenarioError::Config {
                location: "initial.path".into(),
                message: format!("checkpoint {} does not exist", ck.display()),
            });
        }
    }
    Ok(cfg)
}

fn config_error(location: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Config {
        location: location.into(),
        message: message.into(),
    }
}

/// Grid covering `(−half_width, half_width)` plus enlargement padding, or
/// the closed box.
fn initial_grid(solver: &SolverConfig, half_width: f64) -> Result<Grid1D, ScenarioError> {
    match solver.boundary {
        BoundaryMode::PaddedDirichlet => {
            let half = (half_width / solver.dx).ceil() as usize + 2 * solver.enlargement_margin;
            Ok(Grid1D::symmetric(solver.dx, half)?)
        }
        BoundaryMode::NeumannBox { x_min, x_max } => {
            let cells = ((x_max - x_min) / solver.dx).round() as usize + 1;
            Ok(Grid1D::new(x_min, solver.dx, cells)?)
        }
    }
}

fn state_from_pressure(
    cfg: &ScenarioConfig,
    grid: Grid1D,
    pressure: impl Fn(f64) -> f64,
    mu0: &dyn Fn(f64) -> f64,
) -> Result<FieldState, ScenarioError> {
    let gamma = cfg.model.gamma;
    let n: Vec<f64> = grid
        .nodes()
        .map(|x| density_from_pressure(pressure(x), gamma))
        .collect();
    let n1: Vec<f64> = grid.nodes().zip(&n).map(|(x, n)| mu0(x) * n).collect();
    let n2: Vec<f64> = grid.nodes().zip(&n).map(|(x, n)| (1.0 - mu0(x)) * n).collect();
    let n1 = GridFunction::regular(n1);
    let n2 = GridFunction::regular(n2);
    let c = match cfg.solver.boundary {
        BoundaryMode::PaddedDirichlet => solve_nutrient_quasistatic(&n1, &n2, grid.dx(), &cfg.model, &cfg.solver)?,
        BoundaryMode::NeumannBox { .. } => GridFunction::regular(vec![cfg.model.c_boundary; grid.n_cells()]),
    };
    let u = pressure_gradient_velocity(&n1, &n2, grid.dx(), gamma);
    Ok(FieldState::new(
        grid,
        n1.into_values(),
        n2.into_values(),
        c.into_values(),
        u.into_values(),
        0.0,
    )?)
}

pub fn build_initial_state(cfg: &ScenarioConfig) -> Result<FieldState, ScenarioError> {
    match &cfg.initial {
        InitialData::AnalyticPressure { r0, mu0, pressure_mu } => {
            let GrowthSpec::Proportional { g } = cfg.model.growth else {
                return Err(config_error(
                    "initial",
                    "analytic_pressure initial data needs proportional growth G(c) = g·c",
                ));
            };
            let mu_p = pressure_mu
                .or_else(|| cfg.model.equilibrium().map(|e| e.mu_star))
                .or(match mu0 {
                    FractionProfile::Constant { value } => Some(*value),
                    _ => None,
                })
                .unwrap_or(1.0);
            let setup = AnalyticSetup {
                mu: mu_p,
                g,
                a: cfg.model.supply,
                d: cfg.model.extra_death,
                c_b: cfg.model.c_boundary,
                r0: *r0,
            };
            setup.validate()?;
            let grid = initial_grid(&cfg.solver, *r0)?;
            let mu = mu0
                .evaluator(&cfg.model, *r0)
                .map_err(|m| config_error("initial.mu0", m))?;
            let r = *r0;
            state_from_pressure(
                cfg,
                grid,
                |x| {
                    if x.abs() < r {
                        analytic_pressure(x, r, &setup).unwrap_or(0.0).max(0.0)
                    } else {
                        0.0
                    }
                },
                &*mu,
            )
        }
        InitialData::CustomCosh { r, mu0 } => {
            let grid = initial_grid(&cfg.solver, *r)?;
            let mu = mu0
                .evaluator(&cfg.model, *r)
                .map_err(|m| config_error("initial.mu0", m))?;
            let r = *r;
            state_from_pressure(
                cfg,
                grid,
                |x| if x.abs() < r { 1.0 - x.cosh() / r.cosh() } else { 0.0 },
                &*mu,
            )
        }
        InitialData::Checkpoint { path } => {
            let file = File::open(path).map_err(|source| ScenarioError::Io {
                path: path.clone(),
                source,
            })?;
            let (state, gamma) = read_checkpoint(BufReader::new(file)).map_err(|source| ScenarioError::Checkpoint {
                path: path.clone(),
                source,
            })?;
            if gamma != cfg.model.gamma {
                log::warn!(
                    "checkpoint {} was written with gamma = {gamma}, config uses {}",
                    path.display(),
                    cfg.model.gamma
                );
            }
            if (state.grid.dx() - cfg.solver.dx).abs() > 1e-12 * cfg.solver.dx {
                return Err(config_error(
                    "solver.dx",
                    format!(
                        "checkpoint spacing {} differs from configured {}",
                        state.grid.dx(),
                        cfg.solver.dx
                    ),
                ));
            }
            Ok(state)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::density_fraction_field;

    #[test]
    fn equilibrium_split_is_exact() {
        let cfg = preset("fig-s4limit-gamma80").unwrap();
        let s = build_initial_state(&cfg).unwrap();
        let mu_star = cfg.model.equilibrium().unwrap().mu_star;
        let mu = density_fraction_field(&s, 1e-8);
        for m in mu.defined() {
            assert!((m - mu_star).abs() < 1e-15);
        }
        let n_max = s.total_density().values().iter().cloned().fold(0.0, f64::max);
        assert!(n_max <= 1.0 + 1e-6);
        assert!(n_max > 0.95);
    }

    #[test]
    fn cosh_profile_center_pressure() {
        let cfg = preset("neumann-autohelp-k2").unwrap();
        let s = build_initial_state(&cfg).unwrap();
        let i0 = s.grid.nodes().position(|x| x.abs() < 1e-12).unwrap();
        let p = s.pressure(cfg.model.gamma).values()[i0];
        assert!((p - (1.0 - 1.0 / 4f64.cosh())).abs() < 1e-12);
        assert!(s.c.values().iter().all(|&c| c == 1.0));
        assert!(s.n2.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unknown_key_is_located() {
        let mut v = serde_json::to_value(preset("fig-s4limit-gamma80").unwrap()).unwrap();
        let model = v["model"].as_object_mut().unwrap();
        let gamma = model.remove("gamma").unwrap();
        model.insert("gamm".into(), gamma);
        let err = ScenarioConfig::from_json_value(v, "test").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("gamm"), "{text}");
        assert!(text.contains("model"), "{text}");
    }

    #[test]
    fn preset_reference_resolves() {
        let cfg = ScenarioConfig::from_json_str(r#"{"preset": "fig-s4limit-gamma80"}"#).unwrap();
        assert_eq!(cfg, preset("fig-s4limit-gamma80").unwrap());
        assert!(matches!(
            ScenarioConfig::from_json_str(r#"{"preset": "nope"}"#),
            Err(ScenarioError::UnknownPreset { .. })
        ));
    }

    #[test]
    fn presets_round_trip_through_json() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn table_profile_interpolates() {
        assert_eq!(interpolate(&[0.0, 1.0], &[0.2, 0.6], 0.5), 0.4);
        assert_eq!(interpolate(&[0.0, 1.0], &[0.2, 0.6], -3.0), 0.2);
        assert_eq!(interpolate(&[0.0, 1.0], &[0.2, 0.6], 3.0), 0.6);
    }
}
