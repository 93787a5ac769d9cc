//! Prediction–correction time stepper for the two-species compressible model.
//!
//! One step advances `(u, n₁, n₂, c)` in this order:
//!
//! 1. implicit velocity prediction `u*` from the pressure evolution equation,
//! 2. upwind/MUSCL transport of both species with `u*` and a semi-implicit
//!    2×2 reaction solve per cell,
//! 3. `u` reset to the discrete pressure gradient of the new density,
//! 4. nutrient update (elliptic on the support, or one backward-Euler step
//!    with boundary input flux).
//!
//! In free-space runs the grid is padded with empty cells and enlarged when
//! the support approaches either end.

mod checkpoint;
mod tridiag;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
pub use tridiag::{TridiagonalSystem, ZeroPivot};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    density_fraction_field, nutrient_bound_check, support_components, support_info, Sample, TimeSeries,
};
use crate::grid::{flux_divergence, pressure_from_density, staggered_density, FieldState, GridFunction};
use crate::kinetics::{ConsumptionSpec, ModelParameters, NutrientMode};

/// Densities below this after correction are logged as violations.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-10;
/// Slack on the normal-cell fraction bounds `[0, 1]`.
pub const FRACTION_TOL: f64 = 1e-8;
/// Slack on `c ≤ max{c_B, c₀}` in quasi-static runs.
pub const NUTRIENT_BOUND_TOL: f64 = 1e-6;
const MAX_LOGGED_EVENTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryMode {
    /// Free space: zero-density padding around the tumor, enlarged on demand.
    PaddedDirichlet,
    /// Closed box `[x_min, x_max]` with no-flux walls.
    NeumannBox { x_min: f64, x_max: f64 },
}

fn default_threshold() -> f64 {
    1e-8
}

fn default_margin() -> usize {
    25
}

fn default_sample_interval() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub dx: f64,
    #[serde(default = "default_threshold")]
    pub support_threshold: f64,
    /// Cells of empty padding kept between the support and the grid ends.
    #[serde(default = "default_margin")]
    pub enlargement_margin: usize,
    pub boundary: BoundaryMode,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
}

impl SolverConfig {
    pub fn padded(dx: f64, dt: f64) -> Self {
        Self {
            dt,
            dx,
            support_threshold: default_threshold(),
            enlargement_margin: default_margin(),
            boundary: BoundaryMode::PaddedDirichlet,
            sample_interval: default_sample_interval(),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &'static str| Err(SolverError::InvalidConfig(what));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad("dx must be positive");
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1e-2) {
            return bad("support_threshold must lie in (0, 1e-2)");
        }
        if self.enlargement_margin < 3 {
            return bad("enlargement_margin must be at least 3");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sample_interval must be positive");
        }
        if let BoundaryMode::NeumannBox { x_min, x_max } = self.boundary {
            if !(x_max - x_min >= 3.0 * self.dx) {
                return bad("box must span at least three cells");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("velocity system has a zero pivot at staggered node {index}")]
    SingularVelocity { index: usize },
    #[error("nutrient system has a zero pivot at row {index}")]
    SingularNutrient { index: usize },
    #[error("reaction 2x2 system is singular at cell {index} (det = {det:e})")]
    SingularReaction { index: usize, det: f64 },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("boundary mode {boundary:?} is incompatible with nutrient mode {nutrient:?}")]
    ModeMismatch {
        boundary: BoundaryMode,
        nutrient: NutrientMode,
    },
    #[error("field lengths do not match the grid")]
    GridMismatch,
}

fn check_finite(values: &[f64], what: &'static str) -> Result<(), SolverError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(SolverError::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// `n^{γ−2}`, the weight of the velocity operator; zero outside the tumor
/// unless `γ = 2`.
fn velocity_weight(n: f64, gamma: f64) -> f64 {
    if n > 0.0 {
        n.powf(gamma - 2.0)
    } else if gamma == 2.0 {
        1.0
    } else {
        0.0
    }
}

/// Implicit prediction of the staggered velocity `u*`. The two outermost
/// staggered nodes are pinned to zero.
pub fn predict_velocity(
    state: &FieldState,
    params: &ModelParameters,
    cfg: &SolverConfig,
) -> Result<GridFunction, SolverError> {
    let grid = &state.grid;
    let dx = grid.dx();
    let dt = cfg.dt;
    let gamma = params.gamma;
    let n1 = state.n1.values();
    let n2 = state.n2.values();
    let c = state.c.values();
    let n_total = state.total_density();
    let n = n_total.values();
    let n_half = staggered_density(&n_total);
    let n_half = n_half.values();
    let u = state.u.values();

    let weight: Vec<f64> = n.iter().map(|&v| velocity_weight(v, gamma)).collect();
    let source: Vec<f64> = (0..n.len())
        .map(|i| n1[i] * params.growth_normal(c[i], n[i]) + n2[i] * params.growth_autophagic(c[i], n[i]))
        .collect();

    let m = grid.n_staggered();
    let beta = gamma * dt / (dx * dx);
    let eta = gamma * dt / dx;
    let mut sys = TridiagonalSystem::with_len(m);
    for k in 0..m {
        if k == 0 || k == m - 1 {
            sys.diag[k] = 1.0;
            sys.rhs[k] = 0.0;
            continue;
        }
        let (left, right) = (weight[k], weight[k + 1]);
        sys.diag[k] = 1.0 + beta * (left + right) * n_half[k];
        sys.sup[k] = -beta * right * n_half[k + 1];
        sys.sub[k] = -beta * left * n_half[k - 1];
        sys.rhs[k] = u[k] - eta * (right * source[k + 1] - left * source[k]);
    }
    let u_star = sys
        .solve()
        .map_err(|ZeroPivot { index }| SolverError::SingularVelocity { index })?;
    check_finite(&u_star, "predicted velocity")?;
    Ok(GridFunction::staggered(u_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Normal,
    Autophagic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub n1: GridFunction,
    pub n2: GridFunction,
    /// `dx·Σ|negative part|` removed by clamping.
    pub clamped_mass: f64,
    /// Clamped values below `−NEGATIVE_DENSITY_TOL`.
    pub violations: Vec<(Species, usize, f64)>,
}

/// Transport both species with `u*`, then solve the per-cell reaction
/// system with growth and transition rates evaluated at the lagged nutrient.
pub fn correct_densities(
    state: &FieldState,
    u_star: &GridFunction,
    params: &ModelParameters,
    cfg: &SolverConfig,
) -> Result<Correction, SolverError> {
    let dx = state.grid.dx();
    let dt = cfg.dt;
    let inv_dt = 1.0 / dt;
    let div1 = flux_divergence(&state.n1, u_star, dx);
    let div2 = flux_divergence(&state.n2, u_star, dx);
    let n1 = state.n1.values();
    let n2 = state.n2.values();
    let c = state.c.values();
    let len = n1.len();
    let mut out1 = Vec::with_capacity(len);
    let mut out2 = Vec::with_capacity(len);
    let mut clamped = 0.0;
    let mut violations = Vec::new();
    for i in 0..len {
        let n = n1[i] + n2[i];
        let g1 = params.growth_normal(c[i], n);
        let g2 = params.growth_autophagic(c[i], n);
        let (k1, k2) = params.transitions.eval(c[i]);
        let a11 = inv_dt - g1 + k1;
        let a12 = -k2;
        let a21 = -k1;
        let a22 = inv_dt - g2 + k2;
        let b1 = n1[i] * inv_dt - div1[i];
        let b2 = n2[i] * inv_dt - div2[i];
        let det = a11 * a22 - a12 * a21;
        let scale = (a11 * a22).abs() + (a12 * a21).abs();
        if !(det.abs() > 1e-14 * scale) {
            return Err(SolverError::SingularReaction { index: i, det });
        }
        let mut x1 = (b1 * a22 - a12 * b2) / det;
        let mut x2 = (a11 * b2 - a21 * b1) / det;
        for (species, x) in [(Species::Normal, &mut x1), (Species::Autophagic, &mut x2)] {
            if *x < 0.0 {
                if *x < -NEGATIVE_DENSITY_TOL {
                    violations.push((species, i, *x));
                }
                clamped -= *x;
                *x = 0.0;
            }
        }
        out1.push(x1);
        out2.push(x2);
    }
    check_finite(&out1, "normal-cell density")?;
    check_finite(&out2, "autophagic-cell density")?;
    Ok(Correction {
        n1: GridFunction::regular(out1),
        n2: GridFunction::regular(out2),
        clamped_mass: clamped * dx,
        violations,
    })
}

/// Elliptic nutrient solve on each support component with `c = c_B` on the
/// first cell outside it; `c = c_B` everywhere off the support.
pub fn solve_nutrient_quasistatic(
    n1: &GridFunction,
    n2: &GridFunction,
    dx: f64,
    params: &ModelParameters,
    cfg: &SolverConfig,
) -> Result<GridFunction, SolverError> {
    let ConsumptionSpec::Linear = params.consumption;
    let c_b = params.c_boundary;
    let n: Vec<f64> = n1.values().iter().zip(n2.values()).map(|(a, b)| a + b).collect();
    let mut c = vec![c_b; n.len()];
    let components = support_components(&n, cfg.support_threshold);
    if components.is_empty() {
        log::debug!("quasi-static nutrient: empty support, c = c_B everywhere");
        return Ok(GridFunction::regular(c));
    }
    let inv_dx2 = 1.0 / (dx * dx);
    for (l, r) in components {
        let len = r - l + 1;
        let mut sys = TridiagonalSystem::with_len(len);
        for row in 0..len {
            let i = l + row;
            sys.diag[row] = 2.0 * inv_dx2 + n[i];
            sys.sub[row] = -inv_dx2;
            sys.sup[row] = -inv_dx2;
            sys.rhs[row] = params.supply * n2.values()[i];
        }
        sys.rhs[0] += c_b * inv_dx2;
        sys.rhs[len - 1] += c_b * inv_dx2;
        let sol = sys
            .solve()
            .map_err(|ZeroPivot { index }| SolverError::SingularNutrient { index: l + index })?;
        c[l..=r].copy_from_slice(&sol);
    }
    check_finite(&c, "nutrient")?;
    Ok(GridFunction::regular(c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NutrientStep {
    pub c: GridFunction,
    pub clamped: f64,
    pub violations: Vec<(usize, f64)>,
}

/// One backward-Euler step of the parabolic nutrient equation. The two end
/// rows impose the inward boundary flux `(c_0 − c_1)/dx = (c_N − c_{N−1})/dx = λ`.
pub fn step_nutrient_neumann(
    c: &GridFunction,
    n1: &GridFunction,
    n2: &GridFunction,
    lambda_now: f64,
    dx: f64,
    params: &ModelParameters,
    cfg: &SolverConfig,
) -> Result<NutrientStep, SolverError> {
    let ConsumptionSpec::Linear = params.consumption;
    let len = c.len();
    let inv_dt = 1.0 / cfg.dt;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut sys = TridiagonalSystem::with_len(len);
    sys.diag[0] = 1.0;
    sys.sup[0] = -1.0;
    sys.rhs[0] = lambda_now * dx;
    sys.diag[len - 1] = 1.0;
    sys.sub[len - 1] = -1.0;
    sys.rhs[len - 1] = lambda_now * dx;
    for i in 1..len - 1 {
        let n = n1.values()[i] + n2.values()[i];
        sys.diag[i] = inv_dt + 2.0 * inv_dx2 + n;
        sys.sub[i] = -inv_dx2;
        sys.sup[i] = -inv_dx2;
        sys.rhs[i] = c.values()[i] * inv_dt + params.supply * n2.values()[i];
    }
    let mut out = sys
        .solve()
        .map_err(|ZeroPivot { index }| SolverError::SingularNutrient { index })?;
    check_finite(&out, "nutrient")?;
    let mut clamped = 0.0;
    let mut violations = Vec::new();
    for (i, v) in out.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -NEGATIVE_DENSITY_TOL {
                violations.push((i, *v));
            }
            clamped -= *v;
            *v = 0.0;
        }
    }
    Ok(NutrientStep {
        c: GridFunction::regular(out),
        clamped: clamped * dx,
        violations,
    })
}

/// Extends the grid by `2·margin` cells on each side whose support comes
/// within `margin` cells of the end. New cells are empty with `c = c_B`.
pub fn enlarge_domain_if_needed(state: &FieldState, cfg: &SolverConfig, c_boundary: f64) -> FieldState {
    if !matches!(cfg.boundary, BoundaryMode::PaddedDirichlet) {
        return state.clone();
    }
    let n = state.total_density();
    let components = support_components(n.values(), cfg.support_threshold);
    let (Some(first), Some(last)) = (components.first(), components.last()) else {
        return state.clone();
    };
    let margin = cfg.enlargement_margin;
    let cells = state.grid.n_cells();
    let left = if first.0 < margin { 2 * margin } else { 0 };
    let right = if cells - 1 - last.1 < margin { 2 * margin } else { 0 };
    if left == 0 && right == 0 {
        return state.clone();
    }
    log::debug!("enlarging grid at t = {}: +{left} left, +{right} right", state.t);
    FieldState {
        grid: state.grid.extended(left, right),
        n1: state.n1.padded(left, right, 0.0),
        n2: state.n2.padded(left, right, 0.0),
        c: state.c.padded(left, right, c_boundary),
        u: state.u.padded(left, right, 0.0),
        t: state.t,
    }
}

/// `u_{i+1/2} = −(p_{i+1} − p_i)/dx`.
pub fn pressure_gradient_velocity(n1: &GridFunction, n2: &GridFunction, dx: f64, gamma: f64) -> GridFunction {
    let p: Vec<f64> = n1
        .values()
        .iter()
        .zip(n2.values())
        .map(|(a, b)| pressure_from_density(a + b, gamma))
        .collect();
    GridFunction::staggered(p.windows(2).map(|w| -(w[1] - w[0]) / dx).collect())
}

fn check_modes(params: &ModelParameters, cfg: &SolverConfig) -> Result<(), SolverError> {
    match (cfg.boundary, params.nutrient) {
        (BoundaryMode::PaddedDirichlet, NutrientMode::QuasiStaticDirichlet)
        | (BoundaryMode::NeumannBox { .. }, NutrientMode::DynamicNeumann { .. }) => Ok(()),
        (boundary, nutrient) => Err(SolverError::ModeMismatch { boundary, nutrient }),
    }
}

/// Everything one step produces besides the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: FieldState,
    pub clamped_density_mass: f64,
    pub clamped_nutrient_mass: f64,
    pub density_violations: Vec<(Species, usize, f64)>,
    pub nutrient_violations: Vec<(usize, f64)>,
    /// `max|u*|·dt/dx`.
    pub cfl: f64,
    /// `|dx·Σ(n'−n)/dt − dx·Σ(G₁(c')n₁' + G₂(c')n₂')|` with the post-step nutrient.
    pub mass_balance_residual: f64,
}

/// Advances one step of size `cfg.dt`.
pub fn step(state: &FieldState, params: &ModelParameters, cfg: &SolverConfig) -> Result<StepOutcome, SolverError> {
    step_to(state, params, cfg, state.t + cfg.dt)
}

fn step_to(
    state: &FieldState,
    params: &ModelParameters,
    cfg: &SolverConfig,
    t_new: f64,
) -> Result<StepOutcome, SolverError> {
    check_modes(params, cfg)?;
    if !(state.n1.fits(&state.grid)
        && state.n2.fits(&state.grid)
        && state.c.fits(&state.grid)
        && state.u.fits(&state.grid))
    {
        return Err(SolverError::GridMismatch);
    }
    let state = enlarge_domain_if_needed(state, cfg, params.c_boundary);
    let dx = state.grid.dx();
    let u_star = predict_velocity(&state, params, cfg)?;
    let cfl = u_star.values().iter().fold(0.0f64, |m, v| m.max(v.abs())) * cfg.dt / dx;
    let corr = correct_densities(&state, &u_star, params, cfg)?;
    let u_new = pressure_gradient_velocity(&corr.n1, &corr.n2, dx, params.gamma);
    check_finite(u_new.values(), "velocity")?;

    let (c_new, clamped_nutrient_mass, nutrient_violations) = match params.nutrient {
        NutrientMode::QuasiStaticDirichlet => (
            solve_nutrient_quasistatic(&corr.n1, &corr.n2, dx, params, cfg)?,
            0.0,
            Vec::new(),
        ),
        NutrientMode::DynamicNeumann { input } => {
            let s = step_nutrient_neumann(&state.c, &corr.n1, &corr.n2, input.at(t_new), dx, params, cfg)?;
            (s.c, s.clamped, s.violations)
        }
    };

    let mut change = 0.0;
    let mut production = 0.0;
    for i in 0..corr.n1.len() {
        let (a, b) = (corr.n1.values()[i], corr.n2.values()[i]);
        let n_new = a + b;
        change += n_new - (state.n1.values()[i] + state.n2.values()[i]);
        let ci = c_new.values()[i];
        production += params.growth_normal(ci, n_new) * a + params.growth_autophagic(ci, n_new) * b;
    }
    let mass_balance_residual = (dx * change / cfg.dt - dx * production).abs();

    Ok(StepOutcome {
        state: FieldState {
            grid: state.grid,
            n1: corr.n1,
            n2: corr.n2,
            c: c_new,
            u: u_new,
            t: t_new,
        },
        clamped_density_mass: corr.clamped_mass,
        clamped_nutrient_mass,
        density_violations: corr.violations,
        nutrient_violations,
        cfl,
        mass_balance_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvariantEvent {
    NegativeDensity {
        step: usize,
        t: f64,
        species: Species,
        index: usize,
        value: f64,
    },
    NegativeNutrient {
        step: usize,
        t: f64,
        index: usize,
        value: f64,
    },
    FractionOutOfBounds {
        t: f64,
        min: f64,
        max: f64,
    },
    NutrientAboveBound {
        t: f64,
        excess: f64,
    },
    CflExceeded {
        step: usize,
        t: f64,
        cfl: f64,
    },
}

impl InvariantEvent {
    fn key(&self) -> &'static str {
        match self {
            InvariantEvent::NegativeDensity { .. } => "negative_density",
            InvariantEvent::NegativeNutrient { .. } => "negative_nutrient",
            InvariantEvent::FractionOutOfBounds { .. } => "fraction_out_of_bounds",
            InvariantEvent::NutrientAboveBound { .. } => "nutrient_above_bound",
            InvariantEvent::CflExceeded { .. } => "cfl_exceeded",
        }
    }

    /// CFL excursions are warnings; everything else breaks an invariant.
    pub fn is_violation(&self) -> bool {
        !matches!(self, InvariantEvent::CflExceeded { .. })
    }
}

/// Running record of monitored invariants over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantLog {
    /// First events of each kind, capped.
    pub events: Vec<InvariantEvent>,
    pub counts: BTreeMap<String, usize>,
    pub clamped_density_mass: f64,
    pub clamped_nutrient_mass: f64,
    pub max_cfl: f64,
    pub max_mass_balance_residual: f64,
    pub max_fraction_excursion: f64,
    pub max_nutrient_excess: f64,
}

impl InvariantLog {
    pub fn record(&mut self, event: InvariantEvent) {
        let count = self.counts.entry(event.key().to_string()).or_insert(0);
        *count += 1;
        if *count <= MAX_LOGGED_EVENTS {
            self.events.push(event);
        }
    }

    pub fn violation_count(&self) -> usize {
        self.counts
            .iter()
            .filter(|(k, _)| k.as_str() != "cfl_exceeded")
            .map(|(_, v)| v)
            .sum()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    fn absorb_step(&mut self, step: usize, out: &StepOutcome) {
        let t = out.state.t;
        self.clamped_density_mass += out.clamped_density_mass;
        self.clamped_nutrient_mass += out.clamped_nutrient_mass;
        self.max_mass_balance_residual = self.max_mass_balance_residual.max(out.mass_balance_residual);
        self.max_cfl = self.max_cfl.max(out.cfl);
        if out.cfl > 0.5 {
            self.record(InvariantEvent::CflExceeded { step, t, cfl: out.cfl });
        }
        for &(species, index, value) in &out.density_violations {
            self.record(InvariantEvent::NegativeDensity {
                step,
                t,
                species,
                index,
                value,
            });
        }
        for &(index, value) in &out.nutrient_violations {
            self.record(InvariantEvent::NegativeNutrient { step, t, index, value });
        }
    }

    fn check_sample(&mut self, state: &FieldState, params: &ModelParameters, cfg: &SolverConfig) {
        let mu = density_fraction_field(state, cfg.support_threshold);
        if let Some((lo, hi)) = mu.range() {
            let excursion = (-lo).max(hi - 1.0).max(0.0);
            self.max_fraction_excursion = self.max_fraction_excursion.max(excursion);
            if excursion > FRACTION_TOL {
                self.record(InvariantEvent::FractionOutOfBounds {
                    t: state.t,
                    min: lo,
                    max: hi,
                });
            }
        }
        if let NutrientMode::QuasiStaticDirichlet = params.nutrient {
            let support = support_info(state, cfg.support_threshold);
            let c0 = params
                .consumption
                .critical_concentration(params.supply)
                .unwrap_or(params.c_boundary);
            let check = nutrient_bound_check(&state.c, params.c_boundary, c0, &support, NUTRIENT_BOUND_TOL);
            self.max_nutrient_excess = self.max_nutrient_excess.max(check.worst_violation);
            if !check.holds {
                self.record(InvariantEvent::NutrientAboveBound {
                    t: state.t,
                    excess: check.worst_violation,
                });
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub final_state: FieldState,
    pub log: InvariantLog,
    pub steps: usize,
}

#[derive(Debug, Error)]
#[error("solver aborted at step {step} (t = {t}): {source}")]
pub struct RunError {
    pub step: usize,
    pub t: f64,
    #[source]
    pub source: SolverError,
    /// Last good state before the failing step.
    pub snapshot: Box<FieldState>,
}

/// Steps from `initial.t` to `t_end`, sampling diagnostics every
/// `cfg.sample_interval`. `observer` sees every post-step state.
pub fn run_observed(
    initial: &FieldState,
    params: &ModelParameters,
    cfg: &SolverConfig,
    t_end: f64,
    observer: &mut dyn FnMut(usize, &FieldState),
) -> Result<RunOutput, RunError> {
    let abort = |step, t, source, state: &FieldState| RunError {
        step,
        t,
        source,
        snapshot: Box::new(state.clone()),
    };
    cfg.validate().map_err(|e| abort(0, initial.t, e, initial))?;
    check_modes(params, cfg).map_err(|e| abort(0, initial.t, e, initial))?;

    let mut series = TimeSeries::default();
    let mut log = InvariantLog::default();
    if !(t_end > initial.t) {
        return Ok(RunOutput {
            series,
            final_state: initial.clone(),
            log,
            steps: 0,
        });
    }
    let eq = params.equilibrium();
    let steps = ((t_end - initial.t) / cfg.dt).round().max(1.0) as usize;
    let sample_every = ((cfg.sample_interval / cfg.dt).round() as usize).max(1);
    let t0 = initial.t;

    let mut state = initial.clone();
    log.check_sample(&state, params, cfg);
    series.push(Sample::measure(&state, eq.as_ref(), cfg.support_threshold, 0.0));
    for k in 0..steps {
        let t_new = if k + 1 == steps {
            t_end
        } else {
            t0 + (k + 1) as f64 * cfg.dt
        };
        let out = step_to(&state, params, cfg, t_new).map_err(|e| abort(k + 1, t_new, e, &state))?;
        if !out.state.all_finite() {
            return Err(abort(
                k + 1,
                t_new,
                SolverError::NonFinite {
                    what: "state",
                    index: 0,
                },
                &state,
            ));
        }
        log.absorb_step(k + 1, &out);
        state = out.state;
        observer(k + 1, &state);
        if (k + 1) % sample_every == 0 || k + 1 == steps {
            log.check_sample(&state, params, cfg);
            let clamped = log.clamped_density_mass + log.clamped_nutrient_mass;
            series.push(Sample::measure(&state, eq.as_ref(), cfg.support_threshold, clamped));
        }
    }
    Ok(RunOutput {
        series,
        final_state: state,
        log,
        steps,
    })
}

pub fn run(
    initial: &FieldState,
    params: &ModelParameters,
    cfg: &SolverConfig,
    t_end: f64,
) -> Result<RunOutput, RunError> {
    run_observed(initial, params, cfg, t_end, &mut |_, _| {})
}
