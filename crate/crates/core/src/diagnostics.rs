//! Quantities measured on simulation states: tumor support and radius,
//! populations, the normal-cell fraction and its deviation norms, and the
//! runtime checks of the well-mixed and nutrient bounds.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{FieldState, GridFunction};
use crate::kinetics::{ModelParameters, ReactionEquilibrium, TransitionSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("the tumor support is empty")]
    EmptySupport,
    #[error("the L^2n condition needs constant transition rates, got {0:?}")]
    NotApplicable(TransitionSpec),
}

/// Connected runs of cells with `n₁ + n₂ > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportInfo {
    /// Inclusive `(first, last)` cell indices, ordered and disjoint.
    pub components: Vec<(usize, usize)>,
    /// `max |x_i|` over the support.
    pub radius: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub total_mass: f64,
}

impl SupportInfo {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.components.iter().any(|&(l, r)| l <= i && i <= r)
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().flat_map(|&(l, r)| l..=r)
    }
}

/// Inclusive index ranges where `density > threshold`.
pub fn support_components(density: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in density.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, density.len() - 1));
    }
    out
}

pub fn support_info(state: &FieldState, threshold: f64) -> SupportInfo {
    let n = state.total_density();
    let components = support_components(n.values(), threshold);
    let grid = &state.grid;
    let (mut radius, mut x_left, mut x_right, mut mass) = (0.0f64, 0.0, 0.0, 0.0);
    if let (Some(first), Some(last)) = (components.first(), components.last()) {
        x_left = grid.x(first.0);
        x_right = grid.x(last.1);
        radius = x_left.abs().max(x_right.abs());
        for &(l, r) in &components {
            mass += n.values()[l..=r].iter().sum::<f64>();
        }
    }
    SupportInfo {
        components,
        radius,
        x_left,
        x_right,
        total_mass: grid.dx() * mass,
    }
}

/// `μ = n₁/(n₁+n₂)` on the support, `None` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionField {
    pub values: Vec<Option<f64>>,
}

impl FractionField {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.defined().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

pub fn density_fraction_field(state: &FieldState, threshold: f64) -> FractionField {
    FractionField {
        values: state
            .n1
            .values()
            .iter()
            .zip(state.n2.values())
            .map(|(&a, &b)| {
                let n = a + b;
                (n > threshold).then(|| a / n)
            })
            .collect(),
    }
}

/// `max |μ_i − μ*|` over the support.
pub fn sup_deviation(mu: &FractionField, mu_star: f64) -> Result<f64, DiagnosticsError> {
    mu.defined()
        .map(|v| (v - mu_star).abs())
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
        .ok_or(DiagnosticsError::EmptySupport)
}

/// `(dx·Σ (μ_i − μ*)^{2n})^{1/2n}` over the support.
pub fn l2n_deviation(mu: &FractionField, mu_star: f64, dx: f64, n: u32) -> Result<f64, DiagnosticsError> {
    let p = 2 * n as i32;
    let mut any = false;
    let mut sum = 0.0;
    for v in mu.defined() {
        any = true;
        sum += (v - mu_star).powi(p);
    }
    if !any {
        return Err(DiagnosticsError::EmptySupport);
    }
    Ok((dx * sum).powf(1.0 / p as f64))
}

/// `A·e^{−D(μ*−ν*)t}·‖μ(·,0) − μ*‖_∞`.
pub fn uniform_bound_at(t: f64, initial_sup_dev: f64, eq: &ReactionEquilibrium) -> f64 {
    eq.uniform_a * (-eq.decay_rate * t).exp() * initial_sup_dev
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2nCondition {
    /// `G(max{c_B, c₀}) − D < 2nK₂`
    pub holds: bool,
    /// Predicted decay rate of the norm itself; the `2n`-th power decays at `2n·rate`.
    pub rate: f64,
}

pub fn l2n_condition_and_rate(
    n: u32,
    params: &ModelParameters,
    eq: &ReactionEquilibrium,
    c0: f64,
) -> Result<L2nCondition, DiagnosticsError> {
    let Some((k1, k2)) = params.transitions.constants() else {
        return Err(DiagnosticsError::NotApplicable(params.transitions));
    };
    let two_n = 2.0 * n as f64;
    let g_max = params.growth.eval(params.c_boundary.max(c0), 0.0);
    let d = params.extra_death;
    let holds = g_max - d < two_n * k2;
    let nu = eq.nu_star;
    let rate = (-nu) / (1.0 - nu) * k1 + (two_n * k2 - g_max + d) / two_n;
    Ok(L2nCondition { holds, rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    /// Largest excess of `c` over `max{c_B, c₀}` on the support (0 when none).
    pub worst_violation: f64,
}

pub fn nutrient_bound_check(c: &GridFunction, c_b: f64, c0: f64, support: &SupportInfo, tol: f64) -> BoundCheck {
    let cap = c_b.max(c0);
    let worst = support.cells().map(|i| c.values()[i] - cap).fold(0.0f64, f64::max);
    BoundCheck {
        holds: worst <= tol,
        worst_violation: worst,
    }
}

/// `(dx·Σ n, dx·Σ n₂)` over the whole grid.
pub fn total_population(state: &FieldState) -> (f64, f64) {
    let dx = state.grid.dx();
    let total: f64 = state
        .n1
        .values()
        .iter()
        .zip(state.n2.values())
        .map(|(a, b)| a + b)
        .sum();
    let auto: f64 = state.n2.values().iter().sum();
    (dx * total, dx * auto)
}

/// Column names of the time-series CSV.
pub const TIMESERIES_CHANNELS: [&str; 10] = [
    "t",
    "radius",
    "mass_total",
    "mass_autophagic",
    "sup_dev",
    "l2_dev",
    "l4_dev",
    "l8_dev",
    "c_max",
    "neg_mass_clamped",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub radius: f64,
    pub mass_total: f64,
    pub mass_autophagic: f64,
    pub sup_dev: f64,
    pub l2_dev: f64,
    pub l4_dev: f64,
    pub l8_dev: f64,
    pub c_max: f64,
    pub neg_mass_clamped: f64,
}

impl Sample {
    /// Deviation channels are NaN when no equilibrium exists or the support is empty.
    pub fn measure(
        state: &FieldState,
        eq: Option<&ReactionEquilibrium>,
        threshold: f64,
        neg_mass_clamped: f64,
    ) -> Self {
        let support = support_info(state, threshold);
        let (mass_total, mass_autophagic) = total_population(state);
        let mu = density_fraction_field(state, threshold);
        let dx = state.grid.dx();
        let dev = |f: &dyn Fn(f64) -> Result<f64, DiagnosticsError>| match eq {
            Some(eq) => f(eq.mu_star).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        let c_max = support.cells().map(|i| state.c.values()[i]).fold(f64::NAN, f64::max);
        Self {
            t: state.t,
            radius: support.radius,
            mass_total,
            mass_autophagic,
            sup_dev: dev(&|m| sup_deviation(&mu, m)),
            l2_dev: dev(&|m| l2n_deviation(&mu, m, dx, 1)),
            l4_dev: dev(&|m| l2n_deviation(&mu, m, dx, 2)),
            l8_dev: dev(&|m| l2n_deviation(&mu, m, dx, 4)),
            c_max,
            neg_mass_clamped,
        }
    }

    pub fn as_row(&self) -> [f64; 10] {
        [
            self.t,
            self.radius,
            self.mass_total,
            self.mass_autophagic,
            self.sup_dev,
            self.l2_dev,
            self.l4_dev,
            self.l8_dev,
            self.c_max,
            self.neg_mass_clamped,
        ]
    }
}

/// Sampled diagnostics, one row per sample time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn push(&mut self, s: Sample) {
        debug_assert!(self.samples.last().is_none_or(|last| last.t < s.t));
        self.samples.push(s);
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn channel(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", TIMESERIES_CHANNELS.join(","))?;
        for s in &self.samples {
            write_csv_row(&mut w, &s.as_row())?;
        }
        Ok(())
    }
}

/// One CSV row at 17 significant digits.
pub fn write_csv_row<W: Write>(w: &mut W, row: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{}", cells.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::kinetics::{ConsumptionSpec, GrowthSpec, NutrientMode};
    use proptest::prelude::*;

    fn state_from(grid: Grid1D, n1: Vec<f64>, n2: Vec<f64>) -> FieldState {
        let len = grid.n_cells();
        FieldState::new(grid, n1, n2, vec![1.0; len], vec![0.0; len - 1], 0.0).unwrap()
    }

    fn params(k1: f64, k2: f64, d: f64) -> ModelParameters {
        ModelParameters {
            gamma: 80.0,
            extra_death: d,
            supply: 0.5,
            c_boundary: 1.0,
            growth: GrowthSpec::Proportional { g: 1.0 },
            consumption: ConsumptionSpec::Linear,
            transitions: TransitionSpec::Constants { k1, k2 },
            nutrient: NutrientMode::QuasiStaticDirichlet,
        }
    }

    #[test]
    fn support_of_zero_state() {
        let g = Grid1D::symmetric(0.04, 50).unwrap();
        let s = FieldState::empty(g, 1.0, 0.0);
        let info = support_info(&s, 1e-8);
        assert!(info.is_empty());
        assert_eq!(info.radius, 0.0);
        assert_eq!(info.total_mass, 0.0);
    }

    #[test]
    fn support_of_indicator() {
        let g = Grid1D::symmetric(0.04, 50).unwrap();
        let n1: Vec<f64> = g.nodes().map(|x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).collect();
        let s = state_from(g, n1, vec![0.0; g.n_cells()]);
        let info = support_info(&s, 1e-8);
        assert_eq!(info.components.len(), 1);
        assert!((info.radius - 1.0).abs() <= 0.04 + 1e-12);
        assert!((info.total_mass - 2.0).abs() <= 0.08 + 1e-12);
    }

    #[test]
    fn two_bumps_two_components() {
        let comps = support_components(&[0.0, 1.0, 1.0, 0.0, 0.0, 2.0, 0.0], 1e-8);
        assert_eq!(comps, vec![(1, 2), (5, 5)]);
        assert_eq!(support_components(&[1.0, 1.0], 0.5), vec![(0, 1)]);
    }

    #[test]
    fn fraction_field_examples() {
        let g = Grid1D::new(0.0, 0.1, 5).unwrap();
        let s = state_from(g, vec![0.3; 5], vec![0.3; 5]);
        assert!(density_fraction_field(&s, 1e-8).defined().all(|m| m == 0.5));
        let s = state_from(g, vec![0.0, 0.4, 0.4, 0.4, 0.0], vec![0.0; 5]);
        let mu = density_fraction_field(&s, 1e-8);
        assert!(mu.defined().all(|m| m == 1.0));
        assert_eq!(mu.values[0], None);
        assert_eq!(mu.defined().count(), 3);
    }

    #[test]
    fn deviation_examples() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        let at_eq = FractionField {
            values: vec![None, Some(eq.mu_star), Some(eq.mu_star), None],
        };
        assert_eq!(sup_deviation(&at_eq, eq.mu_star).unwrap(), 0.0);
        assert_eq!(l2n_deviation(&at_eq, eq.mu_star, 0.04, 2).unwrap(), 0.0);
        let ones = FractionField {
            values: vec![Some(1.0); 4],
        };
        assert!((sup_deviation(&ones, eq.mu_star).unwrap() - 0.462_708).abs() < 1e-6);
        let spike = FractionField {
            values: vec![Some(0.5), Some(0.9), Some(0.52)],
        };
        assert!((sup_deviation(&spike, 0.5).unwrap() - 0.4).abs() < 1e-15);
        let empty = FractionField {
            values: vec![None, None],
        };
        assert_eq!(sup_deviation(&empty, 0.5), Err(DiagnosticsError::EmptySupport));
        assert_eq!(l2n_deviation(&empty, 0.5, 0.1, 1), Err(DiagnosticsError::EmptySupport));
    }

    #[test]
    fn l2n_constant_field() {
        let h = 0.1;
        let field = FractionField {
            values: vec![Some(0.5 + h); 25],
        };
        let dx = 0.04;
        let measure = 25.0 * dx;
        for n in [1u32, 2, 4] {
            let v = l2n_deviation(&field, 0.5, dx, n).unwrap();
            let expected = h * f64::powf(measure, 1.0 / (2 * n) as f64);
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_bound_constants() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        assert!((eq.decay_rate - 2.022_375).abs() < 1e-6);
        assert!((eq.uniform_a - 6.741_254 / 6.203_958).abs() < 1e-6);
        assert!(uniform_bound_at(0.0, 0.3, &eq) >= 0.3);
        assert_eq!(uniform_bound_at(4.0, 0.0, &eq), 0.0);
    }

    #[test]
    fn l2n_condition_examples() {
        let p = params(0.1, 1.0, 0.1);
        let eq = p.equilibrium().unwrap();
        let r = l2n_condition_and_rate(1, &p, &eq, 0.5).unwrap();
        assert!(r.holds);
        assert!((r.rate - 0.641_608).abs() < 1e-6);

        let p = params(0.1, 0.01, 0.1);
        let eq = p.equilibrium().unwrap();
        assert!(!l2n_condition_and_rate(1, &p, &eq, 0.5).unwrap().holds);

        let p = params(1.0, 0.05, 1.5);
        let eq = p.equilibrium().unwrap();
        for n in [1, 2, 4] {
            assert!(l2n_condition_and_rate(n, &p, &eq, 0.5).unwrap().holds);
        }

        let mut hull = p;
        hull.transitions = TransitionSpec::Hull {
            k1_max: 1.0,
            k2_max: 1.0,
            omega: 0.5,
        };
        assert!(matches!(
            l2n_condition_and_rate(1, &hull, &eq, 0.5),
            Err(DiagnosticsError::NotApplicable(_))
        ));
    }

    #[test]
    fn nutrient_bound_examples() {
        let g = Grid1D::new(0.0, 0.1, 5).unwrap();
        let s = state_from(g, vec![0.0, 1.0, 1.0, 1.0, 0.0], vec![0.0; 5]);
        let support = support_info(&s, 1e-8);
        let c = GridFunction::regular(vec![1.0; 5]);
        assert!(nutrient_bound_check(&c, 1.0, 0.5, &support, 1e-6).holds);
        let c = GridFunction::regular(vec![1.0, 1.0, 1.2, 1.0, 1.0]);
        let check = nutrient_bound_check(&c, 1.0, 0.5, &support, 1e-6);
        assert!(!check.holds);
        assert!((check.worst_violation - 0.2).abs() < 1e-12);
    }

    #[test]
    fn population_examples() {
        let g = Grid1D::new(0.0, 0.1, 6).unwrap();
        assert_eq!(total_population(&FieldState::empty(g, 1.0, 0.0)), (0.0, 0.0));
        let s = state_from(
            g,
            vec![0.0, 0.5, 0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.5, 0.5, 0.0, 0.0],
        );
        let (total, auto) = total_population(&s);
        assert!((total - 0.3).abs() < 1e-15);
        assert!((auto - 0.15).abs() < 1e-15);
    }

    #[test]
    fn csv_header_is_stable() {
        let mut buf = Vec::new();
        TimeSeries::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,radius,mass_total,mass_autophagic,sup_dev,l2_dev,l4_dev,l8_dev,c_max,neg_mass_clamped\n"
        );
    }

    proptest! {
        // Hölder on a support of measure L: ‖f‖_2 ≤ L^{1/4} ‖f‖_4.
        #[test]
        fn holder_between_l2_and_l4(vals in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let dx = 0.02;
            let measure = vals.len() as f64 * dx;
            let field = FractionField { values: vals.iter().map(|&v| Some(v)).collect() };
            let l2 = l2n_deviation(&field, 0.3, dx, 1).unwrap();
            let l4 = l2n_deviation(&field, 0.3, dx, 2).unwrap();
            prop_assert!(l2 <= measure.powf(0.25) * l4 * (1.0 + 1e-12) + 1e-15);
        }
    }
}
