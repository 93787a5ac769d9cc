//! Pointwise rate laws, the well-mixed ODE model and the exact analysis of
//! the density-fraction kinetics
//!
//! The fraction of normal cells `μ = n₁/(n₁+n₂)` obeys, along particle paths,
//!
//! ```text
//! dμ/dt = f(μ) = −μK₁ + (1−μ)K₂ + Dμ(1−μ) = −D(μ−ν*)(μ−μ*)
//! ```
//!
//! with roots `ν* < 0 < μ* < 1` whenever `D, K₁, K₂ > 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("extra death rate D = 0 collapses the fraction kinetics to a linear law with single root {single_root}")]
    DegenerateQuadratic { single_root: f64 },
    #[error("invalid rate {name} = {value}: {reason}")]
    InvalidRate {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("initial fraction {z0} must lie above the negative root {nu_star}")]
    BelowNegativeRoot { z0: f64, nu_star: f64 },
    #[error("supply rate {a} is outside the range of the consumption law")]
    OutsideConsumptionRange { a: f64 },
    #[error("ODE integration produced an invalid state at t = {t}: {what}")]
    Blowup { t: f64, what: &'static str },
}

/// Net growth rate of normal cells `G`. Autophagic cells grow at `G − D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthSpec {
    /// `G(c) = g·c`
    Proportional { g: f64 },
    /// `G(c) = c − δ`
    AffineDeath { delta: f64 },
    /// `G(c, n) = g(M − n)c − δ`
    Logistic { g: f64, capacity: f64, delta: f64 },
}

impl GrowthSpec {
    pub fn eval(&self, c: f64, n: f64) -> f64 {
        match *self {
            GrowthSpec::Proportional { g } => g * c,
            GrowthSpec::AffineDeath { delta } => c - delta,
            GrowthSpec::Logistic { g, capacity, delta } => g * (capacity - n) * c - delta,
        }
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(KineticsError::InvalidRate {
                    name,
                    value,
                    reason: "must be positive",
                })
            }
        };
        let non_negative = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(KineticsError::InvalidRate {
                    name,
                    value,
                    reason: "must be non-negative",
                })
            }
        };
        match *self {
            GrowthSpec::Proportional { g } => positive("g", g),
            GrowthSpec::AffineDeath { delta } => non_negative("delta", delta),
            GrowthSpec::Logistic { g, capacity, delta } => {
                positive("g", g)?;
                positive("capacity", capacity)?;
                non_negative("delta", delta)
            }
        }
    }
}

/// Nutrient consumption law `ψ`, with `ψ(0) = 0` and `ψ' > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsumptionSpec {
    /// `ψ(c) = c`
    #[default]
    Linear,
}

impl ConsumptionSpec {
    pub fn eval(&self, c: f64) -> f64 {
        match self {
            ConsumptionSpec::Linear => c,
        }
    }

    /// The concentration `c₀` with `ψ(c₀) = a`, above which autophagic
    /// supply can no longer raise the nutrient level.
    pub fn critical_concentration(&self, a: f64) -> Result<f64, KineticsError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(KineticsError::OutsideConsumptionRange { a });
        }
        match self {
            ConsumptionSpec::Linear => Ok(a),
        }
    }
}

/// Transition rates `K₁(c)` (normal → autophagic) and `K₂(c)` (back).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransitionSpec {
    Constants {
        k1: f64,
        k2: f64,
    },
    /// Hill-type switches with exponent 4 around the concentration scale `ω`.
    Hull {
        k1_max: f64,
        k2_max: f64,
        omega: f64,
    },
    /// `K₁(c) = ((1−c)/(c+0.1))₊`, `K₂(c) = 2c/(c+1)`.
    RationalPair,
}

impl TransitionSpec {
    pub fn eval(&self, c: f64) -> (f64, f64) {
        match *self {
            TransitionSpec::Constants { k1, k2 } => (k1, k2),
            TransitionSpec::Hull { k1_max, k2_max, omega } => {
                let w4 = omega.powi(4);
                let c4 = c.powi(4);
                let denom = w4 + c4;
                (k1_max * w4 / denom, k2_max * c4 / denom)
            }
            TransitionSpec::RationalPair => {
                let k1 = ((1.0 - c) / (c + 0.1)).max(0.0);
                let k2 = 2.0 * c / (c + 1.0);
                (k1, k2)
            }
        }
    }

    pub fn constants(&self) -> Option<(f64, f64)> {
        match *self {
            TransitionSpec::Constants { k1, k2 } => Some((k1, k2)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let check = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(KineticsError::InvalidRate {
                    name,
                    value,
                    reason: "must be non-negative",
                })
            }
        };
        match *self {
            TransitionSpec::Constants { k1, k2 } => {
                check("k1", k1)?;
                check("k2", k2)
            }
            TransitionSpec::Hull { k1_max, k2_max, omega } => {
                check("k1_max", k1_max)?;
                check("k2_max", k2_max)?;
                if omega > 0.0 && omega.is_finite() {
                    Ok(())
                } else {
                    Err(KineticsError::InvalidRate {
                        name: "omega",
                        value: omega,
                        reason: "must be positive",
                    })
                }
            }
            TransitionSpec::RationalPair => Ok(()),
        }
    }
}

/// Boundary nutrient input `λ(t)` for the bounded-domain model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NutrientInput {
    Constant {
        value: f64,
    },
    /// `high` on the first half of each period, `0` on the second half.
    Periodic {
        high: f64,
        period: f64,
    },
}

impl NutrientInput {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            NutrientInput::Constant { value } => value,
            NutrientInput::Periodic { high, period } => {
                if t.rem_euclid(period) < 0.5 * period {
                    high
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum NutrientMode {
    /// `ε = 0`: elliptic solve on the tumor support with `c = c_B` outside.
    QuasiStaticDirichlet,
    /// `ε = 1`: parabolic nutrient with boundary input flux `λ(t)`.
    DynamicNeumann { input: NutrientInput },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    pub gamma: f64,
    /// Extra death rate `D` of autophagic cells.
    pub extra_death: f64,
    /// Nutrient supply rate `a` from autophagy.
    pub supply: f64,
    /// Far-field / boundary concentration `c_B`.
    pub c_boundary: f64,
    pub growth: GrowthSpec,
    #[serde(default)]
    pub consumption: ConsumptionSpec,
    pub transitions: TransitionSpec,
    pub nutrient: NutrientMode,
}

impl ModelParameters {
    /// Nutrient time-scale parameter `ε`, tied to the nutrient mode.
    pub fn epsilon(&self) -> f64 {
        match self.nutrient {
            NutrientMode::QuasiStaticDirichlet => 0.0,
            NutrientMode::DynamicNeumann { .. } => 1.0,
        }
    }

    pub fn growth_normal(&self, c: f64, n: f64) -> f64 {
        self.growth.eval(c, n)
    }

    pub fn growth_autophagic(&self, c: f64, n: f64) -> f64 {
        self.growth.eval(c, n) - self.extra_death
    }

    pub fn input_at(&self, t: f64) -> f64 {
        match self.nutrient {
            NutrientMode::QuasiStaticDirichlet => 0.0,
            NutrientMode::DynamicNeumann { input } => input.at(t),
        }
    }

    /// Well-mixed equilibrium, available only for constant transition rates.
    pub fn equilibrium(&self) -> Option<ReactionEquilibrium> {
        let (k1, k2) = self.transitions.constants()?;
        ReactionEquilibrium::new(self.extra_death, k1, k2).ok()
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let bad = |name, value, reason| Err(KineticsError::InvalidRate { name, value, reason });
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma, "must exceed 1");
        }
        if !(self.extra_death >= 0.0 && self.extra_death.is_finite()) {
            return bad("extra_death", self.extra_death, "must be non-negative");
        }
        if !(self.supply >= 0.0 && self.supply.is_finite()) {
            return bad("supply", self.supply, "must be non-negative");
        }
        if !(self.c_boundary > 0.0 && self.c_boundary.is_finite()) {
            return bad("c_boundary", self.c_boundary, "must be positive");
        }
        if let NutrientMode::DynamicNeumann { input } = self.nutrient {
            match input {
                NutrientInput::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                    return bad("lambda", value, "must be non-negative");
                }
                NutrientInput::Periodic { high, period } if !(high >= 0.0 && period > 0.0 && period.is_finite()) => {
                    return bad("period", period, "needs positive period and non-negative level");
                }
                _ => {}
            }
        }
        self.growth.validate()?;
        self.transitions.validate()
    }
}

/// `f(μ) = −μK₁ + (1−μ)K₂ + Dμ(1−μ)`.
pub fn reaction_rate_f(mu: f64, d: f64, k1: f64, k2: f64) -> f64 {
    -mu * k1 + (1.0 - mu) * k2 + d * mu * (1.0 - mu)
}

/// Roots of the fraction kinetics and the constants of the well-mixed limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReactionEquilibrium {
    pub nu_star: f64,
    pub mu_star: f64,
    /// Discriminant `E = D² + (K₁+K₂)² − 2DK₁ + 2DK₂`.
    pub discriminant: f64,
    /// `D(μ* − ν*) = √E`.
    pub decay_rate: f64,
    /// `(μ* − ν*)/(−ν*)`, the uniform-convergence prefactor.
    pub uniform_a: f64,
    pub extra_death: f64,
    pub k1: f64,
    pub k2: f64,
}

impl ReactionEquilibrium {
    pub fn new(d: f64, k1: f64, k2: f64) -> Result<Self, KineticsError> {
        for (name, v) in [("k1", k1), ("k2", k2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KineticsError::InvalidRate {
                    name,
                    value: v,
                    reason: "equilibrium analysis needs a strictly positive rate",
                });
            }
        }
        if !d.is_finite() || d < 0.0 {
            return Err(KineticsError::InvalidRate {
                name: "extra_death",
                value: d,
                reason: "must be non-negative",
            });
        }
        if d == 0.0 {
            return Err(KineticsError::DegenerateQuadratic {
                single_root: k2 / (k1 + k2),
            });
        }
        // D μ² + (K₁+K₂−D) μ − K₂ = 0; larger-magnitude root first, the other by Vieta.
        let b = k1 + k2 - d;
        let c = -k2;
        let e = d * d + (k1 + k2) * (k1 + k2) - 2.0 * d * k1 + 2.0 * d * k2;
        let sqrt_e = e.sqrt();
        let q = -0.5 * (b + b.signum() * sqrt_e);
        let q = if b == 0.0 { -0.5 * sqrt_e } else { q };
        let r1 = q / d;
        let r2 = c / q;
        let (nu_star, mu_star) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        Ok(Self {
            nu_star,
            mu_star,
            discriminant: e,
            decay_rate: d * (mu_star - nu_star),
            uniform_a: (mu_star - nu_star) / (-nu_star),
            extra_death: d,
            k1,
            k2,
        })
    }

    pub fn rate(&self, mu: f64) -> f64 {
        reaction_rate_f(mu, self.extra_death, self.k1, self.k2)
    }

    /// Exact solution of `dz/dt = −D(z−ν*)(z−μ*)`, `z(0) = z0`.
    pub fn mu_ode_closed_form(&self, z0: f64, t: f64) -> Result<f64, KineticsError> {
        if !(z0 > self.nu_star) {
            return Err(KineticsError::BelowNegativeRoot {
                z0,
                nu_star: self.nu_star,
            });
        }
        if z0 == self.mu_star {
            return Ok(z0);
        }
        let ratio0 = (z0 - self.mu_star) / (z0 - self.nu_star);
        let ratio = ratio0 * (-self.decay_rate * t).exp();
        Ok((self.mu_star - self.nu_star * ratio) / (1.0 - ratio))
    }

    /// Upper bound on `|z(t) − μ*|` for the scalar kinetics.
    pub fn wellmixed_pointwise_bound(&self, z0: f64, t: f64) -> Result<f64, KineticsError> {
        if !(z0 > self.nu_star) {
            return Err(KineticsError::BelowNegativeRoot {
                z0,
                nu_star: self.nu_star,
            });
        }
        let coef = (z0.max(self.mu_star) - self.nu_star) / (z0 - self.nu_star);
        Ok(coef * (-self.decay_rate * t).exp() * (z0 - self.mu_star).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeState {
    pub n1: f64,
    pub n2: f64,
    pub c: f64,
    pub t: f64,
}

fn ode_rhs(
    s: [f64; 3],
    t: f64,
    p: &ModelParameters,
    lambda: &dyn Fn(f64) -> f64,
    c_b: &dyn Fn(f64) -> f64,
) -> [f64; 3] {
    let [n1, n2, c] = s;
    let n = n1 + n2;
    let (k1, k2) = p.transitions.eval(c);
    let g1 = p.growth_normal(c, n);
    let g2 = p.growth_autophagic(c, n);
    [
        g1 * n1 - k1 * n1 + k2 * n2,
        g2 * n2 + k1 * n1 - k2 * n2,
        -lambda(t) * (c - c_b(t)) - p.consumption.eval(c) * n + p.supply * n2,
    ]
}

/// RK4 trajectory of the spatially homogeneous model, sampled every `dt`.
/// The last step is shortened so the trajectory ends exactly at `t_end`.
pub fn integrate_ode_model(
    s0: OdeState,
    p: &ModelParameters,
    lambda: &dyn Fn(f64) -> f64,
    c_b: &dyn Fn(f64) -> f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<OdeState>, KineticsError> {
    if !(dt > 0.0) {
        return Err(KineticsError::InvalidRate {
            name: "dt",
            value: dt,
            reason: "must be positive",
        });
    }
    if s0.n1 < 0.0 || s0.n2 < 0.0 || s0.c < 0.0 {
        return Err(KineticsError::Blowup {
            t: s0.t,
            what: "negative initial state",
        });
    }
    let steps = ((t_end - s0.t) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s0);
    let mut y = [s0.n1, s0.n2, s0.c];
    for k in 0..steps {
        let t = s0.t + k as f64 * dt;
        let h = (t_end - t).min(dt);
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let k1 = ode_rhs(y, t, p, lambda, c_b);
        let k2 = ode_rhs(add(y, k1, 0.5 * h), t + 0.5 * h, p, lambda, c_b);
        let k3 = ode_rhs(add(y, k2, 0.5 * h), t + 0.5 * h, p, lambda, c_b);
        let k4 = ode_rhs(add(y, k3, h), t + h, p, lambda, c_b);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_new = if k + 1 == steps {
            t_end
        } else {
            s0.t + (k + 1) as f64 * dt
        };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(KineticsError::Blowup {
                t: t_new,
                what: "non-finite value",
            });
        }
        if y.iter().any(|&v| v < -1e-9) {
            return Err(KineticsError::Blowup {
                t: t_new,
                what: "negative density or concentration",
            });
        }
        out.push(OdeState {
            n1: y[0],
            n2: y[1],
            c: y[2],
            t: t_new,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain quadratic formula, used as an independent root oracle.
    fn naive_roots(d: f64, k1: f64, k2: f64) -> (f64, f64) {
        let (a, b, c) = (-d, d - k1 - k2, k2);
        let disc = (b * b - 4.0 * a * c).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        (r1.min(r2), r1.max(r2))
    }

    /// Bisection on f over a bracket, second oracle.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn params_with(growth: GrowthSpec, transitions: TransitionSpec, d: f64) -> ModelParameters {
        ModelParameters {
            gamma: 2.0,
            extra_death: d,
            supply: 0.5,
            c_boundary: 1.0,
            growth,
            consumption: ConsumptionSpec::Linear,
            transitions,
            nutrient: NutrientMode::QuasiStaticDirichlet,
        }
    }

    #[test]
    fn growth_examples() {
        assert_eq!(GrowthSpec::Proportional { g: 1.0 }.eval(0.0, 0.3), 0.0);
        assert_eq!(GrowthSpec::AffineDeath { delta: 0.5 }.eval(0.5, 0.0), 0.0);
        let logistic = GrowthSpec::Logistic {
            g: 2.0,
            capacity: 1.2,
            delta: 0.5,
        };
        assert!((logistic.eval(1.0, 1.2) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn consumption_and_critical_concentration() {
        let psi = ConsumptionSpec::Linear;
        assert_eq!(psi.eval(0.0), 0.0);
        assert_eq!(psi.eval(1.0), 1.0);
        assert_eq!(psi.eval(0.5), 0.5);
        assert_eq!(psi.critical_concentration(0.5).unwrap(), 0.5);
        assert_eq!(psi.critical_concentration(1.0).unwrap(), 1.0);
        assert_eq!(psi.critical_concentration(0.4).unwrap(), 0.4);
        assert!(psi.critical_concentration(0.0).is_err());
    }

    #[test]
    fn transition_examples() {
        let hull = TransitionSpec::Hull {
            k1_max: 3.0,
            k2_max: 3.0,
            omega: 0.5,
        };
        assert_eq!(hull.eval(0.5), (1.5, 1.5));
        assert_eq!(hull.eval(0.0), (3.0, 0.0));
        let constants = TransitionSpec::Constants { k1: 1.0, k2: 1.0 };
        assert_eq!(constants.eval(7.3), (1.0, 1.0));
        // positive-part clamp
        assert_eq!(TransitionSpec::RationalPair.eval(2.0).0, 0.0);
    }

    #[test]
    fn hull_and_rational_monotone() {
        for spec in [
            TransitionSpec::Hull {
                k1_max: 8.0,
                k2_max: 1.0,
                omega: 0.5,
            },
            TransitionSpec::RationalPair,
        ] {
            let mut prev = spec.eval(0.0);
            for i in 1..=400 {
                let cur = spec.eval(i as f64 * 0.01);
                assert!(cur.0 <= prev.0 + 1e-15, "{spec:?} K1 increased at {i}");
                assert!(cur.1 >= prev.1 - 1e-15, "{spec:?} K2 decreased at {i}");
                prev = cur;
            }
        }
    }

    #[test]
    fn rate_function_endpoints() {
        assert_eq!(reaction_rate_f(0.0, 0.7, 3.0, 1.0), 1.0);
        assert_eq!(reaction_rate_f(1.0, 0.7, 1.0, 3.0), -1.0);
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        assert!(reaction_rate_f(eq.mu_star, 0.3, 1.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn roots_match_oracles() {
        // Frozen from the quadratic formula / bisection oracles below.
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        assert!((eq.discriminant - 4.09).abs() < 1e-12);
        assert!((eq.mu_star - 0.537_292).abs() < 1e-6);
        assert!((eq.nu_star + 6.203_958).abs() < 1e-6);
        let (nu, mu) = naive_roots(0.3, 1.0, 1.0);
        assert!((eq.mu_star - mu).abs() < 1e-12);
        assert!((eq.nu_star - nu).abs() < 1e-12);
        let mu_b = bisect(|m| -0.3 * m * m - 1.7 * m + 1.0, 0.0, 1.0);
        assert!((eq.mu_star - mu_b).abs() < 1e-12);

        let eq = ReactionEquilibrium::new(0.1, 0.1, 1.0).unwrap();
        assert!((eq.mu_star - 0.916_080).abs() < 1e-6);
        assert!((eq.nu_star + 10.916_080).abs() < 1e-6);
        let mu_b = bisect(|m| -0.1 * m * m - m + 1.0, 0.0, 1.0);
        let nu_b = bisect(|m| -0.1 * m * m - m + 1.0, -20.0, 0.0);
        assert!((eq.mu_star - mu_b).abs() < 1e-12);
        assert!((eq.nu_star - nu_b).abs() < 1e-10);
    }

    #[test]
    fn degenerate_quadratic_reported() {
        match ReactionEquilibrium::new(0.0, 1.0, 3.0) {
            Err(KineticsError::DegenerateQuadratic { single_root }) => {
                assert!((single_root - 0.75).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ReactionEquilibrium::new(0.3, 0.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(eq.mu_ode_closed_form(eq.mu_star, 5.0).unwrap(), eq.mu_star);
        assert!((eq.mu_ode_closed_form(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(eq.mu_ode_closed_form(eq.nu_star - 1.0, 1.0).is_err());
    }

    /// Adaptive-free RK4 with a very small step, used as a reference.
    fn rk4_scalar(f: impl Fn(f64) -> f64, z0: f64, t: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        let mut z = z0;
        for _ in 0..steps {
            let a = f(z);
            let b = f(z + 0.5 * h * a);
            let c = f(z + 0.5 * h * b);
            let d = f(z + h * c);
            z += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
        z
    }

    #[test]
    fn closed_form_matches_rk_oracle() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        let exact = eq.mu_ode_closed_form(1.0, 2.0).unwrap();
        let oracle = rk4_scalar(|z| reaction_rate_f(z, 0.3, 1.0, 1.0), 1.0, 2.0, 20_000);
        assert!((exact - oracle).abs() < 1e-8, "{exact} vs {oracle}");
    }

    #[test]
    fn pointwise_bound_examples() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(eq.wellmixed_pointwise_bound(eq.mu_star, 3.0).unwrap(), 0.0);
        let b0 = eq.wellmixed_pointwise_bound(1.0, 0.0).unwrap();
        assert!(b0 >= (1.0 - eq.mu_star).abs());
        let z1 = eq.mu_ode_closed_form(1.0, 1.0).unwrap();
        assert!(eq.wellmixed_pointwise_bound(1.0, 1.0).unwrap() >= (z1 - eq.mu_star).abs());
    }

    #[test]
    fn bound_dominates_on_grid() {
        let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let z0 = i as f64 / 9.0;
                let t = j as f64 * 10.0 / 9.0;
                let z = eq.mu_ode_closed_form(z0, t).unwrap();
                let bound = eq.wellmixed_pointwise_bound(z0, t).unwrap();
                assert!((z - eq.mu_star).abs() <= bound * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn ode_linear_relaxation() {
        let p = params_with(
            GrowthSpec::Proportional { g: 1.0 },
            TransitionSpec::Constants { k1: 1.0, k2: 1.0 },
            0.3,
        );
        let s0 = OdeState {
            n1: 0.0,
            n2: 0.0,
            c: 0.0,
            t: 0.0,
        };
        let traj = integrate_ode_model(s0, &p, &|_| 1.0, &|_| 1.0, 2.0, 0.05).unwrap();
        for s in &traj {
            assert_eq!(s.n1, 0.0);
            assert_eq!(s.n2, 0.0);
            assert!((s.c - (1.0 - (-s.t).exp())).abs() < 1e-7);
        }
        assert_eq!(traj.last().unwrap().t, 2.0);
    }

    #[test]
    fn ode_rk4_order() {
        let p = params_with(
            GrowthSpec::Proportional { g: 1.0 },
            TransitionSpec::Hull {
                k1_max: 2.0,
                k2_max: 1.0,
                omega: 0.5,
            },
            0.3,
        );
        let s0 = OdeState {
            n1: 0.4,
            n2: 0.1,
            c: 0.8,
            t: 0.0,
        };
        let lam = |t: f64| 1.0 + 0.5 * t.sin();
        let cb = |_| 1.0;
        let end = |dt| *integrate_ode_model(s0, &p, &lam, &cb, 2.0, dt).unwrap().last().unwrap();
        let reference = end(0.1 / 16.0);
        let err = |s: OdeState| (s.n1 - reference.n1).abs() + (s.n2 - reference.n2).abs() + (s.c - reference.c).abs();
        let e1 = err(end(0.1));
        let e2 = err(end(0.05));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn nutrient_input_schedule() {
        let periodic = NutrientInput::Periodic {
            high: 0.5,
            period: 20.0,
        };
        assert_eq!(periodic.at(0.0), 0.5);
        assert_eq!(periodic.at(9.99), 0.5);
        assert_eq!(periodic.at(10.0), 0.0);
        assert_eq!(periodic.at(25.0), 0.5);
    }

    proptest! {
        #[test]
        fn roots_properties(d in 0.01f64..5.0, k1 in 0.01f64..5.0, k2 in 0.01f64..5.0) {
            let eq = ReactionEquilibrium::new(d, k1, k2).unwrap();
            prop_assert!(eq.nu_star < 0.0 && 0.0 < eq.mu_star && eq.mu_star < 1.0);
            let scale = k1 + k2 + d;
            prop_assert!(reaction_rate_f(eq.mu_star, d, k1, k2).abs() <= 1e-12 * scale);
            let nu_scale = scale * (1.0 + eq.nu_star * eq.nu_star);
            prop_assert!(reaction_rate_f(eq.nu_star, d, k1, k2).abs() <= 1e-12 * nu_scale);
            prop_assert!((eq.decay_rate - eq.discriminant.sqrt()).abs() <= 1e-10 * eq.decay_rate);
            prop_assert!(eq.uniform_a >= 1.0);
        }

        #[test]
        fn closed_form_monotone_and_bounded(z0 in 0.0f64..=1.0, t1 in 0.0f64..10.0, dt in 0.0f64..5.0) {
            let eq = ReactionEquilibrium::new(0.3, 1.0, 1.0).unwrap();
            let a = eq.mu_ode_closed_form(z0, t1).unwrap();
            let b = eq.mu_ode_closed_form(z0, t1 + dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((b - eq.mu_star).abs() <= (a - eq.mu_star).abs() + 1e-14);
            // no overshoot
            prop_assert!((a - eq.mu_star) * (z0 - eq.mu_star) >= 0.0);
        }
    }
}
