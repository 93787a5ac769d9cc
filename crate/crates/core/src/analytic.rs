//! Closed-form solution of the reduced free boundary problem with a
//! constant normal-cell fraction `μ`, linear growth `G(c) = g·c` and linear
//! consumption, on the interval `(−R(t), R(t))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("x = {x} lies outside the tumor (-{radius}, {radius})")]
    OutOfDomain { x: f64, radius: f64 },
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSetup {
    pub mu: f64,
    pub g: f64,
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "cB")]
    pub c_b: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
}

impl AnalyticSetup {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        let bad = |m: String| Err(AnalyticError::InvalidSetup(m));
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("mu = {} must lie in [0, 1]", self.mu));
        }
        if !(self.g > 0.0) || !(self.a >= 0.0) || !(self.d >= 0.0) {
            return bad("g must be positive, a and D non-negative".into());
        }
        if !(self.c_b > 0.0) || !(self.a < self.c_b) {
            return bad(format!("need 0 <= a < c_B, got a = {}, c_B = {}", self.a, self.c_b));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("R0 = {} must be positive", self.r0));
        }
        Ok(())
    }

    /// Amplitude `g(c_B − (1−μ)a)` of the cosh part of the pressure.
    fn cosh_amplitude(&self) -> f64 {
        self.g * (self.c_b - (1.0 - self.mu) * self.a)
    }

    /// `(1−μ)(ga − D)`, the exponential growth rate of large tumors.
    pub fn linear_rate(&self) -> f64 {
        (1.0 - self.mu) * (self.g * self.a - self.d)
    }

    /// `ga ≥ D`: pressure stays positive inside the tumor for every radius.
    pub fn pressure_stays_positive(&self) -> bool {
        self.g * self.a >= self.d
    }
}

/// `cosh(x)/cosh(R)` without overflow for large `R`.
fn cosh_ratio(x: f64, radius: f64) -> f64 {
    let ax = x.abs();
    (ax - radius).exp() * (1.0 + (-2.0 * ax).exp()) / (1.0 + (-2.0 * radius).exp())
}

fn check_domain(x: f64, radius: f64) -> Result<(), AnalyticError> {
    if x.abs() > radius * (1.0 + 1e-12) {
        Err(AnalyticError::OutOfDomain { x, radius })
    } else {
        Ok(())
    }
}

/// `c(x) = (1−μ)a + (c_B − (1−μ)a)·cosh(x)/cosh(R)`.
pub fn analytic_nutrient(x: f64, radius: f64, s: &AnalyticSetup) -> Result<f64, AnalyticError> {
    check_domain(x, radius)?;
    let base = (1.0 - s.mu) * s.a;
    Ok(base + (s.c_b - base) * cosh_ratio(x, radius))
}

/// `p(x) = g(c_B − (1−μ)a)(1 − cosh x/cosh R) + ½(1−μ)(ga − D)(R² − x²)`.
pub fn analytic_pressure(x: f64, radius: f64, s: &AnalyticSetup) -> Result<f64, AnalyticError> {
    check_domain(x, radius)?;
    let x = x.clamp(-radius, radius);
    Ok(s.cosh_amplitude() * (1.0 - cosh_ratio(x, radius)) + 0.5 * s.linear_rate() * (radius * radius - x * x))
}

/// `dR/dt = g(c_B − (1−μ)a)·tanh R + (1−μ)(ga − D)·R`.
pub fn boundary_speed(radius: f64, s: &AnalyticSetup) -> f64 {
    s.cosh_amplitude() * radius.tanh() + s.linear_rate() * radius
}

/// `R0·exp{(1−μ)(ga − D)t}`; `None` when `ga < D`, where no such bound holds.
pub fn exp_growth_lower_bound(t: f64, s: &AnalyticSetup) -> Option<f64> {
    if !s.pressure_stays_positive() {
        return None;
    }
    Some(s.r0 * (s.linear_rate() * t).exp())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RadiusTrajectory {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    pub speeds: Vec<f64>,
    /// Set when `ga < D` and the trajectory passes the radius beyond which
    /// the closed form has a negative interior pressure.
    pub critical_radius: Option<f64>,
}

impl RadiusTrajectory {
    pub fn final_radius(&self) -> f64 {
        *self.radii.last().expect("trajectory has at least one sample")
    }

    /// Whether some sample lies beyond the critical radius.
    pub fn exceeds_critical_radius(&self) -> bool {
        self.critical_radius
            .is_some_and(|rc| self.radii.iter().any(|&r| r > rc))
    }

    /// Linear interpolation in time; clamps outside the sampled range.
    pub fn radius_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.radii[0];
        }
        if k >= self.times.len() {
            return self.final_radius();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.radii[k - 1] * (1.0 - w) + self.radii[k] * w
    }
}

pub const DEFAULT_RADIUS_DT: f64 = 1e-3;

/// RK4 for `dR/dt = boundary_speed(R)`, last step shortened to land on `t_end`.
pub fn integrate_radius(s: &AnalyticSetup, t_end: f64, dt: f64) -> Result<RadiusTrajectory, AnalyticError> {
    s.validate()?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(AnalyticError::InvalidSetup(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let f = |r: f64| boundary_speed(r, s);
    let steps = (t_end / dt).ceil() as usize;
    let mut traj = RadiusTrajectory {
        critical_radius: critical_radius(s),
        ..Default::default()
    };
    let mut r = s.r0;
    traj.times.push(0.0);
    traj.radii.push(r);
    traj.speeds.push(f(r));
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = (t_end - t).min(dt);
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj.times.push(if k + 1 == steps { t_end } else { t + h });
        traj.radii.push(r);
        traj.speeds.push(f(r));
    }
    Ok(traj)
}

/// Smallest radius at which the closed-form pressure loses interior
/// positivity, for `ga < D`.
///
/// On `[0, R]` the pressure first rises then falls (or is monotone), so its
/// minimum is at `x = 0` or at `x = R`; positivity fails once `p(0) ≤ 0` or
/// the boundary speed `−p'(R)` drops to zero.
pub fn critical_radius(s: &AnalyticSetup) -> Option<f64> {
    if s.pressure_stays_positive() {
        return None;
    }
    let margin = |r: f64| {
        let p0 = s.cosh_amplitude() * (1.0 - cosh_ratio(0.0, r)) + 0.5 * s.linear_rate() * r * r;
        p0.min(boundary_speed(r, s))
    };
    let mut lo = 1e-6;
    if margin(lo) <= 0.0 {
        return Some(0.0);
    }
    let mut hi = lo;
    loop {
        hi *= 1.25;
        if margin(hi) <= 0.0 {
            break;
        }
        if hi > 1e6 {
            return None;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
