//! Uniform 1D grid with a staggered half-grid, plus the spatial kernels of
//! the transport step: pressure law, limited slopes, MUSCL edge values and
//! the upwind numerical flux.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("grid needs at least 3 cells, got {0}")]
    TooFewCells(usize),
    #[error("{placement:?} grid function has {got} values, expected {expected}")]
    LengthMismatch {
        placement: Placement,
        got: usize,
        expected: usize,
    },
}

/// Regular nodes `x_i = x_min + i·dx`, `i = 0..n_cells`; staggered nodes
/// `x_{i+1/2}` between consecutive regular nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, dx: f64, n_cells: usize) -> Result<Self, GridError> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(GridError::NonPositiveSpacing(dx));
        }
        if n_cells < 3 {
            return Err(GridError::TooFewCells(n_cells));
        }
        Ok(Self { x_min, dx, n_cells })
    }

    /// Grid symmetric about `x = 0` with a node at the origin and
    /// `half_cells` nodes on each side.
    pub fn symmetric(dx: f64, half_cells: usize) -> Result<Self, GridError> {
        Self::new(-(half_cells as f64) * dx, dx, 2 * half_cells + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_staggered(&self) -> usize {
        self.n_cells - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_half(&self, k: usize) -> f64 {
        self.x_min + (k as f64 + 0.5) * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.x(i))
    }

    pub fn len(&self, placement: Placement) -> usize {
        match placement {
            Placement::Regular => self.n_cells,
            Placement::Staggered => self.n_cells - 1,
        }
    }

    /// Same spacing, `left` extra cells before and `right` after.
    pub fn extended(&self, left: usize, right: usize) -> Self {
        Self {
            x_min: self.x_min - left as f64 * self.dx,
            dx: self.dx,
            n_cells: self.n_cells + left + right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Regular,
    Staggered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    placement: Placement,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid1D, placement: Placement, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = grid.len(placement);
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                placement,
                got: values.len(),
                expected,
            });
        }
        Ok(Self { placement, values })
    }

    pub fn regular(values: Vec<f64>) -> Self {
        Self {
            placement: Placement::Regular,
            values,
        }
    }

    pub fn staggered(values: Vec<f64>) -> Self {
        Self {
            placement: Placement::Staggered,
            values,
        }
    }

    pub fn constant(grid: &Grid1D, placement: Placement, value: f64) -> Self {
        Self {
            placement,
            values: vec![value; grid.len(placement)],
        }
    }

    pub fn from_fn(grid: &Grid1D, placement: Placement, f: impl Fn(f64) -> f64) -> Self {
        let values = match placement {
            Placement::Regular => (0..grid.n_cells()).map(|i| f(grid.x(i))).collect(),
            Placement::Staggered => (0..grid.n_staggered()).map(|k| f(grid.x_half(k))).collect(),
        };
        Self { placement, values }
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fits(&self, grid: &Grid1D) -> bool {
        self.values.len() == grid.len(self.placement)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pads with `fill` on both ends, keeping existing values in place.
    pub fn padded(&self, left: usize, right: usize, fill: f64) -> Self {
        let mut values = Vec::with_capacity(self.values.len() + left + right);
        values.extend(std::iter::repeat_n(fill, left));
        values.extend_from_slice(&self.values);
        values.extend(std::iter::repeat_n(fill, right));
        Self {
            placement: self.placement,
            values,
        }
    }
}

/// Simulation state. `u` lives on the staggered grid; everything else on the
/// regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub n1: GridFunction,
    pub n2: GridFunction,
    pub c: GridFunction,
    pub u: GridFunction,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: Grid1D, n1: Vec<f64>, n2: Vec<f64>, c: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self, GridError> {
        Ok(Self {
            n1: GridFunction::new(&grid, Placement::Regular, n1)?,
            n2: GridFunction::new(&grid, Placement::Regular, n2)?,
            c: GridFunction::new(&grid, Placement::Regular, c)?,
            u: GridFunction::new(&grid, Placement::Staggered, u)?,
            grid,
            t,
        })
    }

    /// Empty tumor: no cells, nutrient at `c_b`, fluid at rest.
    pub fn empty(grid: Grid1D, c_b: f64, t: f64) -> Self {
        Self {
            n1: GridFunction::constant(&grid, Placement::Regular, 0.0),
            n2: GridFunction::constant(&grid, Placement::Regular, 0.0),
            c: GridFunction::constant(&grid, Placement::Regular, c_b),
            u: GridFunction::constant(&grid, Placement::Staggered, 0.0),
            grid,
            t,
        }
    }

    pub fn total_density(&self) -> GridFunction {
        GridFunction::regular(
            self.n1
                .values()
                .iter()
                .zip(self.n2.values())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn pressure(&self, gamma: f64) -> GridFunction {
        GridFunction::regular(
            self.n1
                .values()
                .iter()
                .zip(self.n2.values())
                .map(|(a, b)| pressure_from_density(a + b, gamma))
                .collect(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.n1.all_finite() && self.n2.all_finite() && self.c.all_finite() && self.u.all_finite() && self.t.is_finite()
    }

    /// Mirror image about `x = 0` on a symmetric grid.
    pub fn reflected(&self) -> Self {
        let rev = |f: &GridFunction| GridFunction {
            placement: f.placement,
            values: f.values.iter().rev().copied().collect(),
        };
        Self {
            grid: self.grid,
            n1: rev(&self.n1),
            n2: rev(&self.n2),
            c: rev(&self.c),
            u: GridFunction::staggered(self.u.values.iter().rev().map(|v| -v).collect()),
            t: self.t,
        }
    }
}

/// `p = γ/(γ−1)·n^{γ−1}`.
pub fn pressure_from_density(n: f64, gamma: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    gamma / (gamma - 1.0) * n.powf(gamma - 1.0)
}

/// Inverse of [`pressure_from_density`].
pub fn density_from_pressure(p: f64, gamma: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    ((gamma - 1.0) / gamma * p).powf(1.0 / (gamma - 1.0))
}

/// Midpoint average `n_{i+1/2} = (n_i + n_{i+1})/2`.
pub fn staggered_density(n: &GridFunction) -> GridFunction {
    debug_assert_eq!(n.placement, Placement::Regular);
    GridFunction::staggered(n.values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

/// Three-point limited slope: the smallest of the one-sided and central
/// differences when they agree in sign, zero at extrema.
pub fn limited_slope(n_prev: f64, n_mid: f64, n_next: f64, dx: f64) -> f64 {
    let back = (n_mid - n_prev) / dx;
    let central = (n_next - n_prev) / (2.0 * dx);
    let fwd = (n_next - n_mid) / dx;
    if back > 0.0 && central > 0.0 && fwd > 0.0 {
        back.min(central).min(fwd)
    } else if back < 0.0 && central < 0.0 && fwd < 0.0 {
        back.max(central).max(fwd)
    } else {
        0.0
    }
}

/// MUSCL edge values on every interior interface: `(left, right)` where
/// `left[k] = n_k + dx/2·s_k` and `right[k] = n_{k+1} − dx/2·s_{k+1}`.
/// The first and last cells carry slope 0.
pub fn edge_values(n: &GridFunction, dx: f64) -> (GridFunction, GridFunction) {
    let v = n.values();
    let len = v.len();
    let mut slope = vec![0.0; len];
    for i in 1..len.saturating_sub(1) {
        slope[i] = limited_slope(v[i - 1], v[i], v[i + 1], dx);
    }
    let half = 0.5 * dx;
    let left = (0..len - 1).map(|k| v[k] + half * slope[k]).collect();
    let right = (0..len - 1).map(|k| v[k + 1] - half * slope[k + 1]).collect();
    (GridFunction::staggered(left), GridFunction::staggered(right))
}

/// Upwind flux: `n_L·u` for `u > 0`, `n_R·u` for `u < 0`.
pub fn numerical_flux(n_left: f64, n_right: f64, u: f64) -> f64 {
    if u > 0.0 {
        n_left * u
    } else if u < 0.0 {
        n_right * u
    } else {
        0.0
    }
}

/// `(F_{i+1/2} − F_{i−1/2})/dx` on every regular node, with zero flux
/// through the two outer faces of the domain.
pub fn flux_divergence(n: &GridFunction, u: &GridFunction, dx: f64) -> Vec<f64> {
    let (left, right) = edge_values(n, dx);
    let flux: Vec<f64> = left
        .values()
        .iter()
        .zip(right.values())
        .zip(u.values())
        .map(|((&l, &r), &uk)| numerical_flux(l, r, uk))
        .collect();
    let len = n.len();
    (0..len)
        .map(|i| {
            let east = if i + 1 < len { flux[i] } else { 0.0 };
            let west = if i > 0 { flux[i - 1] } else { 0.0 };
            (east - west) / dx
        })
        .collect()
}
