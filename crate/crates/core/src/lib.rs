//! Simulation toolkit for a two-phase tumor growth model with autophagy:
//! normal and autophagic cells move with a common Darcy velocity driven by
//! a power-law pressure, switch phenotype at nutrient-dependent rates and
//! exchange nutrient with their surroundings.

pub mod analytic;
pub mod diagnostics;
pub mod grid;
pub mod kinetics;
pub mod scenario;
pub mod solver;
