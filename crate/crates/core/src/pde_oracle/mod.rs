//! Deterministic survival curves P^{(−ν)}_x(τ_b > t) for b > 0, from a
//! θ-scheme finite-volume solve of the backward equation
//! ∂u/∂t = ½u″ + ((1−2ν)/(2x))u′, u(t, b) = 0, zero flux at x_max.
//!
//! The operator is written as (w u′)′/(2w) with w = x^{1−2ν}. Face fluxes use
//! the scale function x^{2ν} exactly, so harmonic profiles carry no
//! discretisation error and the long-time decay is not polluted by the mesh.

mod grid;
mod io;
mod solver;

pub use grid::{Spacing, SurvivalGrid, TimeSpacing, MIN_NODES};
pub use io::{cache_key, load_or_solve, read_binary, write_binary, write_csv};
pub use solver::{solve_survival, solve_survival_with, Mode, SurvivalSolution, INSTABILITY_SLACK};

pub fn tail_at(sol: &SurvivalSolution, x: f64, t: f64) -> crate::Result<f64> {
    sol.tail_at(x, t)
}
