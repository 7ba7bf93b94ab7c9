//! Mild solutions of the backward semilinear PDE and its two auxiliary linear
//! equations, on a periodic grid with an exponential time integrator.

mod drift;
mod driver;
mod duhamel;
mod mild;
mod solver;
mod terminal;

pub use drift::DriftPath;
pub use driver::{empirical_lipschitz, lipschitz_in_dim, Driver, DriverSpec, Offset};
pub use duhamel::{duhamel_integral, duhamel_sweep};
pub use mild::{FixedPointConfig, MildSolution, SolveReport};
pub use solver::{
    choose_lambda, holder_time_bound_check, solve_aux_w, solve_aux_xi, solve_semilinear, HolderTimeReport,
    XI_GRADIENT_TARGET,
};
pub use terminal::{fourier_field, FourierMode, TerminalSpec};
