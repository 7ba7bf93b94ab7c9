//! Numerical laboratory for backward SDEs whose forward drift is a Sobolev
//! distribution `b ∈ H^{-β}_q`.
//!
//! The semilinear PDE behind the equation is solved in mild form on a periodic
//! grid ([`pde`]); the drift is mollified to study stability ([`mollify`]); Monte
//! Carlo paths of the forward process and the Zvonkin-transformed backward pair
//! are built from those fields ([`fbsde`]); and [`orchestrator`] ties runs to
//! scenario files and reproducible artifacts.

pub mod checks;
pub mod error;
pub mod fbsde;
pub mod field;
pub mod grid;
pub mod mollify;
pub mod oracle;
pub mod orchestrator;
pub mod paraproduct;
pub mod params;
pub mod pde;
pub mod sobolev;
pub mod stats;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::PeriodicGrid;
pub use params::{validate_standing_assumptions, SolverParams, ValidationReport};
