//! Forward paths, the backward pair along them and the probabilistic checks.

mod bsde;
mod covariation;
mod feynman_kac;
mod interp;
mod paths;

pub use bsde::{
    bsde_residual, bsde_residual_transformed, evaluate_bsde_pair, streamed_bsde_residual, zvonkin_transform,
    ResidualComponents, ResidualReport, ZvonkinDirection,
};
pub use covariation::{covariation_check, CovariationReport};
pub use feynman_kac::{feynman_kac_check, FkConfig, FkMode, FkReport, FkStatistic};
pub use interp::{interpolate, Stencil};
pub use paths::{
    brownian_increments, drift_samples, interior_band, invert_phi, simulate_brownian, simulate_direct_euler,
    simulate_forward_virtual, ForwardModel, PathEnsemble, PathRecord, PathSpec, INVERSION_MAX_ITERATIONS,
    INVERSION_TOLERANCE, MAX_FLAGGED_FRACTION,
};
pub(crate) use paths::check_domain;
