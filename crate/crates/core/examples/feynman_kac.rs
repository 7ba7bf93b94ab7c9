//! Monte Carlo estimate of u(0, x) along Brownian paths, corrected by w, against
//! the spectral solution.

use fbsde_lab::fbsde::{feynman_kac_check, FkConfig, FkMode};
use fbsde_lab::pde::{solve_aux_w, solve_semilinear, DriftPath, DriverSpec, FixedPointConfig, TerminalSpec};
use fbsde_lab::{SolverParams, SpectralField};

fn main() -> fbsde_lab::Result<()> {
    let p = SolverParams::example_1d();
    let grid = p.grid()?;
    let drift = DriftPath::Static(SpectralField::from_fn(&grid, 1, |x, _| 0.5 * x[0].sin()));
    let driver = DriverSpec::Linear {
        coefficient: 0.5,
        slope: 0.0,
        offset: Default::default(),
    };
    let phi = TerminalSpec::Gaussian {
        amplitude: 1.0,
        width: 1.0,
        center: vec![0.3],
    }
    .realize(&grid)?;
    let cfg = FixedPointConfig::default();
    let u = solve_semilinear(&drift, &driver, &phi, &p, &cfg)?;
    let w = solve_aux_w(&drift, &u, &p, &cfg)?;
    let paths = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let fk = FkConfig {
        paths,
        ..FkConfig::default()
    };
    let r = feynman_kac_check(&u, &driver, 0, &[0.1], FkMode::Brownian { w: Some(&w) }, &fk)?;
    let c = r.components[0];
    println!(
        "u(0, 0.1) = {:.6}, estimate {:.6} ± {:.6} over {} paths, z = {:.2}",
        c.target, c.estimate, c.standard_error, r.paths, c.z_score
    );
    Ok(())
}
