//! The windowed covariation of Y with W against ∫ Z dr for the heat flow, at two
//! resolutions with ε/Δt fixed.

use fbsde_lab::fbsde::{covariation_check, evaluate_bsde_pair, simulate_brownian};
use fbsde_lab::pde::{solve_semilinear, DriftPath, DriverSpec, FixedPointConfig, TerminalSpec};
use fbsde_lab::SolverParams;

fn main() -> fbsde_lab::Result<()> {
    for steps in [256, 1024] {
        let p = SolverParams {
            steps,
            grid_points: 256,
            ..SolverParams::example_1d()
        };
        let grid = p.grid()?;
        let phi = TerminalSpec::Gaussian {
            amplitude: 1.0,
            width: 1.0,
            center: vec![0.3],
        }
        .realize(&grid)?;
        let u = solve_semilinear(&DriftPath::zero(&grid), &DriverSpec::Zero, &phi, &p, &FixedPointConfig::default())?;
        let mut e = simulate_brownian(&[0.0], u.times(), 400, 21, p.half_width)?;
        evaluate_bsde_pair(&u, &mut e)?;
        let c = covariation_check(&e, 8.0 * p.dt())?;
        println!("K = {steps:>5}, ε = {:.5}: mean sup gap {:.4e}", c.epsilon, c.sup_gap);
    }
    Ok(())
}
