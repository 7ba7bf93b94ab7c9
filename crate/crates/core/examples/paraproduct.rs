//! Product of a distribution of negative order with a Sobolev function, and the
//! ratio controlled by the product bound.

use fbsde_lab::checks::random_field;
use fbsde_lab::paraproduct::pointwise_product;
use fbsde_lab::sobolev::sobolev_norm;
use fbsde_lab::SolverParams;

fn main() -> fbsde_lab::Result<()> {
    let p = SolverParams::example_1d();
    let grid = p.grid()?;
    for seed in 0..5 {
        let g = random_field(&grid, 1, -p.beta, 170, seed)?;
        let h = random_field(&grid, 1, p.delta, 170, 100 + seed)?;
        let gh = pointwise_product(&g, &h, &p)?;
        let ratio = sobolev_norm(&gh, -p.beta, p.p)? / (sobolev_norm(&g, -p.beta, p.q)? * sobolev_norm(&h, p.delta, p.p)?);
        println!("pair {seed}: ‖gh‖ / (‖g‖‖h‖) = {ratio:.4}");
    }
    Ok(())
}
