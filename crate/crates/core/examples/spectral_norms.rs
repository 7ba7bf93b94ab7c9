//! Fractional Sobolev norms of a rough random field and its heat flow.

use fbsde_lab::checks::random_field;
use fbsde_lab::sobolev::{heat_semigroup, sobolev_norm};
use fbsde_lab::PeriodicGrid;

fn main() -> fbsde_lab::Result<()> {
    let grid = PeriodicGrid::new(1, 512, 2.0 * std::f64::consts::PI)?;
    let w = random_field(&grid, 1, -0.25, 255, 7)?;
    println!("‖w‖ in H^-0.25_3 = {:.4}", sobolev_norm(&w, -0.25, 3.0)?);
    println!("{:>10} {:>14}", "t", "‖P(t)w‖_{H^1.5_2.5}");
    for k in 1..=8 {
        let t = 0.5f64.powi(k);
        let smoothed = heat_semigroup(&w, t)?;
        println!("{t:>10.5} {:>14.4}", sobolev_norm(&smoothed, 1.5, 2.5)?);
    }
    Ok(())
}
