//! Backward Duhamel integrals `I(t_k) = ∫_{t_k}^T e^{-κ(r-t_k)} P(r - t_k) S(r) dr`
//! by an exponential integrator: on each step the source is held at the mean of
//! its endpoint values and the heat factor is integrated exactly per mode.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;

/// Per-mode step factors `E = e^{-aΔt}` and `φ = (1 - E)/a`, with `a = |ξ|²/2 + κ`.
fn step_factors(grid: &PeriodicGrid, dt: f64, kappa: f64) -> (Vec<f64>, Vec<f64>) {
    grid.xi_sq()
        .iter()
        .map(|&x2| {
            let a = 0.5 * x2 + kappa;
            let e = (-a * dt).exp();
            let phi = if a == 0.0 { dt } else { -(-a * dt).exp_m1() / a };
            (e, phi)
        })
        .unzip()
}

/// Sweep over raw coefficient arrays: `sources[k][c][mode]`.
pub(crate) fn sweep_coefficients(
    grid: &PeriodicGrid,
    sources: &[Vec<Vec<Complex64>>],
    knots: &[f64],
    kappa: f64,
) -> Vec<Vec<Vec<Complex64>>> {
    let n = knots.len();
    let ncomp = sources.first().map_or(0, |s| s.len());
    let mut out = vec![vec![vec![Complex64::new(0.0, 0.0); grid.len()]; ncomp]; n];
    let mut cached_dt = f64::NAN;
    let mut factors = (Vec::new(), Vec::new());
    for k in (0..n.saturating_sub(1)).rev() {
        let dt = knots[k + 1] - knots[k];
        if dt != cached_dt {
            factors = step_factors(grid, dt, kappa);
            cached_dt = dt;
        }
        let (e, phi) = &factors;
        let (head, tail) = out.split_at_mut(k + 1);
        for c in 0..ncomp {
            let next = &tail[0][c];
            let cur = &mut head[k][c];
            let (s0, s1) = (&sources[k][c], &sources[k + 1][c]);
            for m in 0..grid.len() {
                cur[m] = next[m] * e[m] + (s0[m] + s1[m]) * (0.5 * phi[m]);
            }
        }
    }
    out
}

/// The integral at every knot; `I(T) = 0`.
pub fn duhamel_sweep(sources: &[SpectralField], knots: &[f64], kappa: f64) -> Result<Vec<SpectralField>> {
    if sources.len() != knots.len() {
        return Err(Error::KnotMismatch(format!(
            "{} sources for {} knots",
            sources.len(),
            knots.len()
        )));
    }
    let Some(first) = sources.first() else {
        return Ok(Vec::new());
    };
    for s in sources {
        first.check_compatible(s)?;
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
    }
    let raw: Vec<Vec<Vec<Complex64>>> = sources.iter().map(|s| s.components().to_vec()).collect();
    sweep_coefficients(first.grid(), &raw, knots, kappa)
        .into_iter()
        .zip(knots)
        .map(|(c, &t)| SpectralField::from_coefficients(first.grid(), c).map(|f| f.with_time(t)))
        .collect()
}

/// The integral from knot `index` to the horizon.
pub fn duhamel_integral(sources: &[SpectralField], knots: &[f64], index: usize, kappa: f64) -> Result<SpectralField> {
    if index >= knots.len() {
        return Err(Error::InvalidArgument(format!("knot index {index} out of range")));
    }
    Ok(duhamel_sweep(sources, knots, kappa)?.swap_remove(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::uniform_knots;

    #[test]
    fn constant_source_integrates_exactly() {
        // S = cos(x): I(t) = 2(1 - e^{-(T-t)/2}) cos(x) for ξ = 1.
        let g = PeriodicGrid::new(1, 32, std::f64::consts::PI).unwrap();
        let s = SpectralField::from_fn(&g, 1, |x, _| x[0].cos());
        let knots = uniform_knots(0.8, 16);
        let sources = vec![s.clone(); knots.len()];
        let out = duhamel_sweep(&sources, &knots, 0.0).unwrap();
        let expect = 2.0 * (1.0 - (-0.4f64).exp());
        let got = out[0].to_physical()[0][16];
        assert!((got - expect).abs() < 1e-13, "{got} vs {expect}");
        assert_eq!(out[16].coefficient_norm(), 0.0);
    }

    #[test]
    fn zero_mode_with_no_damping_is_length_of_interval() {
        let g = PeriodicGrid::new(1, 8, 1.0).unwrap();
        let one = SpectralField::from_fn(&g, 1, |_, _| 1.0);
        let knots = uniform_knots(0.5, 5);
        let out = duhamel_integral(&vec![one; 6], &knots, 0, 0.0).unwrap();
        assert!((out.component(0)[0].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let g = PeriodicGrid::new(1, 8, 1.0).unwrap();
        let z = SpectralField::zeros(&g, 1);
        assert!(duhamel_sweep(&[z.clone(), z], &[0.0, 0.5, 1.0], 0.0).is_err());
    }
}
