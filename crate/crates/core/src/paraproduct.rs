//! Pointwise product of a distribution `g ∈ H^{-β}_q` with a function
//! `h ∈ H^δ_p`, realized as `S^J g · S^J h` at the finest level `J` the grid
//! resolves, where `S^j` multiplies Fourier coefficients by `ψ(ξ / 2^j)`.
//!
//! Products are formed in physical space on a grid with twice as many points per
//! axis and truncated back, which is exact for the retained band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::params::SolverParams;

/// Radial cutoff `ψ`: 1 on `|x| < 1`, 0 on `|x| ≥ 3/2`, monotone in between.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffProfile {
    /// `1 - (6r⁵ - 15r⁴ + 10r³)` with `r = 2(|x| - 1)`.
    #[default]
    QuinticSmoothstep,
    /// `1 - (3r² - 2r³)`; only C¹, used to check profile independence.
    CubicSmoothstep,
}

impl CutoffProfile {
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        if a < 1.0 {
            return 1.0;
        }
        if a >= 1.5 {
            return 0.0;
        }
        let r = 2.0 * (a - 1.0);
        match self {
            CutoffProfile::QuinticSmoothstep => 1.0 - r * r * r * (10.0 + r * (-15.0 + 6.0 * r)),
            CutoffProfile::CubicSmoothstep => 1.0 - r * r * (3.0 - 2.0 * r),
        }
    }
}

/// `S^j g`: coefficients multiplied by `ψ(ξ / 2^j)`.
pub fn smooth_cutoff(g: &SpectralField, level: u32, profile: CutoffProfile) -> SpectralField {
    let scale = 0.5f64.powi(level as i32);
    let xi_sq = g.grid().xi_sq();
    g.apply_symbol(|k| profile.eval(xi_sq[k].sqrt() * scale))
}

/// Smallest `J` whose plateau `|ξ| < 2^J` (closed at the edge) covers every mode.
pub fn finest_level(grid: &PeriodicGrid) -> u32 {
    let max_xi = grid.max_axis_wavenumber() * (grid.dim() as f64).sqrt();
    let mut j = 0u32;
    while 2f64.powi(j as i32) < max_xi {
        j += 1;
    }
    j
}

/// Parameter regime in which the product is defined and bounded.
pub fn check_product_gate(params: &SolverParams) -> Result<()> {
    let d = params.dim as f64;
    let (beta, q, delta, p) = (params.beta, params.q, params.delta, params.p);
    let mut bad = Vec::new();
    if !(p > 1.0 && p.is_finite()) {
        bad.push(format!("p = {p} ∉ (1, ∞)"));
    }
    if !(q > 1.0 && q.is_finite()) {
        bad.push(format!("q = {q} ∉ (1, ∞)"));
    }
    if !(q > p.max(d / delta)) {
        bad.push(format!("q = {q} ≤ max(p, d/δ) = {}", p.max(d / delta)));
    }
    if !(beta > 0.0 && beta < 0.5) {
        bad.push(format!("β = {beta} ∉ (0, 1/2)"));
    }
    if !(beta < delta) {
        bad.push("β ≥ δ".into());
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::ParameterGate(format!("pointwise product: {}", bad.join("; "))))
    }
}

/// Physical samples of a single component on the doubled grid, ready to be
/// multiplied against other padded factors.
#[derive(Clone, Debug)]
pub struct PaddedFactor {
    samples: Vec<f64>,
}

impl PaddedFactor {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Zero-pads to the doubled grid (splitting Nyquist coefficients evenly between
/// `±N/2`) and evaluates in physical space.
pub(crate) fn pad_to_physical(grid: &PeriodicGrid, fine: &PeriodicGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut data = vec![Complex64::new(0.0, 0.0); fine.len()];
    let half = (grid.n() / 2) as i64;
    let d = grid.dim();
    for (flat, &z) in coeffs.iter().enumerate() {
        if z == Complex64::new(0.0, 0.0) {
            continue;
        }
        let m = grid.modes(flat);
        let nyq: Vec<usize> = (0..d).filter(|&a| m[a] == -half).collect();
        let weight = 0.5f64.powi(nyq.len() as i32);
        for mask in 0..(1usize << nyq.len()) {
            let mut mm = m;
            for (bit, &axis) in nyq.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    mm[axis] = half;
                }
            }
            data[fine.index_of_modes(mm)] += z * weight;
        }
    }
    fine.fft_inverse(&mut data);
    data.into_iter().map(|z| z.re).collect()
}

/// Transforms doubled-grid samples and folds the retained band back to `grid`.
pub(crate) fn truncate_from_physical(grid: &PeriodicGrid, fine: &PeriodicGrid, samples: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fine.fft_forward(&mut data);
    let norm = 1.0 / fine.len() as f64;
    let half = (grid.n() / 2) as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (flat, z) in data.into_iter().enumerate() {
        let m = fine.modes(flat);
        if (0..grid.dim()).all(|a| m[a].abs() <= half) {
            out[grid.index_of_modes(m)] += z * norm;
        }
    }
    out
}

/// Evaluates `S^level g` for one component on the doubled grid.
pub fn prepare_factor(g: &SpectralField, component: usize, level: u32, profile: CutoffProfile) -> Result<PaddedFactor> {
    let grid = g.grid();
    let fine = grid.refined(2)?;
    let cut = smooth_cutoff(g, level, profile);
    Ok(PaddedFactor {
        samples: pad_to_physical(grid, &fine, cut.component(component)),
    })
}

/// `S^level(prepared) · S^level h` for one component of `h`, returned on the
/// original grid.
pub fn multiply_prepared(
    prepared: &PaddedFactor,
    h: &SpectralField,
    component: usize,
    level: u32,
    profile: CutoffProfile,
    fine: &PeriodicGrid,
) -> Vec<Complex64> {
    let grid = h.grid();
    let cut = smooth_cutoff(h, level, profile);
    let mut hs = pad_to_physical(grid, fine, cut.component(component));
    hs.iter_mut().zip(&prepared.samples).for_each(|(a, b)| *a *= b);
    truncate_from_physical(grid, fine, &hs)
}

/// `S^level g · S^level h` without the parameter gate. Components are paired
/// one-to-one, or broadcast when either factor has a single component.
pub fn product_at_level(g: &SpectralField, h: &SpectralField, level: u32, profile: CutoffProfile) -> Result<SpectralField> {
    if g.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let (ng, nh) = (g.num_components(), h.num_components());
    let n_out = match (ng, nh) {
        (a, b) if a == b => a,
        (1, b) => b,
        (a, 1) => a,
        (a, b) => {
            return Err(Error::ShapeMismatch {
                expected: format!("{a} components or 1"),
                actual: format!("{b}"),
            })
        }
    };
    let grid = g.grid();
    let fine = grid.refined(2)?;
    let components = (0..n_out)
        .map(|c| {
            let gi = if ng == 1 { 0 } else { c };
            let hi = if nh == 1 { 0 } else { c };
            let prepared = prepare_factor(g, gi, level, profile)?;
            Ok(multiply_prepared(&prepared, h, hi, level, profile, &fine))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_coefficients(grid, components)
}

/// The pointwise product `gh := lim_j S^j g S^j h`, evaluated at the finest
/// resolved level, for `g` of order `-β` and `h` of order `δ`.
pub fn pointwise_product(g: &SpectralField, h: &SpectralField, params: &SolverParams) -> Result<SpectralField> {
    check_product_gate(params)?;
    product_at_level(g, h, finest_level(g.grid()), CutoffProfile::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(1, 64, 2.0 * PI).unwrap()
    }

    #[test]
    fn profile_shape() {
        for p in [CutoffProfile::QuinticSmoothstep, CutoffProfile::CubicSmoothstep] {
            assert_eq!(p.eval(0.0), 1.0);
            assert_eq!(p.eval(0.999), 1.0);
            assert_eq!(p.eval(1.5), 0.0);
            assert_eq!(p.eval(-2.0), 0.0);
            let mut prev = 1.0;
            for i in 0..=100 {
                let v = p.eval(1.0 + 0.005 * i as f64);
                assert!((0.0..=1.0).contains(&v) && v <= prev + 1e-15);
                prev = v;
            }
            // C¹ at both junctions: one-sided difference quotients vanish
            let h = 1e-6;
            assert!(((p.eval(1.0 + h) - p.eval(1.0)) / h).abs() < 1e-4);
            assert!(((p.eval(1.5) - p.eval(1.5 - h)) / h).abs() < 1e-4);
        }
    }

    #[test]
    fn cutoff_keeps_constants_and_kills_high_modes() {
        let g = grid();
        let c = SpectralField::from_fn(&g, 1, |_, _| 1.25);
        for j in 0..6 {
            assert!(smooth_cutoff(&c, j, CutoffProfile::default()).max_coefficient_distance(&c) < 1e-15);
        }
        // single mode with |ξ| = 2^{j+1}: ξ = k/2 on L = 2π, so k = 2^{j+2}
        let j = 2;
        let k = 1 << (j + 2);
        let f = SpectralField::from_fn(&g, 1, |x, _| (0.5 * k as f64 * x[0]).cos());
        let out = smooth_cutoff(&f, j, CutoffProfile::default());
        assert!(out.coefficient_norm() < 1e-14);
    }

    #[test]
    fn finest_level_covers_band() {
        let g = PeriodicGrid::new(1, 512, 2.0 * PI).unwrap();
        // ξ_max = 128 on this grid
        assert_eq!(finest_level(&g), 7);
        let g2 = PeriodicGrid::new(1, 64, 1.0).unwrap();
        let j = finest_level(&g2);
        assert!(2f64.powi(j as i32) >= g2.max_axis_wavenumber());
        assert!(2f64.powi(j as i32 - 1) < g2.max_axis_wavenumber());
    }

    #[test]
    fn gate_rejects_outside_regime() {
        let mut p = SolverParams::example_1d();
        assert!(check_product_gate(&p).is_ok());
        p.q = 2.0;
        assert!(check_product_gate(&p).is_err());
        let mut p = SolverParams::example_1d();
        p.delta = 0.2;
        assert!(check_product_gate(&p).is_err());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = SpectralField::zeros(&grid(), 1);
        let b = SpectralField::zeros(&PeriodicGrid::new(1, 32, 2.0 * PI).unwrap(), 1);
        assert!(matches!(
            pointwise_product(&a, &b, &SolverParams::example_1d()),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn product_of_two_modes_is_their_sum_mode() {
        let g = grid();
        let l = g.half_width();
        let w = PI / l;
        let a = SpectralField::from_fn(&g, 1, |x, _| (3.0 * w * x[0]).cos());
        let b = SpectralField::from_fn(&g, 1, |x, _| (5.0 * w * x[0]).cos());
        let prod = pointwise_product(&a, &b, &SolverParams::example_1d()).unwrap();
        let want = SpectralField::from_fn(&g, 1, |x, _| 0.5 * ((8.0 * w * x[0]).cos() + (2.0 * w * x[0]).cos()));
        assert!(prod.max_coefficient_distance(&want) < 1e-14);
    }
}
