//! Bessel-potential spaces `H^s_p` on the torus, the heat semigroup generated by
//! `½Δ`, spectral gradients and the sup/Hölder statistics used by the stability
//! checks.
//!
//! `A = I - ½Δ` has symbol `1 + |ξ|²/2`; `‖g‖_{H^s_p} = ‖A^{s/2} g‖_{L^p}` with the
//! `L^p` norm evaluated by equal-weight quadrature on the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Symbol of `A^{s/2}` at `|ξ|²`.
#[inline]
pub fn bessel_symbol(xi_sq: f64, s: f64) -> f64 {
    (1.0 + 0.5 * xi_sq).powf(0.5 * s)
}

/// Apply `A^{s/2}`.
pub fn bessel_power(field: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return field.clone();
    }
    let xi_sq = field.grid().xi_sq();
    field.apply_symbol(|k| bessel_symbol(xi_sq[k], s))
}

/// `L^p` norm of grid samples with cell-volume weights.
pub fn lp_norm_samples(samples: &[f64], cell_volume: f64, p: f64) -> f64 {
    let m = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    // scale by the max to keep |v|^p in range for large p
    let sum: f64 = samples.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * (sum * cell_volume).powf(1.0 / p)
}

/// `L^p` norm of a field, components combined as `(Σ_i ‖g_i‖_p^p)^{1/p}`.
pub fn lp_norm(field: &SpectralField, p: f64) -> Result<f64> {
    check_p(p)?;
    let vol = field.grid().cell_volume();
    let norms: Vec<f64> = field
        .to_physical()
        .iter()
        .map(|s| lp_norm_samples(s, vol, p))
        .collect();
    Ok(combine(&norms, p))
}

/// `‖g‖_{H^s_p}`.
pub fn sobolev_norm(field: &SpectralField, s: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    lp_norm(&bessel_power(field, s), p)
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "integrability index must lie in (1, ∞), got {p}"
        )));
    }
    Ok(())
}

fn combine(norms: &[f64], p: f64) -> f64 {
    if norms.len() == 1 {
        return norms[0];
    }
    let m = norms.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * norms.iter().map(|n| (n / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Heat semigroup `P(t) = e^{t Δ/2}`.
pub fn heat_semigroup(field: &SpectralField, t: f64) -> Result<SpectralField> {
    damped_heat_semigroup(field, t, 0.0)
}

/// `e^{-κ t} P(t)`, the semigroup of `½Δ - κ`.
pub fn damped_heat_semigroup(field: &SpectralField, t: f64, kappa: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup time must be ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let xi_sq = field.grid().xi_sq();
    Ok(field.apply_symbol(|k| (-t * (0.5 * xi_sq[k] + kappa)).exp()))
}

/// Spectral gradient. For a field with `m` components the result has `m·d`
/// components, component `i·d + j` holding `∂_j g_i`. The Nyquist mode is dropped
/// along the differentiated axis so that real fields stay real.
pub fn gradient(field: &SpectralField) -> SpectralField {
    let grid = field.grid();
    let d = grid.dim();
    let mut components = Vec::with_capacity(field.num_components() * d);
    for c in field.components() {
        for axis in 0..d {
            let comp: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(k, z)| {
                    if grid.is_nyquist(k, axis) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        z * Complex64::new(0.0, grid.wavenumber(k)[axis])
                    }
                })
                .collect();
            components.push(comp);
        }
    }
    let out = SpectralField::from_coefficients(grid, components).expect("same grid");
    match field.time() {
        Some(t) => out.with_time(t),
        None => out,
    }
}

/// Pointwise Euclidean magnitude across components, per grid point.
pub fn pointwise_magnitude(samples: &[Vec<f64>]) -> Vec<f64> {
    let n = samples.first().map_or(0, |s| s.len());
    (0..n)
        .map(|j| samples.iter().map(|s| s[j] * s[j]).sum::<f64>().sqrt())
        .collect()
}

/// `sup_x |g(x)|` over grid points (Euclidean across components).
pub fn sup_norm(field: &SpectralField) -> f64 {
    sup_norm_samples(&field.to_physical())
}

pub fn sup_norm_samples(samples: &[Vec<f64>]) -> f64 {
    pointwise_magnitude(samples).into_iter().fold(0.0, f64::max)
}

/// Sup over knots and grid of `|g|`, and the empirical time-Hölder quotient
/// `max_{s≠t} ‖g(t) - g(s)‖_∞ / |t - s|^γ`.
pub fn sup_norm_and_holder(fields: &[SpectralField], times: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if fields.len() < 2 || fields.len() != times.len() {
        return Err(Error::InvalidArgument(format!(
            "need ≥ 2 knots with matching times, got {} fields and {} times",
            fields.len(),
            times.len()
        )));
    }
    let samples: Vec<Vec<Vec<f64>>> = fields.iter().map(|f| f.to_physical()).collect();
    sup_and_holder_samples(&samples, times, gamma)
}

pub(crate) fn sup_and_holder_samples(samples: &[Vec<Vec<f64>>], times: &[f64], gamma: f64) -> Result<(f64, f64)> {
    let sup = samples.iter().map(|s| sup_norm_samples(s)).fold(0.0, f64::max);
    let mut quotient: f64 = 0.0;
    for a in 0..samples.len() {
        for b in (a + 1)..samples.len() {
            let dt = (times[b] - times[a]).abs();
            if dt == 0.0 {
                continue;
            }
            let mut diff: f64 = 0.0;
            let npts = samples[a][0].len();
            for j in 0..npts {
                let mut s2 = 0.0;
                for c in 0..samples[a].len() {
                    let v = samples[b][c][j] - samples[a][c][j];
                    s2 += v * v;
                }
                diff = diff.max(s2.sqrt());
            }
            quotient = quotient.max(diff / dt.powf(gamma));
        }
    }
    Ok((sup, quotient))
}

/// Empirical spatial `α`-Hölder seminorm `sup |g(x) - g(y)| / |x - y|^α` on the
/// grid, with torus distances. In two dimensions the offsets are restricted to a
/// dyadic-plus-local stencil.
pub fn spatial_holder_seminorm(field: &SpectralField, alpha: f64) -> f64 {
    let grid = field.grid();
    let n = grid.n();
    let h = grid.spacing();
    let samples = field.to_physical();
    let mut best: f64 = 0.0;
    let diff_at = |j: usize, k: usize| -> f64 {
        samples
            .iter()
            .map(|s| (s[j] - s[k]) * (s[j] - s[k]))
            .sum::<f64>()
            .sqrt()
    };
    match grid.dim() {
        1 => {
            for o in 1..=n / 2 {
                let denom = (o as f64 * h).powf(alpha);
                for j in 0..n {
                    best = best.max(diff_at(j, (j + o) % n) / denom);
                }
            }
        }
        _ => {
            let mut offsets: Vec<usize> = (0..=4).collect();
            let mut o = 6;
            while o <= n / 2 {
                offsets.push(o);
                offsets.push(o + o / 2);
                o *= 2;
            }
            offsets.retain(|&o| o <= n / 2);
            offsets.sort_unstable();
            offsets.dedup();
            for &o0 in &offsets {
                for &o1 in &offsets {
                    if o0 == 0 && o1 == 0 {
                        continue;
                    }
                    let dist = ((o0 * o0 + o1 * o1) as f64).sqrt() * h;
                    let denom = dist.powf(alpha);
                    for r in 0..n {
                        for c in 0..n {
                            let j = r * n + c;
                            let k = ((r + o0) % n) * n + (c + o1) % n;
                            best = best.max(diff_at(j, k) / denom);
                        }
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(1, 128, 2.0 * PI).unwrap()
    }

    #[test]
    fn bessel_power_of_order_zero_is_identity() {
        let g = grid();
        let f = SpectralField::from_fn(&g, 1, |x, _| (x[0]).sin() + 0.3);
        assert_eq!(bessel_power(&f, 0.0).max_coefficient_distance(&f), 0.0);
    }

    #[test]
    fn bessel_power_leaves_constants() {
        let g = grid();
        let f = SpectralField::from_fn(&g, 1, |_, _| 2.0);
        for s in [-1.3, 0.4, 2.0] {
            assert!(bessel_power(&f, s).max_coefficient_distance(&f) < 1e-14);
        }
    }

    #[test]
    fn bessel_power_two_scales_single_mode() {
        let g = grid();
        let l = g.half_width();
        let k = 5.0;
        let xi = PI * k / l;
        let f = SpectralField::from_fn(&g, 1, |x, _| (xi * x[0]).cos());
        let out = bessel_power(&f, 2.0);
        let idx = g.index_of_modes([5, 0]);
        let ratio = out.component(0)[idx] / f.component(0)[idx];
        assert!((ratio.re - (1.0 + xi * xi / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_norm_matches_torus_volume() {
        let g = grid();
        let c = -1.7;
        let f = SpectralField::from_fn(&g, 1, |_, _| c);
        for (s, p) in [(0.0, 2.0), (-0.3, 3.0), (1.5, 1.5)] {
            let want = c.abs() * (2.0 * g.half_width()).powf(1.0 / p);
            let got = sobolev_norm(&f, s, p).unwrap();
            assert!((got - want).abs() < 1e-12 * want, "s={s} p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn rejects_bad_integrability() {
        let g = grid();
        let f = SpectralField::zeros(&g, 1);
        assert!(sobolev_norm(&f, 0.0, 1.0).is_err());
        assert!(sobolev_norm(&f, 0.0, f64::INFINITY).is_err());
        assert!(sobolev_norm(&f, 0.0, -2.0).is_err());
    }

    #[test]
    fn heat_semigroup_edge_cases() {
        let g = grid();
        let f = SpectralField::from_fn(&g, 1, |x, _| (x[0]).cos());
        assert_eq!(heat_semigroup(&f, 0.0).unwrap().max_coefficient_distance(&f), 0.0);
        assert!(heat_semigroup(&f, -0.1).is_err());
        let c = SpectralField::from_fn(&g, 1, |_, _| 4.0);
        assert!(heat_semigroup(&c, 3.0).unwrap().max_coefficient_distance(&c) < 1e-14);
    }

    #[test]
    fn gradient_of_sine_and_constant() {
        let g = grid();
        let l = g.half_width();
        let f = SpectralField::from_fn(&g, 1, |x, _| (PI * x[0] / l).sin());
        let df = gradient(&f).to_physical();
        for (j, v) in df[0].iter().enumerate() {
            let x = g.point(j)[0];
            assert!((v - PI / l * (PI * x / l).cos()).abs() < 1e-12);
        }
        let c = SpectralField::from_fn(&g, 1, |_, _| 1.0);
        assert!(sup_norm(&gradient(&c)) < 1e-14);
    }

    #[test]
    fn sup_and_holder_trivial_sequences() {
        let g = grid();
        let c = SpectralField::from_fn(&g, 1, |_, _| -2.0);
        let (s, q) = sup_norm_and_holder(&[c.clone(), c.clone(), c], &[0.0, 0.5, 1.0], 0.3).unwrap();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(q < 1e-14);

        let base = SpectralField::from_fn(&g, 1, |x, _| (x[0]).sin() * 0.7);
        let times = [0.0, 0.25, 0.5, 1.0];
        let seq: Vec<_> = times.iter().map(|&t| base.scale(t)).collect();
        let (_, q) = sup_norm_and_holder(&seq, &times, 1.0).unwrap();
        assert!((q - sup_norm(&base)).abs() < 1e-12);
        assert!(sup_norm_and_holder(&seq[..1], &times[..1], 1.0).is_err());
    }

    #[test]
    fn holder_seminorm_of_linear_like_field() {
        // sin has Lipschitz constant ω; with α = 1 the seminorm approaches it
        let g = grid();
        let f = SpectralField::from_fn(&g, 1, |x, _| (x[0]).sin());
        let s = spatial_holder_seminorm(&f, 1.0);
        assert!(s <= 1.0 + 1e-12 && s > 0.99);
    }
}
