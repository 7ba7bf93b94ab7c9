//! Randomized and oracle-based checks of the spectral kernels and the PDE solver,
//! shared by scenarios and the acceptance suite.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::oracle::{solve_backward_fd, FdProblem};
use crate::paraproduct::{pad_to_physical, pointwise_product};
use crate::params::SolverParams;
use crate::pde::{solve_semilinear, DriftPath, Driver, FixedPointConfig, MildSolution};
use crate::sobolev::{bessel_power, heat_semigroup, sobolev_norm};
use crate::stats::{fit_bound, FittedBound};

/// `A^{-s/2} ω` for white noise `ω` restricted to modes with `max_i |k_i| ≤ band`:
/// a real field "of order `s`".
pub fn random_field(grid: &PeriodicGrid, components: usize, order: f64, band: usize, seed: u64) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..components)
        .map(|_| (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let white = SpectralField::from_physical(grid, &samples)?;
    let band = band as i64;
    let dim = grid.dim();
    let limited = white.apply_symbol(|k| {
        let m = grid.modes(k);
        let inside = (0..dim).all(|a| m[a].abs() <= band && !grid.is_nyquist(k, a));
        if inside {
            1.0
        } else {
            0.0
        }
    });
    Ok(bessel_power(&limited, -order))
}

fn relative_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    a.max_coefficient_distance(b) / b.coefficient_norm().max(f64::MIN_POSITIVE)
}

/// Worst relative errors of the transform pair, the Bessel isomorphism and the
/// semigroup law over a random family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralCoreReport {
    pub fields: usize,
    pub round_trip: f64,
    pub isomorphism: f64,
    pub semigroup: f64,
}

impl SpectralCoreReport {
    pub fn worst(&self) -> f64 {
        self.round_trip.max(self.isomorphism).max(self.semigroup)
    }
}

pub fn spectral_core_check(grid: &PeriodicGrid, fields: usize, seed: u64) -> Result<SpectralCoreReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SpectralCoreReport {
        fields,
        round_trip: 0.0,
        isomorphism: 0.0,
        semigroup: 0.0,
    };
    for i in 0..fields {
        let g = random_field(grid, 1, 0.0, grid.n() / 2, seed.wrapping_add(1 + i as u64))?;
        let samples = g.to_physical();
        let back = SpectralField::from_physical(grid, &samples)?.to_physical();
        let scale = samples[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rt = samples[0].iter().zip(&back[0]).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        report.round_trip = report.round_trip.max(rt / scale);

        let s = rand::Rng::random_range(&mut rng, -2.0..2.0);
        let iso = bessel_power(&bessel_power(&g, s), -s);
        report.isomorphism = report.isomorphism.max(relative_distance(&iso, &g));

        let t: f64 = rand::Rng::random_range(&mut rng, 0.0..1.0);
        let r: f64 = rand::Rng::random_range(&mut rng, 0.0..1.0);
        let two = heat_semigroup(&heat_semigroup(&g, t)?, r)?;
        let one = heat_semigroup(&g, t + r)?;
        report.semigroup = report.semigroup.max(relative_distance(&two, &one));
    }
    Ok(report)
}

/// Ratios of a norm inequality across a family, with the fitted-constant verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub ratios: Vec<f64>,
    pub bound: FittedBound,
}

/// `‖P(t)w‖_{H^{1+δ}_p} / (e^t t^{-(1+δ+β)/2} ‖w‖_{H^{-β}_p})` for random `w` of
/// order `-β` and `t = 2^{-k} T`, `k = 1..=times`. Ratios are ordered by time
/// (largest first), so the constant is fitted on the larger times.
pub fn mapping_property_check(params: &SolverParams, inputs: usize, times: usize, seed: u64) -> Result<RatioReport> {
    let grid = params.grid()?;
    let (beta, delta, p) = (params.beta, params.delta, params.p);
    let ws = (0..inputs)
        .map(|i| random_field(&grid, 1, -beta, grid.n() / 4, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let norms = ws.iter().map(|w| sobolev_norm(w, -beta, p)).collect::<Result<Vec<_>>>()?;
    let mut ratios = Vec::with_capacity(inputs * times);
    for k in 1..=times {
        let t = params.horizon.max(f64::MIN_POSITIVE) * 0.5f64.powi(k as i32);
        let weight = t.exp() * t.powf(-(1.0 + delta + beta) / 2.0);
        for (w, n) in ws.iter().zip(&norms) {
            let lhs = sobolev_norm(&heat_semigroup(w, t)?, 1.0 + delta, p)?;
            ratios.push(lhs / (weight * n));
        }
    }
    let bound = fit_bound(&ratios, 2.0);
    Ok(RatioReport { ratios, bound })
}

/// Paraproduct norm bound over random pairs plus the smooth-input consistency
/// against an exact coefficient convolution (one dimension).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParaproductReport {
    pub ratios: Vec<f64>,
    pub bound: FittedBound,
    /// Relative coefficient error of the product of band-limited inputs.
    pub consistency: f64,
}

pub fn paraproduct_bound_check(params: &SolverParams, pairs: usize, seed: u64) -> Result<ParaproductReport> {
    let grid = params.grid()?;
    let (beta, delta, p, q) = (params.beta, params.delta, params.p, params.q);
    let mut ratios = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let s = seed.wrapping_add(2 * i as u64);
        let g = random_field(&grid, 1, -beta, grid.n() / 4, s)?;
        let h = random_field(&grid, 1, delta, grid.n() / 4, s + 1)?;
        let gh = pointwise_product(&g, &h, params)?;
        ratios.push(sobolev_norm(&gh, -beta, p)? / (sobolev_norm(&g, -beta, q)? * sobolev_norm(&h, delta, p)?));
    }
    let bound = fit_bound(&ratios, 2.0);
    let consistency = if grid.dim() == 1 {
        let band = grid.n() / 6;
        let g = random_field(&grid, 1, 0.0, band, seed ^ 0x5eed)?;
        let h = random_field(&grid, 1, 0.0, band, seed ^ 0xfeed)?;
        let got = pointwise_product(&g, &h, params)?;
        let exact = convolve_1d(&grid, g.component(0), h.component(0))?;
        relative_distance(&got, &exact)
    } else {
        0.0
    };
    Ok(ParaproductReport {
        ratios,
        bound,
        consistency,
    })
}

/// Coefficients of the product of two trigonometric polynomials, by direct
/// convolution (modes beyond the grid are dropped).
fn convolve_1d(grid: &PeriodicGrid, a: &[Complex64], b: &[Complex64]) -> Result<SpectralField> {
    let n = grid.n() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n()];
    for (i, &x) in a.iter().enumerate() {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ki = grid.modes(i)[0];
        for (j, &y) in b.iter().enumerate() {
            let k = ki + grid.modes(j)[0];
            if k >= -n / 2 && k < n / 2 {
                out[grid.index_of_modes([k, 0])] += x * y;
            }
        }
    }
    SpectralField::from_coefficients(grid, vec![out])
}

/// Spectral solve against the Crank–Nicolson oracle at `K` and `K/2` steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    /// Relative sup error at `K` steps.
    pub relative_error: f64,
    /// Relative sup error at `K/2` steps.
    pub coarse_relative_error: f64,
    pub contraction_ratio: f64,
}

impl OracleReport {
    pub fn halving_reduces_gap(&self) -> bool {
        self.relative_error < self.coarse_relative_error
    }
}

fn relative_sup_error(u: &MildSolution, fd: &[Vec<f64>]) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, row) in fd.iter().enumerate() {
        for (a, b) in u.value_samples(k)[0].iter().zip(row) {
            err = err.max((a - b).abs());
            scale = scale.max(b.abs());
        }
    }
    err / scale.max(f64::MIN_POSITIVE)
}

/// Needs a one-dimensional, time-independent drift and an even step count. The
/// oracle runs `substeps` Crank–Nicolson steps per fine interval in both cases,
/// so it is the same reference for both spectral resolutions, and is
/// extrapolated in space from `N` and `2N` points.
pub fn fd_oracle_check(
    drift: &DriftPath,
    driver: &dyn Driver,
    terminal: &SpectralField,
    params: &SolverParams,
    cfg: &FixedPointConfig,
    substeps: usize,
) -> Result<OracleReport> {
    if params.dim != 1 {
        return Err(Error::InvalidArgument("the finite-difference oracle is one-dimensional".into()));
    }
    let DriftPath::Static(b) = drift else {
        return Err(Error::InvalidArgument("the finite-difference oracle needs a static drift".into()));
    };
    if params.steps < 2 || !params.steps.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("need an even step count, got {}", params.steps)));
    }
    let grid = params.grid()?;
    let fine_grid = grid.refined(2)?;
    let b_coarse = b.component_physical(0);
    let b_fine = pad_to_physical(&grid, &fine_grid, b.component(0));
    let phi_coarse = terminal.component_physical(0);
    let phi_fine = pad_to_physical(&grid, &fine_grid, terminal.component(0));
    let oracle = |knots: &[f64], n: usize, b: &[f64], phi: &[f64], sub: usize| {
        solve_backward_fd(&FdProblem {
            n,
            half_width: params.half_width,
            knots,
            drift: vec![b.to_vec()],
            kappa: 0.0,
            driver: (!driver.is_zero()).then_some(driver),
            source: None,
            terminal: phi.to_vec(),
            substeps: sub,
        })
    };
    let run = |steps: usize, sub: usize| -> Result<(f64, f64)> {
        let p = params.with_steps(steps);
        let u = solve_semilinear(drift, driver, terminal, &p, cfg)?;
        let knots = p.knots();
        let coarse = oracle(&knots, params.grid_points, &b_coarse, &phi_coarse, sub)?;
        let fine = oracle(&knots, 2 * params.grid_points, &b_fine, &phi_fine, sub)?;
        // Central differences are second order in h; extrapolate to h → 0.
        let fd: Vec<Vec<f64>> = coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| c.iter().enumerate().map(|(j, v)| (4.0 * f[2 * j] - v) / 3.0).collect())
            .collect();
        Ok((relative_sup_error(&u, &fd), u.report().contraction_ratio))
    };
    let (fine, ratio) = run(params.steps, substeps)?;
    let (coarse, _) = run(params.steps / 2, 2 * substeps)?;
    Ok(OracleReport {
        relative_error: fine,
        coarse_relative_error: coarse,
        contraction_ratio: ratio,
    })
}

/// Largest coefficient distance between `u(t_k)` and `P(T - t_k)Φ`.
pub fn heat_flow_gap(u: &MildSolution, terminal: &SpectralField) -> Result<f64> {
    let horizon = u.horizon();
    let mut worst: f64 = 0.0;
    for (k, &t) in u.times().iter().enumerate() {
        worst = worst.max(u.value(k).max_coefficient_distance(&heat_semigroup(terminal, horizon - t)?));
    }
    Ok(worst)
}
