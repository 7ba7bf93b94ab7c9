//! Picard iteration for the mild formulations:
//!
//! * `u(t) = P(T-t)Φ + ∫_t^T P(r-t)[b∇u + f(r, u, ∇u)](r) dr`
//! * `w(t) = -∫_t^T P(r-t) b∇u(r) dr`, the mild form of `w_t + ½Δw = b∇u`, `w(T) = 0`
//! * `ξ(t) = ∫_t^T e^{-(λ+1)(r-t)} P(r-t)[b∇ξ + b](r) dr`
//!
//! Products `b∇u` use the paraproduct at a fixed level; the driver is applied
//! pointwise on the doubled grid and truncated back.

use std::borrow::Cow;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::drift::DriftPath;
use super::driver::Driver;
use super::duhamel::sweep_coefficients;
use super::mild::{fitted_contraction_ratio, FixedPointConfig, MildSolution, SolveReport};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::paraproduct::{finest_level, pad_to_physical, smooth_cutoff, truncate_from_physical, CutoffProfile};
use crate::params::SolverParams;
use crate::sobolev::{damped_heat_semigroup, gradient, sobolev_norm};

/// Drifts with more distinct knots than this are padded on demand instead of cached.
const PAD_CACHE_LIMIT: usize = 64;

/// Shared state for evaluating `b∇g` on the doubled grid.
struct ProductContext<'a> {
    grid: PeriodicGrid,
    fine: PeriodicGrid,
    level: u32,
    finest: u32,
    profile: CutoffProfile,
    drift: &'a DriftPath,
    drift_zero: bool,
    cache: Vec<Vec<Vec<f64>>>,
}

impl<'a> ProductContext<'a> {
    fn new(drift: &'a DriftPath, cfg: &FixedPointConfig) -> Result<Self> {
        let grid = drift.grid().clone();
        let fine = grid.refined(2)?;
        let finest = finest_level(&grid);
        let level = cfg.level.unwrap_or(finest);
        let drift_zero = drift.is_zero();
        let mut ctx = Self {
            grid,
            fine,
            level,
            finest,
            profile: cfg.profile,
            drift,
            drift_zero,
            cache: Vec::new(),
        };
        let (fields, _) = drift.distinct();
        if !drift_zero && fields.len() <= PAD_CACHE_LIMIT {
            ctx.cache = fields.par_iter().map(|b| ctx.pad_cut(b)).collect();
        }
        Ok(ctx)
    }

    fn pad_cut(&self, g: &SpectralField) -> Vec<Vec<f64>> {
        let cut = if self.level >= self.finest {
            Cow::Borrowed(g)
        } else {
            Cow::Owned(smooth_cutoff(g, self.level, self.profile))
        };
        cut.components()
            .iter()
            .map(|c| pad_to_physical(&self.grid, &self.fine, c))
            .collect()
    }

    fn pad_raw(&self, g: &SpectralField) -> Vec<Vec<f64>> {
        g.components()
            .iter()
            .map(|c| pad_to_physical(&self.grid, &self.fine, c))
            .collect()
    }

    fn drift_padded(&self, knot: usize) -> Cow<'_, Vec<Vec<f64>>> {
        let idx = self.drift.index_of(knot);
        if self.cache.is_empty() {
            Cow::Owned(self.pad_cut(self.drift.at(knot)))
        } else {
            Cow::Borrowed(&self.cache[idx])
        }
    }

    /// `(b∇g)_i = Σ_j b_j ∂_j g_i` on the doubled grid, given padded `∇g`.
    fn drift_dot(&self, knot: usize, grad_pad: &[Vec<f64>], out: &mut [Vec<f64>]) {
        if self.drift_zero {
            return;
        }
        let b = self.drift_padded(knot);
        let d = b.len();
        for (i, acc) in out.iter_mut().enumerate() {
            for j in 0..d {
                let bj = &b[j];
                let gij = &grad_pad[i * d + j];
                acc.iter_mut().zip(bj.iter().zip(gij)).for_each(|(a, (x, y))| *a += x * y);
            }
        }
    }

    fn truncate(&self, fine_samples: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        fine_samples
            .iter()
            .map(|s| truncate_from_physical(&self.grid, &self.fine, s))
            .collect()
    }

    /// Source `b∇g` plus, when given, `f(t, x, g, ∇g)`.
    fn source(&self, knot: usize, t: f64, g: &SpectralField, driver: Option<&dyn Driver>) -> Vec<Vec<Complex64>> {
        let ncomp = g.num_components();
        let d = self.grid.dim();
        let grad = gradient(g);
        let mut acc = vec![vec![0.0; self.fine.len()]; ncomp];
        let grad_cut_pad = if self.drift_zero { None } else { Some(self.pad_cut(&grad)) };
        if let Some(gp) = &grad_cut_pad {
            self.drift_dot(knot, gp, &mut acc);
        }
        if let Some(f) = driver.filter(|f| !f.is_zero()) {
            let u_pad = self.pad_raw(g);
            let grad_pad = match &grad_cut_pad {
                Some(gp) if self.level >= self.finest => Cow::Borrowed(gp),
                _ => Cow::Owned(self.pad_raw(&grad)),
            };
            let mut y = vec![0.0; ncomp];
            let mut z = vec![0.0; grad_pad.len()];
            let mut out = vec![0.0; ncomp];
            for idx in 0..self.fine.len() {
                let x = self.fine.point(idx);
                for (c, yc) in y.iter_mut().enumerate() {
                    *yc = u_pad[c][idx];
                }
                for (c, zc) in z.iter_mut().enumerate() {
                    *zc = grad_pad[c][idx];
                }
                f.evaluate(t, &x[..d], &y, &z, &mut out);
                for c in 0..ncomp {
                    acc[c][idx] += out[c];
                }
            }
        }
        self.truncate(&acc)
    }
}

/// Generic Picard loop: `g ← free + sweep_κ(source(g))`, starting from `free`.
#[allow(clippy::too_many_arguments)]
fn picard<F>(
    grid: &PeriodicGrid,
    knots: &[f64],
    kappa: f64,
    free: Vec<SpectralField>,
    source: F,
    norm_order: f64,
    p: f64,
    cfg: &FixedPointConfig,
) -> Result<MildSolution>
where
    F: Fn(usize, &SpectralField) -> Vec<Vec<Complex64>> + Sync,
{
    if !(cfg.tolerance > 0.0) || cfg.max_iterations == 0 {
        return Err(Error::InvalidArgument(format!(
            "fixed-point tolerance must be > 0 and max_iterations ≥ 1 (got {}, {})",
            cfg.tolerance, cfg.max_iterations
        )));
    }
    let horizon = *knots.last().expect("knots");
    let mut current = free.clone();
    let mut report = SolveReport::default();
    let mut stalled = 0usize;
    for iteration in 1..=cfg.max_iterations {
        let sources: Vec<Vec<Vec<Complex64>>> = current.par_iter().enumerate().map(|(k, g)| source(k, g)).collect();
        let integral = sweep_coefficients(grid, &sources, knots, kappa);
        let next: Vec<SpectralField> = integral
            .into_par_iter()
            .zip(free.par_iter())
            .map(|(coeffs, f0)| {
                let inc = SpectralField::from_coefficients(grid, coeffs).expect("shape");
                f0.axpy(1.0, &inc).expect("shape")
            })
            .collect();
        let norms: Vec<f64> = next
            .par_iter()
            .zip(current.par_iter())
            .map(|(a, b)| sobolev_norm(&a.axpy(-1.0, b).expect("shape"), norm_order, p))
            .collect::<Result<_>>()?;
        let inc = norms.iter().copied().fold(0.0, f64::max);
        let weighted = norms
            .iter()
            .zip(knots)
            .map(|(n, t)| n * (-cfg.rho * (horizon - t)).exp())
            .fold(0.0, f64::max);
        if !inc.is_finite() {
            return Err(Error::NonContraction {
                ratio: f64::INFINITY,
                iterations: iteration,
            });
        }
        if let Some(&prev) = report.increments.last() {
            if inc >= prev && inc > 0.0 {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        report.increments.push(inc);
        report.weighted_increments.push(weighted);
        report.iterations = iteration;
        current = next;
        if inc < cfg.tolerance {
            report.converged = true;
            report.contraction_ratio = fitted_contraction_ratio(&report.increments);
            return MildSolution::from_values(knots.to_vec(), current, report);
        }
        if stalled >= cfg.stall_window {
            return Err(Error::NonContraction {
                ratio: fitted_contraction_ratio(&report.increments),
                iterations: iteration,
            });
        }
    }
    Err(Error::MaxIterations {
        iterations: cfg.max_iterations,
        increment: *report.increments.last().unwrap_or(&f64::NAN),
    })
}

fn check_inputs(params: &SolverParams, drift: &DriftPath, knots: usize) -> Result<PeriodicGrid> {
    let grid = params.grid()?;
    if *drift.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if drift.dim() != params.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("drift with {} components", params.dim),
            actual: format!("{}", drift.dim()),
        });
    }
    drift.check_knots(knots)?;
    Ok(grid)
}

/// Mild solution of the semilinear backward PDE `u_t + ½Δu + b∇u + f(t, x, u, ∇u) = 0`,
/// `u(T) = Φ`.
pub fn solve_semilinear(
    drift: &DriftPath,
    driver: &dyn Driver,
    terminal: &SpectralField,
    params: &SolverParams,
    cfg: &FixedPointConfig,
) -> Result<MildSolution> {
    params.ensure_valid()?;
    let knots = params.knots();
    let grid = check_inputs(params, drift, knots.len())?;
    if *terminal.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if terminal.num_components() != params.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("terminal with {} components", params.dim),
            actual: format!("{}", terminal.num_components()),
        });
    }
    if knots.len() == 1 {
        return MildSolution::from_values(knots, vec![terminal.clone()], SolveReport::direct());
    }
    let horizon = params.horizon;
    let free: Vec<SpectralField> = knots
        .iter()
        .map(|&t| damped_heat_semigroup(terminal, horizon - t, 0.0))
        .collect::<Result<_>>()?;
    let ctx = ProductContext::new(drift, cfg)?;
    let source = |k: usize, g: &SpectralField| ctx.source(k, knots[k], g, Some(driver));
    picard(&grid, &knots, 0.0, free, source, 1.0 + params.delta, params.p, cfg)
}

/// Mild solution of `w_t + ½Δw = b∇u`, `w(T) = 0`, i.e. `w(t) = -∫_t^T P(r-t) b∇u(r) dr`.
pub fn solve_aux_w(drift: &DriftPath, u: &MildSolution, params: &SolverParams, cfg: &FixedPointConfig) -> Result<MildSolution> {
    let knots = u.times().to_vec();
    let expected = params.knots();
    if knots.len() != expected.len() || knots.iter().zip(&expected).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::KnotMismatch(format!(
            "solution has {} knots, parameters describe {}",
            knots.len(),
            expected.len()
        )));
    }
    let grid = check_inputs(params, drift, knots.len())?;
    if *u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let ncomp = u.num_components();
    if knots.len() == 1 {
        return MildSolution::from_values(knots, vec![SpectralField::zeros(&grid, ncomp)], SolveReport::direct());
    }
    let ctx = ProductContext::new(drift, cfg)?;
    let sources: Vec<Vec<Vec<Complex64>>> = (0..knots.len())
        .into_par_iter()
        .map(|k| {
            let mut s = ctx.source(k, knots[k], u.value(k), None);
            s.iter_mut().flatten().for_each(|z| *z = -*z);
            s
        })
        .collect();
    let values = sweep_coefficients(&grid, &sources, &knots, 0.0)
        .into_iter()
        .map(|c| SpectralField::from_coefficients(&grid, c))
        .collect::<Result<Vec<_>>>()?;
    MildSolution::from_values(knots, values, SolveReport::direct())
}

/// Mild solution of `ξ_t + ½Δξ - (λ+1)ξ + b∇ξ + b = 0`, `ξ(T) = 0`.
pub fn solve_aux_xi(drift: &DriftPath, lambda: f64, params: &SolverParams, cfg: &FixedPointConfig) -> Result<MildSolution> {
    params.ensure_valid()?;
    params.ensure_forward_gate()?;
    if !(lambda >= 0.0) {
        return Err(Error::ParameterGate(format!("λ = {lambda} < 0")));
    }
    let knots = params.knots();
    let grid = check_inputs(params, drift, knots.len())?;
    let zero = SpectralField::zeros(&grid, params.dim);
    if knots.len() == 1 {
        return MildSolution::from_values(knots, vec![zero], SolveReport::direct());
    }
    let free = vec![zero; knots.len()];
    let ctx = ProductContext::new(drift, cfg)?;
    let source = |k: usize, g: &SpectralField| {
        let mut s = ctx.source(k, knots[k], g, None);
        for (acc, b) in s.iter_mut().zip(drift.at(k).components()) {
            acc.iter_mut().zip(b).for_each(|(a, x)| *a += x);
        }
        s
    };
    picard(&grid, &knots, lambda + 1.0, free, source, 1.0 + params.delta, params.p, cfg)
}

/// Largest admissible `sup |∇ξ|` for the map `y ↦ y + ξ(t, y)` to be invertible.
pub const XI_GRADIENT_TARGET: f64 = 0.5;
const MAX_DOUBLINGS: usize = 20;

/// Smallest `λ` on the schedule `1, 2, 4, …` with `sup |∇ξ| ≤ 1/2`.
pub fn choose_lambda(drift: &DriftPath, params: &SolverParams, cfg: &FixedPointConfig) -> Result<(f64, MildSolution)> {
    let mut lambda = 1.0;
    let mut last_sup = f64::NAN;
    for _ in 0..=MAX_DOUBLINGS {
        // A λ too small to make the Picard map contract counts as a miss.
        match solve_aux_xi(drift, lambda, params, cfg) {
            Ok(xi) => {
                last_sup = xi.sup_gradient();
                if last_sup <= XI_GRADIENT_TARGET {
                    return Ok((lambda, xi));
                }
            }
            Err(Error::NonContraction { .. } | Error::MaxIterations { .. }) => last_sup = f64::INFINITY,
            Err(e) => return Err(e),
        }
        lambda *= 2.0;
    }
    Err(Error::LambdaSearch {
        lambda: lambda / 2.0,
        sup_grad: last_sup,
    })
}

/// Fitted constant of the time-regularity bound
/// `‖g(τ) - g(σ)‖_{H^{1+δ}_p} ≤ C (τ-σ)^γ ((τ-σ)^{ε-γ} + σ^{ε-γ})`
/// in forward time `τ = T - t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderTimeReport {
    pub constant: f64,
    /// Knot indices (in the solution's backward time) of the worst pair.
    pub worst_pair: (usize, usize),
    pub pairs: usize,
}

/// Pairs are taken over at most this many knots, evenly strided.
const HOLDER_MAX_KNOTS: usize = 129;

pub fn holder_time_bound_check(solution: &MildSolution, params: &SolverParams, gamma: f64, epsilon: f64) -> Result<HolderTimeReport> {
    let cap = (1.0 - params.delta - params.beta) / 2.0;
    if !(gamma > 0.0 && gamma < epsilon && epsilon <= cap + 1e-15) {
        return Err(Error::ParameterGate(format!(
            "need 0 < γ < ε ≤ (1−δ−β)/2 = {cap}, got γ = {gamma}, ε = {epsilon}"
        )));
    }
    let times = solution.times();
    let horizon = solution.horizon();
    let n = times.len();
    let stride = n.div_ceil(HOLDER_MAX_KNOTS).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let s = 1.0 + params.delta;
    let pairs: Vec<(usize, usize)> = idx
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| idx[a + 1..].iter().map(move |&j| (i, j)))
        .collect();
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            // i < j in backward time, so τ_j < τ_i.
            let (tau_hi, tau_lo) = (horizon - times[i], horizon - times[j]);
            let h = tau_hi - tau_lo;
            let diff = solution.value(i).axpy(-1.0, solution.value(j))?;
            let num = sobolev_norm(&diff, s, params.p)?;
            let den = h.powf(gamma) * (h.powf(epsilon - gamma) + tau_lo.max(0.0).powf(epsilon - gamma));
            Ok(if num == 0.0 { 0.0 } else { num / den })
        })
        .collect::<Result<_>>()?;
    let (worst, constant) = ratios
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(HolderTimeReport {
        constant,
        worst_pair: pairs.get(worst).copied().unwrap_or((0, 0)),
        pairs: pairs.len(),
    })
}
