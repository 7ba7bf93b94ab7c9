use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::interp::Stencil;
use crate::error::{Error, Result};
use crate::pde::{DriftPath, MildSolution};

/// Fraction of paths allowed to leave the trusted interior band.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-3;
/// Fixed-point budget of [`invert_phi`].
pub const INVERSION_MAX_ITERATIONS: usize = 60;
/// Required `|φ(s, y) - v|`.
pub const INVERSION_TOLERANCE: f64 = 1e-10;

/// One simulated path, knot-major: entry `k·d + i` is coordinate `i` at knot `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    /// Auxiliary state of the virtual construction.
    pub v: Option<Vec<f64>>,
    /// `Y` (`d` per knot) and `Z` (`d²` per knot, row-major) once evaluated.
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Left the interior band at some knot.
    pub flagged: bool,
}

/// A batch of paths from a common start.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    /// Absolute times; `knots[0]` is the start time.
    pub knots: Vec<f64>,
    pub start: Vec<f64>,
    pub seed: u64,
    /// Global index of the first path (for blocked runs).
    pub first_path: usize,
    pub paths: Vec<PathRecord>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn num_knots(&self) -> usize {
        self.knots.len()
    }

    pub fn has_pair(&self) -> bool {
        self.paths.first().is_some_and(|p| !p.y.is_empty())
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.paths.iter().filter(|p| p.flagged).count() as f64 / self.paths.len().max(1) as f64
    }

    /// Terminal states `X_T` for coordinate `i`.
    pub fn terminal_coordinate(&self, i: usize) -> Vec<f64> {
        let k = self.knots.len() - 1;
        self.paths.iter().map(|p| p.x[k * self.dim + i]).collect()
    }
}

/// How the forward state is driven by the Brownian increments.
#[derive(Clone, Copy, Debug)]
pub enum ForwardModel<'a> {
    /// `X = x + W`.
    Brownian,
    /// `V` by Euler–Maruyama with drift `(λ+1)ξ(ψ(V))` and diffusion `I + ∇ξ(ψ(V))`,
    /// started at `x + ξ(t, x)`; `X = ψ(V)`.
    Virtual { xi: &'a MildSolution, lambda: f64 },
    /// Euler–Maruyama for `dX = b(X) dt + dW`; meaningful only for function-valued `b`.
    /// Per-knot drifts are indexed from the first path knot.
    DirectEuler { drift: &'a DriftPath, samples: &'a [Vec<Vec<f64>>] },
}

/// Physical samples of each distinct drift field, for [`ForwardModel::DirectEuler`].
pub fn drift_samples(drift: &DriftPath) -> Vec<Vec<Vec<f64>>> {
    drift.distinct().0.iter().map(|f| f.to_physical()).collect()
}

/// Everything needed to generate path `i` on demand.
#[derive(Clone, Copy, Debug)]
pub struct PathSpec<'a> {
    pub model: ForwardModel<'a>,
    pub knots: &'a [f64],
    pub start: &'a [f64],
    pub seed: u64,
    /// Half-width of the trusted interior band.
    pub band: f64,
}

/// Standard normal increments for `path`, scaled by `√Δt`, from the stream
/// `path` of the master seed.
pub fn brownian_increments(seed: u64, path: usize, knots: &[f64], dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    let mut out = Vec::with_capacity((knots.len().saturating_sub(1)) * dim);
    for w in knots.windows(2) {
        let s = (w[1] - w[0]).sqrt();
        for _ in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(s * z);
        }
    }
    out
}

/// Index in `times` of every path knot; each must coincide with a solution knot.
pub(crate) fn knot_indices(times: &[f64], knots: &[f64]) -> Result<Vec<usize>> {
    knots
        .iter()
        .map(|&t| {
            let i = times.partition_point(|&s| s < t);
            let tol = 1e-12 * t.abs().max(1.0);
            [i.checked_sub(1), Some(i)]
                .into_iter()
                .flatten()
                .find(|&j| j < times.len() && (times[j] - t).abs() <= tol)
                .ok_or_else(|| Error::KnotMismatch(format!("path knot {t} is not a solution knot")))
        })
        .collect()
}

/// `ξ(s, y)` at knot `k` by interpolation.
fn xi_at(xi: &MildSolution, k: usize, y: &[f64], out: &mut [f64]) {
    let st = Stencil::new(xi.grid(), y);
    for (i, o) in out.iter_mut().enumerate() {
        *o = st.apply(&xi.value_samples(k)[i]);
    }
}

/// Solves `y + ξ(s, y) = v` at knot `k` by the iteration `y ← v - ξ(s, y)`.
pub fn invert_phi(xi: &MildSolution, k: usize, v: &[f64]) -> Result<Vec<f64>> {
    let d = v.len();
    let mut y = v.to_vec();
    let mut xv = vec![0.0; d];
    for _ in 0..INVERSION_MAX_ITERATIONS {
        xi_at(xi, k, &y, &mut xv);
        let mut step: f64 = 0.0;
        for i in 0..d {
            let next = v[i] - xv[i];
            step = step.max((next - y[i]).abs());
            y[i] = next;
        }
        if step <= 1e-15 * (1.0 + y.iter().map(|a| a.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    xi_at(xi, k, &y, &mut xv);
    let residual = (0..d).map(|i| (y[i] + xv[i] - v[i]).abs()).fold(0.0, f64::max);
    if residual > INVERSION_TOLERANCE || !residual.is_finite() {
        return Err(Error::Inversion {
            point: v.to_vec(),
            residual,
        });
    }
    Ok(y)
}

impl PathSpec<'_> {
    pub fn dim(&self) -> usize {
        self.start.len()
    }

    fn outside(&self, x: &[f64]) -> bool {
        x.iter().any(|c| c.abs() > self.band)
    }

    /// Generates path `index`.
    pub fn simulate(&self, index: usize) -> Result<PathRecord> {
        let dw = brownian_increments(self.seed, index, self.knots, self.dim());
        self.simulate_with(index, self.knots, &dw)
    }

    /// Path `index` on `knots` driven by the given increments.
    pub fn simulate_with(&self, index: usize, knots: &[f64], dw: &[f64]) -> Result<PathRecord> {
        let d = self.dim();
        let nk = knots.len();
        let mut w = vec![0.0; nk * d];
        let mut x = vec![0.0; nk * d];
        x[..d].copy_from_slice(self.start);
        for k in 0..nk - 1 {
            for i in 0..d {
                w[(k + 1) * d + i] = w[k * d + i] + dw[k * d + i];
            }
        }
        let mut v = None;
        match self.model {
            ForwardModel::Brownian => {
                for k in 0..nk - 1 {
                    for i in 0..d {
                        x[(k + 1) * d + i] = x[k * d + i] + dw[k * d + i];
                    }
                }
            }
            ForwardModel::Virtual { xi, lambda } => {
                let idx = knot_indices(xi.times(), knots)?;
                let mut vs = vec![0.0; nk * d];
                let mut xv = vec![0.0; d];
                xi_at(xi, idx[0], self.start, &mut xv);
                for i in 0..d {
                    vs[i] = self.start[i] + xv[i];
                }
                let mut incr = vec![0.0; d];
                for k in 0..nk - 1 {
                    let kk = idx[k];
                    let xk = x[k * d..(k + 1) * d].to_vec();
                    let st = Stencil::new(xi.grid(), &xk);
                    let dt = knots[k + 1] - knots[k];
                    let dwk = &dw[k * d..(k + 1) * d];
                    for i in 0..d {
                        let drift = (lambda + 1.0) * st.apply(&xi.value_samples(kk)[i]) * dt;
                        let mut diffusion = 0.0;
                        for j in 0..d {
                            let g = st.apply(&xi.gradient_samples(kk)[i * d + j]);
                            let a = if i == j { 1.0 + g } else { g };
                            diffusion += a * dwk[j];
                        }
                        incr[i] = drift + diffusion;
                    }
                    for i in 0..d {
                        vs[(k + 1) * d + i] = vs[k * d + i] + incr[i];
                    }
                    let y = invert_phi(xi, idx[k + 1], &vs[(k + 1) * d..(k + 2) * d]).map_err(|e| Error::Path {
                        path: index,
                        source: Box::new(e),
                    })?;
                    x[(k + 1) * d..(k + 2) * d].copy_from_slice(&y);
                }
                v = Some(vs);
            }
            ForwardModel::DirectEuler { drift, samples } => {
                let grid = drift.grid();
                let mut incr = vec![0.0; d];
                for k in 0..nk - 1 {
                    let st = Stencil::new(grid, &x[k * d..(k + 1) * d]);
                    let bs = &samples[drift.index_of(k)];
                    let dt = knots[k + 1] - knots[k];
                    for i in 0..d {
                        incr[i] = st.apply(&bs[i]) * dt + dw[k * d + i];
                    }
                    for i in 0..d {
                        x[(k + 1) * d + i] = x[k * d + i] + incr[i];
                    }
                }
            }
        }
        let flagged = x.chunks(d).any(|c| self.outside(c));
        Ok(PathRecord {
            w,
            x,
            v,
            y: Vec::new(),
            z: Vec::new(),
            flagged,
        })
    }

    /// Paths `first .. first + count`, generated in parallel.
    pub fn simulate_block(&self, first: usize, count: usize) -> Result<PathEnsemble> {
        let paths = (first..first + count)
            .into_par_iter()
            .map(|i| self.simulate(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(PathEnsemble {
            dim: self.dim(),
            knots: self.knots.to_vec(),
            start: self.start.to_vec(),
            seed: self.seed,
            first_path: first,
            paths,
        })
    }
}

/// `L - 3√T`: paths beyond this distance from the origin may feel the torus.
pub fn interior_band(half_width: f64, horizon: f64) -> f64 {
    half_width - 3.0 * horizon.sqrt()
}

pub(crate) fn check_domain(flagged: usize, total: usize) -> Result<()> {
    let fraction = flagged as f64 / total.max(1) as f64;
    if fraction > MAX_FLAGGED_FRACTION {
        return Err(Error::DomainTooSmall {
            fraction: 100.0 * fraction,
        });
    }
    Ok(())
}

fn validate(knots: &[f64], start: &[f64], paths: usize) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::InvalidArgument("empty knot set".into()));
    }
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    if start.is_empty() || start.len() > 2 {
        return Err(Error::InvalidArgument(format!("start point must have 1 or 2 coordinates, got {}", start.len())));
    }
    Ok(())
}

fn run(spec: PathSpec<'_>, paths: usize) -> Result<PathEnsemble> {
    validate(spec.knots, spec.start, paths)?;
    let e = spec.simulate_block(0, paths)?;
    check_domain(e.paths.iter().filter(|p| p.flagged).count(), paths)?;
    Ok(e)
}

/// `X_s = x + W_s - W_t` on `knots` (which start at `t`).
pub fn simulate_brownian(x: &[f64], knots: &[f64], paths: usize, seed: u64, half_width: f64) -> Result<PathEnsemble> {
    let horizon = knots.last().copied().unwrap_or(0.0);
    run(
        PathSpec {
            model: ForwardModel::Brownian,
            knots,
            start: x,
            seed,
            band: interior_band(half_width, horizon),
        },
        paths,
    )
}

/// Virtual forward solution `X = ψ(·, V)`; `ξ` must satisfy `sup|∇ξ| ≤ 1/2`.
pub fn simulate_forward_virtual(
    xi: &MildSolution,
    lambda: f64,
    x: &[f64],
    knots: &[f64],
    paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let horizon = xi.horizon();
    run(
        PathSpec {
            model: ForwardModel::Virtual { xi, lambda },
            knots,
            start: x,
            seed,
            band: interior_band(xi.grid().half_width(), horizon),
        },
        paths,
    )
}

/// Euler–Maruyama for `dX = b(X) dt + dW` with `b` interpolated from grid samples.
pub fn simulate_direct_euler(drift: &DriftPath, x: &[f64], knots: &[f64], paths: usize, seed: u64) -> Result<PathEnsemble> {
    let samples = drift_samples(drift);
    let horizon = knots.last().copied().unwrap_or(0.0);
    run(
        PathSpec {
            model: ForwardModel::DirectEuler {
                drift,
                samples: &samples,
            },
            knots,
            start: x,
            seed,
            band: interior_band(drift.grid().half_width(), horizon),
        },
        paths,
    )
}
