//! Monte Carlo check that the solver's `u(t, x)` is the expectation of the
//! terminal value plus the accumulated driver along forward paths.

use rayon::prelude::*;
use serde::Serialize;

use super::bsde::fill_pair;
use super::interp::Stencil;
use super::paths::{brownian_increments, check_domain, interior_band, knot_indices, ForwardModel, PathRecord, PathSpec};
use crate::error::{Error, Result};
use crate::pde::{Driver, MildSolution};
use crate::stats::Moments;

/// Forward dynamics for the estimator.
#[derive(Clone, Copy, Debug)]
pub enum FkMode<'a> {
    /// Brownian paths; `u(t, x) = E[Φ(X_T) + Σ f Δr] - w(t, x)`.
    Brownian { w: Option<&'a MildSolution> },
    /// Paths of the virtual forward solution; `u(t, x) = E[Φ(X_T) + Σ f Δr]`.
    Virtual { xi: &'a MildSolution, lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkConfig {
    pub paths: usize,
    pub seed: u64,
    /// Combine the estimator on the knots and on every other knot as `2F - C`.
    pub richardson: bool,
    /// Paths held in memory at once.
    pub block: usize,
}

impl Default for FkConfig {
    fn default() -> Self {
        Self {
            paths: 10_000,
            seed: 0,
            richardson: true,
            block: 4096,
        }
    }
}

/// One component of `u(t, x)` against its estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkStatistic {
    pub target: f64,
    pub estimate: f64,
    pub standard_error: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FkReport {
    pub time: f64,
    pub point: Vec<f64>,
    pub paths: usize,
    pub richardson: bool,
    pub flagged_fraction: f64,
    pub components: Vec<FkStatistic>,
}

impl FkReport {
    pub fn max_abs_z(&self) -> f64 {
        self.components.iter().map(|c| c.z_score.abs()).fold(0.0, f64::max)
    }
}

/// `Φ(X_T) + Σ f(r, X, u, ∇u) Δr` (left point) for one path; `y`, `z` must be filled.
fn path_functional(path: &PathRecord, knots: &[f64], dim: usize, d: usize, driver: &dyn Driver, out: &mut [f64]) {
    let nk = knots.len();
    let dz = d * dim;
    out.copy_from_slice(&path.y[(nk - 1) * d..nk * d]);
    if driver.is_zero() {
        return;
    }
    let mut f = vec![0.0; d];
    for k in 0..nk - 1 {
        let dt = knots[k + 1] - knots[k];
        driver.evaluate(
            knots[k],
            &path.x[k * dim..(k + 1) * dim],
            &path.y[k * d..(k + 1) * d],
            &path.z[k * dz..(k + 1) * dz],
            &mut f,
        );
        for i in 0..d {
            out[i] += f[i] * dt;
        }
    }
}

/// Estimates `u(t_k, x)` with `t_k = u.times()[start_knot]` and compares it to the solver value.
pub fn feynman_kac_check(
    u: &MildSolution,
    driver: &dyn Driver,
    start_knot: usize,
    x: &[f64],
    mode: FkMode<'_>,
    cfg: &FkConfig,
) -> Result<FkReport> {
    let dim = u.grid().dim();
    let d = u.num_components();
    if x.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim} coordinates"),
            actual: format!("{}", x.len()),
        });
    }
    if start_knot >= u.times().len() {
        return Err(Error::InvalidArgument(format!(
            "start knot {start_knot} beyond the {} solution knots",
            u.times().len()
        )));
    }
    if cfg.paths < 2 || cfg.block == 0 {
        return Err(Error::InvalidArgument("need at least two paths and a positive block size".into()));
    }
    let knots = &u.times()[start_knot..];
    let intervals = knots.len() - 1;
    let richardson = cfg.richardson && intervals > 0;
    if richardson && !intervals.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Richardson extrapolation needs an even number of steps, got {intervals}"
        )));
    }
    let fine_idx = knot_indices(u.times(), knots)?;
    let coarse: Vec<f64> = knots.iter().copied().step_by(2).collect();
    let coarse_idx = knot_indices(u.times(), &coarse)?;

    let model = match mode {
        FkMode::Brownian { .. } => ForwardModel::Brownian,
        FkMode::Virtual { xi, lambda } => ForwardModel::Virtual { xi, lambda },
    };
    let spec = PathSpec {
        model,
        knots,
        start: x,
        seed: cfg.seed,
        band: interior_band(u.grid().half_width(), u.horizon()),
    };

    let sample = |index: usize| -> Result<(Vec<f64>, bool)> {
        let dw = brownian_increments(cfg.seed, index, knots, dim);
        let mut fine = spec.simulate_with(index, knots, &dw)?;
        fill_pair(u, &fine_idx, &mut fine);
        let mut value = vec![0.0; d];
        path_functional(&fine, knots, dim, d, driver, &mut value);
        let mut flagged = fine.flagged;
        if richardson {
            let dwc: Vec<f64> = (0..intervals / 2)
                .flat_map(|k| (0..dim).map(move |j| (k, j)))
                .map(|(k, j)| dw[2 * k * dim + j] + dw[(2 * k + 1) * dim + j])
                .collect();
            let mut c = spec.simulate_with(index, &coarse, &dwc)?;
            fill_pair(u, &coarse_idx, &mut c);
            let mut cv = vec![0.0; d];
            path_functional(&c, &coarse, dim, d, driver, &mut cv);
            for i in 0..d {
                value[i] = 2.0 * value[i] - cv[i];
            }
            flagged |= c.flagged;
        }
        Ok((value, flagged))
    };

    let mut moments = vec![Moments::default(); d];
    let mut flagged = 0;
    let mut first = 0;
    while first < cfg.paths {
        let count = cfg.block.min(cfg.paths - first);
        let block = (first..first + count).into_par_iter().map(sample).collect::<Result<Vec<_>>>()?;
        for (v, f) in block {
            flagged += usize::from(f);
            for (m, a) in moments.iter_mut().zip(v) {
                m.push(a);
            }
        }
        first += count;
    }
    check_domain(flagged, cfg.paths)?;

    let target_st = Stencil::new(u.grid(), x);
    let shift: Vec<f64> = match mode {
        FkMode::Brownian { w: Some(w) } => {
            let k = knot_indices(w.times(), &knots[..1])?[0];
            let st = Stencil::new(w.grid(), x);
            w.value_samples(k).iter().map(|s| st.apply(s)).collect()
        }
        _ => vec![0.0; d],
    };
    let components = (0..d)
        .map(|i| {
            let target = target_st.apply(&u.value_samples(start_knot)[i]);
            let estimate = moments[i].mean - shift[i];
            let se = moments[i].standard_error();
            let gap = estimate - target;
            // Roundoff in the interpolation leaves a tiny spread on deterministic paths.
            let negligible = 1e-12 * (1.0 + estimate.abs());
            let z_score = if se > negligible {
                gap / se
            } else if gap.abs() <= negligible {
                0.0
            } else {
                return Err(Error::DegenerateEstimator { gap });
            };
            Ok(FkStatistic {
                target,
                estimate,
                standard_error: se,
                z_score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FkReport {
        time: knots[0],
        point: x.to_vec(),
        paths: cfg.paths,
        richardson,
        flagged_fraction: flagged as f64 / cfg.paths as f64,
        components,
    })
}
