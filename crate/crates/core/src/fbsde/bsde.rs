//! The backward pair `(Y, Z) = (u, ∇u)(·, X)` along paths, its discrete residual
//! against the backward equation, and the Zvonkin change of variables
//! `(Ŷ, Ẑ) = (Y + w(·, X), Z + ∇w(·, X))`.

use rayon::prelude::*;
use serde::Serialize;

use super::interp::Stencil;
use super::paths::{knot_indices, PathEnsemble, PathRecord};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::pde::{Driver, MildSolution};

/// Fills `y`, `z` of one path from `u`; path knot `k` is solution knot `idx[k]`.
pub(crate) fn fill_pair(u: &MildSolution, idx: &[usize], path: &mut PathRecord) {
    let knots = idx.len();
    let d = u.num_components();
    let dim = u.grid().dim();
    path.y = vec![0.0; knots * d];
    path.z = vec![0.0; knots * d * dim];
    for k in 0..knots {
        let st = Stencil::new(u.grid(), &path.x[k * dim..(k + 1) * dim]);
        for i in 0..d {
            path.y[k * d + i] = st.apply(&u.value_samples(idx[k])[i]);
        }
        for c in 0..d * dim {
            path.z[k * d * dim + c] = st.apply(&u.gradient_samples(idx[k])[c]);
        }
    }
}

/// `Y_s = u(s, X_s)`, `Z_s = ∇u(s, X_s)` by interpolation.
pub fn evaluate_bsde_pair(u: &MildSolution, ensemble: &mut PathEnsemble) -> Result<()> {
    let idx = knot_indices(u.times(), &ensemble.knots)?;
    if u.grid().dim() != ensemble.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-dimensional paths", u.grid().dim()),
            actual: format!("{}", ensemble.dim),
        });
    }
    ensemble.paths.par_iter_mut().for_each(|p| fill_pair(u, &idx, p));
    Ok(())
}

/// Per-path terms of the backward equation at its start knot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ResidualComponents {
    pub terminal: f64,
    pub stochastic_integral: f64,
    pub driver_integral: f64,
    pub w_correction: f64,
}

/// Discrete residual of
/// `Y_s = Φ(X_T) - Σ Z ΔW + Σ f Δr - w(s, X_s) - Σ ∇w ΔW` (left-point sums).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub paths: usize,
    pub dt: f64,
    /// Mean over paths of `max_s |R_s|`.
    pub mean_residual: f64,
    /// Max over paths of `max_s |R_s|`.
    pub max_residual: f64,
    /// Per knot: mean over paths of `|R_s|`.
    pub per_knot_mean: Vec<f64>,
    /// Per knot: max over paths of `|R_s|`.
    pub per_knot_worst: Vec<f64>,
    /// Mean absolute size of each term at the start knot.
    pub components: ResidualComponents,
}

/// Optional correction field sampled along one path: `w` and `∇w` per knot.
struct Correction {
    w: Vec<f64>,
    grad: Vec<f64>,
}

fn sample_correction(w: &MildSolution, idx: &[usize], path: &PathRecord) -> Correction {
    let nk = idx.len();
    let d = w.num_components();
    let dim = w.grid().dim();
    let mut c = Correction {
        w: vec![0.0; nk * d],
        grad: vec![0.0; nk * d * dim],
    };
    for k in 0..nk {
        let st = Stencil::new(w.grid(), &path.x[k * dim..(k + 1) * dim]);
        for i in 0..d {
            c.w[k * d + i] = st.apply(&w.value_samples(idx[k])[i]);
        }
        for j in 0..d * dim {
            c.grad[k * d * dim + j] = st.apply(&w.gradient_samples(idx[k])[j]);
        }
    }
    c
}

/// Which form of the backward equation is being checked.
#[derive(Clone, Copy)]
enum Form {
    /// `(Y, Z)` against the equation with the `w` terms.
    Original,
    /// `(Ŷ, Ẑ)` against `Ŷ = Φ(X_T) - Σ Ẑ ΔW + Σ f̂ Δr`, `f̂(y, z) = f(y - w, z - ∇w)`.
    Transformed,
}

/// `|R_s|` at every knot plus start-knot components.
fn path_residual(
    path: &PathRecord,
    knots: &[f64],
    dim: usize,
    driver: &dyn Driver,
    terminal: &[f64],
    corr: Option<&Correction>,
    form: Form,
) -> (Vec<f64>, ResidualComponents) {
    let nk = knots.len();
    let d = terminal.len();
    let dz = d * dim;
    let mut dw = vec![0.0; dim];
    let mut f = vec![0.0; d];
    let mut y_arg = vec![0.0; d];
    let mut z_arg = vec![0.0; dz];
    // Backward accumulation of the sums from knot k to T.
    let mut ito = vec![0.0; d];
    let mut ito_w = vec![0.0; d];
    let mut riemann = vec![0.0; d];
    let mut out = vec![0.0; nk];
    let mut comps = ResidualComponents::default();
    for k in (0..nk).rev() {
        if k + 1 < nk {
            let dt = knots[k + 1] - knots[k];
            for j in 0..dim {
                dw[j] = path.w[(k + 1) * dim + j] - path.w[k * dim + j];
            }
            let y = &path.y[k * d..(k + 1) * d];
            let z = &path.z[k * dz..(k + 1) * dz];
            match (form, corr) {
                (Form::Transformed, Some(c)) => {
                    for i in 0..d {
                        y_arg[i] = y[i] - c.w[k * d + i];
                    }
                    for j in 0..dz {
                        z_arg[j] = z[j] - c.grad[k * dz + j];
                    }
                }
                _ => {
                    y_arg.copy_from_slice(y);
                    z_arg.copy_from_slice(z);
                }
            }
            driver.evaluate(knots[k], &path.x[k * dim..(k + 1) * dim], &y_arg, &z_arg, &mut f);
            for i in 0..d {
                let mut zdw = 0.0;
                let mut gdw = 0.0;
                for j in 0..dim {
                    zdw += z[i * dim + j] * dw[j];
                    if let (Form::Original, Some(c)) = (form, corr) {
                        gdw += c.grad[k * dz + i * dim + j] * dw[j];
                    }
                }
                ito[i] += zdw;
                ito_w[i] += gdw;
                riemann[i] += f[i] * dt;
            }
        }
        let mut r2 = 0.0;
        for i in 0..d {
            let wk = match (form, corr) {
                (Form::Original, Some(c)) => c.w[k * d + i],
                _ => 0.0,
            };
            let rhs = terminal[i] - ito[i] + riemann[i] - wk - ito_w[i];
            let r = path.y[k * d + i] - rhs;
            r2 += r * r;
            if k == 0 {
                comps.terminal += terminal[i] * terminal[i];
                comps.stochastic_integral += (ito[i] + ito_w[i]) * (ito[i] + ito_w[i]);
                comps.driver_integral += riemann[i] * riemann[i];
                comps.w_correction += wk * wk;
            }
        }
        out[k] = r2.sqrt();
    }
    comps.terminal = comps.terminal.sqrt();
    comps.stochastic_integral = comps.stochastic_integral.sqrt();
    comps.driver_integral = comps.driver_integral.sqrt();
    comps.w_correction = comps.w_correction.sqrt();
    (out, comps)
}

/// Accumulates per-path residuals in path order.
#[derive(Clone, Debug)]
pub(crate) struct ResidualAccumulator {
    paths: usize,
    dt: f64,
    sum_sup: f64,
    max_sup: f64,
    per_knot_sum: Vec<f64>,
    per_knot_max: Vec<f64>,
    comps: ResidualComponents,
}

impl ResidualAccumulator {
    pub(crate) fn new(knots: &[f64]) -> Self {
        let nk = knots.len();
        Self {
            paths: 0,
            dt: if nk > 1 { knots[1] - knots[0] } else { 0.0 },
            sum_sup: 0.0,
            max_sup: 0.0,
            per_knot_sum: vec![0.0; nk],
            per_knot_max: vec![0.0; nk],
            comps: ResidualComponents::default(),
        }
    }

    fn push(&mut self, r: &[f64], c: &ResidualComponents) {
        self.paths += 1;
        let sup = r.iter().copied().fold(0.0, f64::max);
        self.sum_sup += sup;
        self.max_sup = self.max_sup.max(sup);
        for (k, &v) in r.iter().enumerate() {
            self.per_knot_sum[k] += v;
            self.per_knot_max[k] = self.per_knot_max[k].max(v);
        }
        self.comps.terminal += c.terminal;
        self.comps.stochastic_integral += c.stochastic_integral;
        self.comps.driver_integral += c.driver_integral;
        self.comps.w_correction += c.w_correction;
    }

    pub(crate) fn finish(self) -> ResidualReport {
        let m = self.paths.max(1) as f64;
        ResidualReport {
            paths: self.paths,
            dt: self.dt,
            mean_residual: self.sum_sup / m,
            max_residual: self.max_sup,
            per_knot_mean: self.per_knot_sum.iter().map(|s| s / m).collect(),
            per_knot_worst: self.per_knot_max,
            components: ResidualComponents {
                terminal: self.comps.terminal / m,
                stochastic_integral: self.comps.stochastic_integral / m,
                driver_integral: self.comps.driver_integral / m,
                w_correction: self.comps.w_correction / m,
            },
        }
    }
}

/// Residual inputs shared by all paths.
pub(crate) struct ResidualContext<'a> {
    pub knots: &'a [f64],
    pub dim: usize,
    pub driver: &'a dyn Driver,
    pub terminal: Vec<Vec<f64>>,
    pub terminal_grid: crate::grid::PeriodicGrid,
    pub w: Option<(&'a MildSolution, Vec<usize>)>,
}

impl<'a> ResidualContext<'a> {
    pub(crate) fn new(
        knots: &'a [f64],
        dim: usize,
        driver: &'a dyn Driver,
        terminal: &SpectralField,
        w: Option<&'a MildSolution>,
    ) -> Result<Self> {
        let w = match w {
            Some(w) => Some((w, knot_indices(w.times(), knots)?)),
            None => None,
        };
        Ok(Self {
            knots,
            dim,
            driver,
            terminal: terminal.to_physical(),
            terminal_grid: terminal.grid().clone(),
            w,
        })
    }

    fn terminal_at(&self, path: &PathRecord) -> Vec<f64> {
        let nk = self.knots.len();
        let st = Stencil::new(&self.terminal_grid, &path.x[(nk - 1) * self.dim..nk * self.dim]);
        self.terminal.iter().map(|s| st.apply(s)).collect()
    }

    fn residual(&self, path: &PathRecord, form: Form) -> (Vec<f64>, ResidualComponents) {
        let corr = self.w.as_ref().map(|(w, idx)| sample_correction(w, idx, path));
        let phi = self.terminal_at(path);
        path_residual(path, self.knots, self.dim, self.driver, &phi, corr.as_ref(), form)
    }

    pub(crate) fn accumulate(&self, paths: &[PathRecord], acc: &mut ResidualAccumulator) {
        let rs: Vec<_> = paths.par_iter().map(|p| self.residual(p, Form::Original)).collect();
        for (r, c) in &rs {
            acc.push(r, c);
        }
    }
}

fn report(ensemble: &PathEnsemble, driver: &dyn Driver, terminal: &SpectralField, w: Option<&MildSolution>, form: Form) -> Result<ResidualReport> {
    if !ensemble.has_pair() {
        return Err(Error::InvalidArgument("ensemble has no (Y, Z); evaluate the pair first".into()));
    }
    let ctx = ResidualContext::new(&ensemble.knots, ensemble.dim, driver, terminal, w)?;
    let rs: Vec<_> = ensemble.paths.par_iter().map(|p| ctx.residual(p, form)).collect();
    let mut acc = ResidualAccumulator::new(&ensemble.knots);
    for (r, c) in &rs {
        acc.push(r, c);
    }
    Ok(acc.finish())
}

/// Residual of the backward equation with the `w` terms (pass `None` for `w ≡ 0`).
pub fn bsde_residual(ensemble: &PathEnsemble, driver: &dyn Driver, terminal: &SpectralField, w: Option<&MildSolution>) -> Result<ResidualReport> {
    report(ensemble, driver, terminal, w, Form::Original)
}

/// Residual of the transformed equation for an ensemble already carrying `(Ŷ, Ẑ)`.
pub fn bsde_residual_transformed(
    ensemble: &PathEnsemble,
    driver: &dyn Driver,
    terminal: &SpectralField,
    w: &MildSolution,
) -> Result<ResidualReport> {
    report(ensemble, driver, terminal, Some(w), Form::Transformed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZvonkinDirection {
    /// `(Y, Z) ↦ (Y + w, Z + ∇w)`.
    Forward,
    /// `(Ŷ, Ẑ) ↦ (Ŷ - w, Ẑ - ∇w)`.
    Inverse,
}

pub fn zvonkin_transform(ensemble: &PathEnsemble, w: &MildSolution, direction: ZvonkinDirection) -> Result<PathEnsemble> {
    if !ensemble.has_pair() {
        return Err(Error::InvalidArgument("ensemble has no (Y, Z) to transform".into()));
    }
    let idx = knot_indices(w.times(), &ensemble.knots)?;
    let sign = match direction {
        ZvonkinDirection::Forward => 1.0,
        ZvonkinDirection::Inverse => -1.0,
    };
    let mut out = ensemble.clone();
    out.paths.par_iter_mut().for_each(|p| {
        let c = sample_correction(w, &idx, p);
        p.y.iter_mut().zip(&c.w).for_each(|(y, a)| *y += sign * a);
        p.z.iter_mut().zip(&c.grad).for_each(|(z, a)| *z += sign * a);
    });
    Ok(out)
}

/// Residual of the backward equation over `paths` generated by `spec` in blocks
/// of `block`, without holding the full ensemble.
pub fn streamed_bsde_residual(
    spec: &super::paths::PathSpec<'_>,
    paths: usize,
    block: usize,
    u: &MildSolution,
    driver: &dyn Driver,
    terminal: &SpectralField,
    w: Option<&MildSolution>,
) -> Result<ResidualReport> {
    if paths == 0 || block == 0 {
        return Err(Error::InvalidArgument("need at least one path and a positive block size".into()));
    }
    let idx = knot_indices(u.times(), spec.knots)?;
    let ctx = ResidualContext::new(spec.knots, spec.dim(), driver, terminal, w)?;
    let mut acc = ResidualAccumulator::new(spec.knots);
    let mut flagged = 0;
    let mut first = 0;
    while first < paths {
        let count = block.min(paths - first);
        let mut e = spec.simulate_block(first, count)?;
        e.paths.par_iter_mut().for_each(|p| fill_pair(u, &idx, p));
        flagged += e.paths.iter().filter(|p| p.flagged).count();
        ctx.accumulate(&e.paths, &mut acc);
        first += count;
    }
    super::paths::check_domain(flagged, paths)?;
    Ok(acc.finish())
}
