//! Regularized covariation `(1/ε) ∫_t^s (Y_{r+ε} - Y_r)(W_{r+ε} - W_r)ᵀ dr`
//! compared with `∫_t^s Z_r dr`.

use serde::Serialize;

use super::paths::PathEnsemble;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovariationReport {
    pub epsilon: f64,
    /// `ε / Δt` rounded to the nearest integer.
    pub window: usize,
    /// Knots where both curves are defined (`s ≤ T - ε`).
    pub times: Vec<f64>,
    /// Path mean of the covariation, `d²` row-major entries per knot.
    pub covariation: Vec<Vec<f64>>,
    /// Path mean of `∫ Z dr`, same layout.
    pub integrated_z: Vec<Vec<f64>>,
    /// Mean over paths of `sup_s |C_s - ∫Z|` (Frobenius).
    pub sup_gap: f64,
    /// Largest per-path sup gap.
    pub worst_path_gap: f64,
}

/// Needs a uniform knot set, `(Y, Z)` already evaluated and `ε ≥ 2Δt`.
pub fn covariation_check(ensemble: &PathEnsemble, epsilon: f64) -> Result<CovariationReport> {
    if !ensemble.has_pair() {
        return Err(Error::InvalidArgument("ensemble has no (Y, Z); evaluate the pair first".into()));
    }
    let knots = &ensemble.knots;
    let nk = knots.len();
    if nk < 2 {
        return Err(Error::InvalidArgument("need at least one time step".into()));
    }
    let dt = knots[1] - knots[0];
    if knots.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(Error::InvalidArgument("covariation needs uniform knots".into()));
    }
    if !(epsilon >= 2.0 * dt * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "ε = {epsilon} must be at least 2Δt = {}",
            2.0 * dt
        )));
    }
    let m = (epsilon / dt).round() as usize;
    if m >= nk {
        return Err(Error::InvalidArgument(format!("ε = {epsilon} exceeds the horizon")));
    }
    let dim = ensemble.dim;
    let d = ensemble.paths[0].y.len() / nk;
    let dz = d * dim;
    let last = nk - 1 - m;
    let mut cov = vec![vec![0.0; dz]; last + 1];
    let mut intz = vec![vec![0.0; dz]; last + 1];
    let mut gap_sum = 0.0;
    let mut gap_max: f64 = 0.0;
    let mut c = vec![0.0; dz];
    let mut iz = vec![0.0; dz];
    for p in &ensemble.paths {
        c.iter_mut().for_each(|a| *a = 0.0);
        iz.iter_mut().for_each(|a| *a = 0.0);
        let mut sup: f64 = 0.0;
        for j in 0..=last {
            if j > 0 {
                let i = j - 1;
                for a in 0..d {
                    let dy = p.y[(i + m) * d + a] - p.y[i * d + a];
                    for b in 0..dim {
                        let dw = p.w[(i + m) * dim + b] - p.w[i * dim + b];
                        c[a * dim + b] += dy * dw * dt / epsilon;
                        iz[a * dim + b] += p.z[i * dz + a * dim + b] * dt;
                    }
                }
            }
            let g = c.iter().zip(&iz).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            sup = sup.max(g);
            for e in 0..dz {
                cov[j][e] += c[e];
                intz[j][e] += iz[e];
            }
        }
        gap_sum += sup;
        gap_max = gap_max.max(sup);
    }
    let n = ensemble.paths.len() as f64;
    for row in cov.iter_mut().chain(intz.iter_mut()) {
        row.iter_mut().for_each(|a| *a /= n);
    }
    Ok(CovariationReport {
        epsilon,
        window: m,
        times: knots[..=last].to_vec(),
        covariation: cov,
        integrated_z: intz,
        sup_gap: gap_sum / n,
        worst_path_gap: gap_max,
    })
}
