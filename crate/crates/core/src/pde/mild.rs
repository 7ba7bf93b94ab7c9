use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::paraproduct::CutoffProfile;
use crate::sobolev::{gradient, pointwise_magnitude, sup_and_holder_samples, sup_norm_samples};

/// Picard iteration controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    /// Stop once `sup_k ‖u^{m+1}(t_k) - u^m(t_k)‖_{H^{1+δ}_p}` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Abort when the increment fails to decrease this many times in a row.
    pub stall_window: usize,
    /// Weight `ρ` of the diagnostic norm `sup_k e^{-ρ(T - t_k)}‖·‖`.
    pub rho: f64,
    /// Paraproduct level; `None` means the finest level the grid resolves.
    pub level: Option<u32>,
    pub profile: CutoffProfile,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            stall_window: 5,
            rho: 0.0,
            level: None,
            profile: CutoffProfile::default(),
        }
    }
}

/// Convergence history of a fixed-point solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Unweighted sup-in-time increments, one per iteration.
    pub increments: Vec<f64>,
    /// `ρ`-weighted increments.
    pub weighted_increments: Vec<f64>,
    /// Geometric mean of successive increment ratios after a three-iteration burn-in.
    pub contraction_ratio: f64,
    pub converged: bool,
}

impl SolveReport {
    /// Report for a solution obtained without iterating.
    pub fn direct() -> Self {
        Self {
            iterations: 0,
            increments: Vec::new(),
            weighted_increments: Vec::new(),
            contraction_ratio: 0.0,
            converged: true,
        }
    }
}

pub(crate) fn fitted_contraction_ratio(increments: &[f64]) -> f64 {
    const BURN_IN: usize = 3;
    let ratios: Vec<f64> = increments.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let tail = if ratios.len() > BURN_IN { &ratios[BURN_IN..] } else { &ratios[..] };
    if tail.is_empty() {
        return 0.0;
    }
    if tail.iter().any(|&r| r <= 0.0) {
        return 0.0;
    }
    (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp()
}

/// `u` and `∇u` on every knot, with physical samples cached for evaluation.
#[derive(Clone, Debug)]
pub struct MildSolution {
    times: Vec<f64>,
    values: Vec<SpectralField>,
    gradients: Vec<SpectralField>,
    value_samples: Vec<Vec<Vec<f64>>>,
    gradient_samples: Vec<Vec<Vec<f64>>>,
    report: SolveReport,
}

impl MildSolution {
    pub fn from_values(times: Vec<f64>, values: Vec<SpectralField>, report: SolveReport) -> Result<Self> {
        if times.len() != values.len() || values.is_empty() {
            return Err(Error::KnotMismatch(format!("{} values for {} knots", values.len(), times.len())));
        }
        for v in &values {
            values[0].check_compatible(v)?;
        }
        let values: Vec<SpectralField> = values.into_iter().zip(&times).map(|(v, &t)| v.with_time(t)).collect();
        let gradients: Vec<SpectralField> = values.par_iter().map(gradient).collect();
        let value_samples = values.par_iter().map(|v| v.to_physical()).collect();
        let gradient_samples = gradients.par_iter().map(|v| v.to_physical()).collect();
        Ok(Self {
            times,
            values,
            gradients,
            value_samples,
            gradient_samples,
            report,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.values[0].grid()
    }

    pub fn num_components(&self) -> usize {
        self.values[0].num_components()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    pub fn value(&self, knot: usize) -> &SpectralField {
        &self.values[knot]
    }

    pub fn gradient(&self, knot: usize) -> &SpectralField {
        &self.gradients[knot]
    }

    pub fn gradients(&self) -> &[SpectralField] {
        &self.gradients
    }

    pub fn value_samples(&self, knot: usize) -> &[Vec<f64>] {
        &self.value_samples[knot]
    }

    pub fn gradient_samples(&self, knot: usize) -> &[Vec<f64>] {
        &self.gradient_samples[knot]
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    /// Index of the last knot `t_k ≤ t` (clamped to the grid).
    pub fn knot_at_or_before(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Index of the knot nearest to `t`.
    pub fn nearest_knot(&self, t: f64) -> usize {
        let i = self.knot_at_or_before(t);
        if i + 1 < self.times.len() && (self.times[i + 1] - t).abs() < (t - self.times[i]).abs() {
            i + 1
        } else {
            i
        }
    }

    /// `sup |u|` and the time-Hölder quotient of `u`.
    pub fn value_sup_and_holder(&self, gamma: f64) -> Result<(f64, f64)> {
        sup_and_holder_samples(&self.value_samples, &self.times, gamma)
    }

    /// `sup |∇u|` and the time-Hölder quotient of `∇u`.
    pub fn gradient_sup_and_holder(&self, gamma: f64) -> Result<(f64, f64)> {
        sup_and_holder_samples(&self.gradient_samples, &self.times, gamma)
    }

    /// `sup_{k,x} |∇u(t_k, x)|` in the Frobenius norm.
    pub fn sup_gradient(&self) -> f64 {
        self.gradient_samples.iter().map(|s| sup_norm_samples(s)).fold(0.0, f64::max)
    }

    /// `sup_{k,x} |u(t_k, x)|`.
    pub fn sup_value(&self) -> f64 {
        self.value_samples
            .iter()
            .map(|s| pointwise_magnitude(s).into_iter().fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_increments_give_their_ratio() {
        let inc: Vec<f64> = (0..12).map(|m| 0.3f64.powi(m)).collect();
        assert!((fitted_contraction_ratio(&inc) - 0.3).abs() < 1e-12);
        assert_eq!(fitted_contraction_ratio(&[1.0]), 0.0);
    }

    #[test]
    fn knot_lookup() {
        let g = PeriodicGrid::new(1, 8, 1.0).unwrap();
        let z = SpectralField::zeros(&g, 1);
        let s = MildSolution::from_values(vec![0.0, 0.5, 1.0], vec![z.clone(), z.clone(), z], SolveReport::direct()).unwrap();
        assert_eq!(s.knot_at_or_before(0.7), 1);
        assert_eq!(s.nearest_knot(0.7), 1);
        assert_eq!(s.nearest_knot(0.8), 2);
        assert_eq!(s.knot_at_or_before(2.0), 2);
        assert_eq!(s.knot_at_or_before(-1.0), 0);
    }
}
