//! Drift families, sharp spectral truncation `b ↦ bⁿ`, and ladder studies of
//! how the PDE solution responds as `bⁿ → b`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::params::SolverParams;
use crate::pde::{fourier_field, solve_aux_w, solve_semilinear, DriftPath, Driver, FixedPointConfig, FourierMode, MildSolution};
use crate::sobolev::{sobolev_norm, sup_norm_samples};

/// Drift families `b : ℝ^d → ℝ^d`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    #[default]
    Zero,
    /// Band-limited trigonometric drift.
    Smooth { modes: Vec<FourierMode> },
    /// `amplitude · ∇ Σ_k a_k |k|^{-(H + d/2)} e^{iξ_k·x}` with `a_k` standard
    /// complex Gaussians, so drift coefficients decay like `|k|^{1 - H - d/2}` and
    /// `b ∈ H^{-β}_2` exactly when `β > 1 - H`.
    FractionalNoise { hurst: f64, seed: u64, amplitude: f64 },
}

/// Time dependence of the realized drift on the knot grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeProfile {
    #[default]
    Static,
    /// `b(t_k) = (1 + a·sin(2π f t_k / T)) b`, piecewise constant between knots.
    Modulated { amplitude: f64, frequency: f64 },
}

impl DriftSpec {
    pub fn realize(&self, grid: &PeriodicGrid) -> Result<SpectralField> {
        let d = grid.dim();
        match self {
            DriftSpec::Zero => Ok(SpectralField::zeros(grid, d)),
            DriftSpec::Smooth { modes } => fourier_field(grid, d, modes),
            DriftSpec::FractionalNoise { hurst, seed, amplitude } => {
                if !(*hurst > 0.5 && *hurst < 1.0) {
                    return Err(Error::InvalidArgument(format!("Hurst exponent {hurst} ∉ (1/2, 1)")));
                }
                Ok(fractional_noise(grid, *hurst, *seed, *amplitude))
            }
        }
    }

    pub fn realize_path(&self, grid: &PeriodicGrid, knots: &[f64], profile: &TimeProfile) -> Result<DriftPath> {
        let b = self.realize(grid)?;
        Ok(match profile {
            TimeProfile::Static => DriftPath::Static(b),
            TimeProfile::Modulated { amplitude, frequency } => {
                let horizon = knots.last().copied().unwrap_or(0.0);
                let period = if horizon > 0.0 { horizon } else { 1.0 };
                DriftPath::PerKnot(
                    knots
                        .iter()
                        .map(|&t| {
                            let s = 1.0 + amplitude * (2.0 * std::f64::consts::PI * frequency * t / period).sin();
                            b.scale(s).with_time(t)
                        })
                        .collect(),
                )
            }
        })
    }
}

/// Each mode draws from its own RNG stream, so a refined grid reproduces the
/// coarse modes exactly.
fn fractional_noise(grid: &PeriodicGrid, hurst: f64, seed: u64, amplitude: f64) -> SpectralField {
    let d = grid.dim();
    let half = (grid.n() / 2) as i64;
    let decay = hurst + d as f64 / 2.0;
    let mut potential = vec![Complex64::new(0.0, 0.0); grid.len()];
    for flat in 0..grid.len() {
        let m = grid.modes(flat);
        let k = &m[..d];
        if k.iter().all(|&x| x == 0) || k.iter().any(|&x| x == -half) {
            continue;
        }
        // Draw on the half space and mirror for Hermitian symmetry.
        let first_nonzero = *k.iter().find(|&&x| x != 0).unwrap();
        if first_nonzero < 0 {
            continue;
        }
        let stream = if d == 1 {
            k[0] as u64
        } else {
            ((k[0] as u64) << 32) | ((k[1] + (1 << 31)) as u64)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let norm = k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        let a = Complex64::new(re, im) * (std::f64::consts::FRAC_1_SQRT_2 * norm.powf(-decay));
        potential[flat] = a;
        let mut mirror = [0i64; 2];
        for i in 0..d {
            mirror[i] = -m[i];
        }
        potential[grid.index_of_modes(mirror)] = a.conj();
    }
    let phi = SpectralField::from_coefficients(grid, vec![potential]).expect("shape");
    let w = grid.fundamental();
    let comps: Vec<Vec<Complex64>> = (0..d)
        .map(|axis| {
            phi.component(0)
                .iter()
                .enumerate()
                .map(|(flat, &c)| {
                    let k = grid.modes(flat)[axis] as f64;
                    c * Complex64::new(0.0, amplitude * w * k)
                })
                .collect()
        })
        .collect();
    SpectralField::from_coefficients(grid, comps).expect("shape")
}

/// Sharp truncation to modes with `|k| ≤ n` (mode-index units).
pub fn mollify_drift(b: &SpectralField, n: usize) -> SpectralField {
    let grid = b.grid();
    let d = grid.dim();
    let n2 = (n * n) as i64;
    b.apply_symbol(|flat| {
        let m = grid.modes(flat);
        let r2: i64 = m[..d].iter().map(|x| x * x).sum();
        if r2 <= n2 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn mollify_path(b: &DriftPath, n: usize) -> DriftPath {
    b.map(|f| mollify_drift(f, n))
}

/// Truncated drifts on a ladder of cutoffs and their distances to `b`.
#[derive(Clone, Debug)]
pub struct MollificationLadder {
    pub levels: Vec<usize>,
    pub drifts: Vec<DriftPath>,
    /// `sup_k ‖bⁿ(t_k) - b(t_k)‖_{H^{-β}_q}`.
    pub distances: Vec<f64>,
}

impl MollificationLadder {
    pub fn new(b: &DriftPath, levels: &[usize], knots: usize, beta: f64, q: f64) -> Result<Self> {
        if levels.windows(2).any(|w| w[1] <= w[0]) || levels.first() == Some(&0) {
            return Err(Error::InvalidArgument(format!("ladder levels must be positive and increasing: {levels:?}")));
        }
        let drifts: Vec<DriftPath> = levels.iter().map(|&n| mollify_path(b, n)).collect();
        let distances = drifts
            .iter()
            .map(|bn| bn.sup_distance(b, knots, -beta, q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels: levels.to_vec(),
            drifts,
            distances,
        })
    }

    pub fn distances_strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

/// One ladder level of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: usize,
    /// `sup_t ‖bⁿ - b‖_{H^{-β}_q}`.
    pub drift_distance: f64,
    /// `sup_t ‖uⁿ - u‖_{H^{1+δ}_p}`.
    pub solution_distance: f64,
    pub sup_u_gap: f64,
    pub sup_grad_u_gap: f64,
    pub sup_w_gap: f64,
    pub sup_grad_w_gap: f64,
    pub sup_u: f64,
    pub sup_grad_u: f64,
    pub sup_w: f64,
    pub sup_grad_w: f64,
    pub iterations: usize,
    pub contraction_ratio: f64,
}

impl StudyRow {
    /// `‖uⁿ - u‖ / ‖bⁿ - b‖`, or `None` once the drift is fully resolved.
    pub fn stability_ratio(&self) -> Option<f64> {
        (self.drift_distance > 0.0).then(|| self.solution_distance / self.drift_distance)
    }

    pub fn w_ratio(&self) -> Option<f64> {
        (self.drift_distance > 0.0).then(|| self.sup_w_gap / self.drift_distance)
    }
}

/// Reference values and one row per ladder level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub sup_u_ref: f64,
    pub sup_grad_u_ref: f64,
    pub sup_w_ref: f64,
    pub reference_contraction_ratio: f64,
}

struct Summary {
    u: MildSolution,
    w: MildSolution,
}

fn sup_gap(a: &MildSolution, b: &MildSolution, grad: bool) -> f64 {
    (0..a.times().len())
        .map(|k| {
            let (x, y) = if grad {
                (a.gradient_samples(k), b.gradient_samples(k))
            } else {
                (a.value_samples(k), b.value_samples(k))
            };
            let diff: Vec<Vec<f64>> = x
                .iter()
                .zip(y)
                .map(|(p, q)| p.iter().zip(q).map(|(s, t)| s - t).collect())
                .collect();
            sup_norm_samples(&diff)
        })
        .fold(0.0, f64::max)
}

fn sup_values(s: &MildSolution) -> f64 {
    (0..s.times().len()).map(|k| sup_norm_samples(s.value_samples(k))).fold(0.0, f64::max)
}

/// Solves with the full drift and with each truncation, and tabulates the
/// distances. Levels run concurrently when `parallel` is set.
pub fn convergence_study(
    b: &DriftPath,
    levels: &[usize],
    driver: &dyn Driver,
    terminal: &SpectralField,
    params: &SolverParams,
    cfg: &FixedPointConfig,
    parallel: bool,
) -> Result<StudyTable> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!("a ladder needs ≥ 3 levels, got {}", levels.len())));
    }
    params.ensure_valid()?;
    let knots = params.knots().len();
    let ladder = MollificationLadder::new(b, levels, knots, params.beta, params.q)?;
    let solve = |drift: &DriftPath| -> Result<Summary> {
        let u = solve_semilinear(drift, driver, terminal, params, cfg)?;
        let w = solve_aux_w(drift, &u, params, cfg)?;
        Ok(Summary { u, w })
    };
    let reference = solve(b).map_err(|e| e.context("reference solve"))?;
    let level_rows = |i: usize| -> Result<StudyRow> {
        let s = solve(&ladder.drifts[i]).map_err(|e| Error::Level {
            level: ladder.levels[i],
            source: Box::new(e),
        })?;
        let solution_distance = (0..knots)
            .map(|k| {
                let diff = s.u.value(k).axpy(-1.0, reference.u.value(k))?;
                sobolev_norm(&diff, 1.0 + params.delta, params.p)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(StudyRow {
            level: ladder.levels[i],
            drift_distance: ladder.distances[i],
            solution_distance,
            sup_u_gap: sup_gap(&s.u, &reference.u, false),
            sup_grad_u_gap: sup_gap(&s.u, &reference.u, true),
            sup_w_gap: sup_gap(&s.w, &reference.w, false),
            sup_grad_w_gap: sup_gap(&s.w, &reference.w, true),
            sup_u: sup_values(&s.u),
            sup_grad_u: s.u.sup_gradient(),
            sup_w: sup_values(&s.w),
            sup_grad_w: s.w.sup_gradient(),
            iterations: s.u.report().iterations,
            contraction_ratio: s.u.report().contraction_ratio,
        })
    };
    let rows = if parallel {
        (0..levels.len()).into_par_iter().map(level_rows).collect::<Result<Vec<_>>>()?
    } else {
        (0..levels.len()).map(level_rows).collect::<Result<Vec<_>>>()?
    };
    Ok(StudyTable {
        rows,
        sup_u_ref: sup_values(&reference.u),
        sup_grad_u_ref: reference.u.sup_gradient(),
        sup_w_ref: sup_values(&reference.w),
        reference_contraction_ratio: reference.u.report().contraction_ratio,
    })
}
