//! Drivers `f(t, x, y, z)` of the backward equation, Lipschitz in `(y, z)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A driver `f : [0,T] × ℝ^d × ℝ^d × ℝ^{d×d} → ℝ^d`.
///
/// `z` is row-major with `z[i·d + j] = ∂_j u_i`; `out` has length `d`.
pub trait Driver: Send + Sync + fmt::Debug {
    fn evaluate(&self, t: f64, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]);

    /// Declared Lipschitz constant in `(y, z)`, uniform in `(t, x)`.
    fn lipschitz(&self) -> f64;

    fn is_zero(&self) -> bool {
        false
    }
}

/// Built-in driver families.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriverSpec {
    #[default]
    Zero,
    /// `f_i = c(t)·(y_i + Σ_j z_ij) + d(x)`.
    Linear {
        coefficient: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        offset: Offset,
    },
    /// `f_i = c(t)·sin(y_i + Σ_j z_ij) + d(x)`.
    Sinusoidal {
        coefficient: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        offset: Offset,
    },
    /// A user routine; not expressible in scenario files.
    #[serde(skip)]
    Custom(Arc<dyn Driver>),
}

/// Gaussian offset `d(x) = a·exp(-|x - c|² / (2w²))`, shared by all components.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Offset {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for Offset {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            width: 1.0,
            center: Vec::new(),
        }
    }
}

impl Offset {
    fn eval(&self, x: &[f64]) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                let c = self.center.get(i).copied().unwrap_or(0.0);
                (xi - c) * (xi - c)
            })
            .sum();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Horizon used to bound `|c(t)|` when computing Lipschitz constants.
const SLOPE_HORIZON: f64 = 1.0;

impl DriverSpec {
    fn coefficient_at(coefficient: f64, slope: f64, t: f64) -> f64 {
        coefficient + slope * t
    }
}

impl Driver for DriverSpec {
    fn evaluate(&self, t: f64, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        let d = y.len();
        match self {
            DriverSpec::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            DriverSpec::Linear {
                coefficient,
                slope,
                offset,
            } => {
                let c = Self::coefficient_at(*coefficient, *slope, t);
                let off = offset.eval(x);
                for i in 0..d {
                    let s: f64 = y[i] + z[i * d..(i + 1) * d].iter().sum::<f64>();
                    out[i] = c * s + off;
                }
            }
            DriverSpec::Sinusoidal {
                coefficient,
                slope,
                offset,
            } => {
                let c = Self::coefficient_at(*coefficient, *slope, t);
                let off = offset.eval(x);
                for i in 0..d {
                    let s: f64 = y[i] + z[i * d..(i + 1) * d].iter().sum::<f64>();
                    out[i] = c * s.sin() + off;
                }
            }
            DriverSpec::Custom(f) => f.evaluate(t, x, y, z, out),
        }
    }

    /// `sup_{t ≤ 1} |c(t)|` (times `√d` for the `z`-sum); horizons beyond one
    /// with a nonzero slope should use a custom driver.
    fn lipschitz(&self) -> f64 {
        match self {
            DriverSpec::Zero => 0.0,
            DriverSpec::Linear { coefficient, slope, .. } | DriverSpec::Sinusoidal { coefficient, slope, .. } => {
                coefficient.abs().max((coefficient + slope * SLOPE_HORIZON).abs())
            }
            DriverSpec::Custom(f) => f.lipschitz(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            DriverSpec::Zero => true,
            DriverSpec::Custom(f) => f.is_zero(),
            _ => false,
        }
    }
}

/// Declared constant scaled for dimension `d`: `|Δf| ≤ L(|Δy| + √d |Δz|)`.
pub fn lipschitz_in_dim(driver: &dyn Driver, dim: usize) -> f64 {
    driver.lipschitz() * (dim as f64).sqrt()
}

/// Largest sampled `|f(y,z) - f(y',z')| / (|y-y'| + |z-z'|)` over random pairs.
pub fn empirical_lipschitz(driver: &dyn Driver, dim: usize, horizon: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for _ in 0..samples {
        let t = rng.random::<f64>() * horizon;
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y1: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
        let y2: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
        let z1: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-4.0..4.0)).collect();
        let z2: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-4.0..4.0)).collect();
        driver.evaluate(t, &x, &y1, &z1, &mut a);
        driver.evaluate(t, &x, &y2, &z2, &mut b);
        let num = dist(&a, &b);
        let den = dist(&y1, &y2) + dist(&z1, &z2);
        if den > 1e-12 {
            best = best.max(num / den);
        }
    }
    best
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_constant_dominates_samples() {
        let drivers = [
            DriverSpec::Linear {
                coefficient: 0.4,
                slope: -0.3,
                offset: Offset::default(),
            },
            DriverSpec::Sinusoidal {
                coefficient: -0.7,
                slope: 0.2,
                offset: Offset {
                    amplitude: 0.5,
                    width: 0.8,
                    center: vec![0.1],
                },
            },
        ];
        for f in &drivers {
            for dim in [1, 2] {
                let emp = empirical_lipschitz(f, dim, 1.0, 5000, 7);
                assert!(emp <= lipschitz_in_dim(f, dim) + 1e-12, "{f:?} d={dim}: {emp}");
            }
        }
    }

    #[test]
    fn sinusoidal_at_origin_is_offset() {
        let f = DriverSpec::Sinusoidal {
            coefficient: 0.3,
            slope: 0.0,
            offset: Offset {
                amplitude: 2.0,
                width: 1.0,
                center: vec![0.0],
            },
        };
        let mut out = [0.0];
        f.evaluate(0.2, &[0.0], &[0.0], &[0.0], &mut out);
        assert_eq!(out[0], 2.0);
    }

    #[test]
    fn zero_driver_is_zero() {
        let mut out = [1.0, 1.0];
        DriverSpec::Zero.evaluate(0.0, &[0.0, 0.0], &[1.0, 2.0], &[1.0; 4], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        assert!(DriverSpec::Zero.is_zero());
    }
}
