use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;

/// Terminal condition `Φ : ℝ^d → ℝ^d`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalSpec {
    /// `a·exp(-|x - c|² / (2w²))` in every component, with nearest-image distance.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// Sum of trigonometric modes `cos·cos(ξ_k·x) + sin·sin(ξ_k·x)`.
    Sinusoidal { modes: Vec<FourierMode> },
    /// Physical samples, one array per component.
    #[serde(skip)]
    Samples(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    /// Integer mode numbers, one per axis.
    pub k: Vec<i64>,
    #[serde(default)]
    pub component: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl TerminalSpec {
    pub fn realize(&self, grid: &PeriodicGrid) -> Result<SpectralField> {
        let d = grid.dim();
        match self {
            TerminalSpec::Gaussian {
                amplitude,
                width,
                center,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidArgument(format!("gaussian width must be > 0, got {width}")));
                }
                let l = grid.half_width();
                Ok(SpectralField::from_fn(grid, d, |x, _| {
                    let r2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(i, &xi)| {
                            let c = center.get(i).copied().unwrap_or(0.0);
                            let mut dx = (xi - c).rem_euclid(2.0 * l);
                            if dx >= l {
                                dx -= 2.0 * l;
                            }
                            dx * dx
                        })
                        .sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                }))
            }
            TerminalSpec::Sinusoidal { modes } => fourier_field(grid, d, modes),
            TerminalSpec::Samples(s) => {
                if s.len() != d {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{d} components"),
                        actual: format!("{}", s.len()),
                    });
                }
                SpectralField::from_physical(grid, s)
            }
        }
    }
}

/// `Σ cos·cos(ξ_k·x) + sin·sin(ξ_k·x)` per component, with `ξ_k = πk/L`.
pub fn fourier_field(grid: &PeriodicGrid, components: usize, modes: &[FourierMode]) -> Result<SpectralField> {
    let d = grid.dim();
    for m in modes {
        if m.component >= components || m.k.len() != d {
            return Err(Error::InvalidArgument(format!(
                "mode {:?} (component {}) does not fit {components} components in dimension {d}",
                m.k, m.component
            )));
        }
    }
    let w = grid.fundamental();
    Ok(SpectralField::from_fn(grid, components, |x, c| {
        modes
            .iter()
            .filter(|m| m.component == c)
            .map(|m| {
                let phase: f64 = m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * w * xi).sum();
                m.cos * phase.cos() + m.sin * phase.sin()
            })
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peaks_at_center() {
        let g = PeriodicGrid::new(1, 64, 4.0).unwrap();
        let phi = TerminalSpec::Gaussian {
            amplitude: 2.0,
            width: 0.5,
            center: vec![0.0],
        }
        .realize(&g)
        .unwrap();
        let s = phi.to_physical();
        assert!((s[0][32] - 2.0).abs() < 1e-12);
        assert!(s[0][0] < 1e-10);
        assert!(phi.hermitian_defect() < 1e-12);
    }

    #[test]
    fn sample_shape_is_checked() {
        let g = PeriodicGrid::new(1, 16, 1.0).unwrap();
        assert!(TerminalSpec::Samples(vec![vec![0.0; 16]; 2]).realize(&g).is_err());
        assert!(TerminalSpec::Samples(vec![vec![0.0; 16]]).realize(&g).is_ok());
    }
}
