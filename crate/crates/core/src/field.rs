//! Fourier-coefficient representation of (vector-valued) periodic fields.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

/// A field with one array of Fourier coefficients per component.
///
/// Coefficients are normalized so that `ĝ_0` is the grid mean of `g` and the
/// inverse transform is a plain sum: `g(x_j) = Σ_k ĝ_k e^{2πi jk/N}`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: PeriodicGrid,
    components: Vec<Vec<Complex64>>,
    time: Option<f64>,
}

impl SpectralField {
    pub fn zeros(grid: &PeriodicGrid, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            components: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; components],
            time: None,
        }
    }

    pub fn from_coefficients(grid: &PeriodicGrid, components: Vec<Vec<Complex64>>) -> Result<Self> {
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} coefficients", grid.len()),
                    actual: format!("{}", c.len()),
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            time: None,
        })
    }

    /// Transform physical-space samples (one array per component) to coefficients.
    pub fn from_physical(grid: &PeriodicGrid, samples: &[Vec<f64>]) -> Result<Self> {
        let norm = 1.0 / grid.len() as f64;
        let mut components = Vec::with_capacity(samples.len());
        for s in samples {
            if s.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} samples", grid.len()),
                    actual: format!("{}", s.len()),
                });
            }
            let mut data: Vec<Complex64> = s.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            grid.fft_forward(&mut data);
            data.iter_mut().for_each(|c| *c *= norm);
            components.push(data);
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            time: None,
        })
    }

    /// Sample an analytic function on the grid.
    pub fn from_fn(grid: &PeriodicGrid, components: usize, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let d = grid.dim();
        let samples: Vec<Vec<f64>> = (0..components)
            .map(|c| (0..grid.len()).map(|j| f(&grid.point(j)[..d], c)).collect())
            .collect();
        Self::from_physical(grid, &samples).expect("sample shape matches grid")
    }

    /// Real parts of the inverse transform, one array per component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        (0..self.components.len()).map(|c| self.component_physical(c)).collect()
    }

    pub fn component_physical(&self, c: usize) -> Vec<f64> {
        let mut data = self.components[c].clone();
        self.grid.fft_inverse(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    /// Split into single-component fields.
    pub fn split(&self) -> Vec<SpectralField> {
        self.components
            .iter()
            .map(|c| SpectralField {
                grid: self.grid.clone(),
                components: vec![c.clone()],
                time: self.time,
            })
            .collect()
    }

    /// Concatenate the components of several fields on one grid.
    pub fn stack(fields: &[SpectralField]) -> Result<Self> {
        let grid = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot stack zero fields".into()))?
            .grid
            .clone();
        let mut components = Vec::new();
        for f in fields {
            if f.grid != grid {
                return Err(Error::GridMismatch);
            }
            components.extend(f.components.iter().cloned());
        }
        Ok(Self {
            grid,
            components,
            time: fields[0].time,
        })
    }

    /// Multiply every coefficient by a real symbol of the flat index.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        let table: Vec<f64> = (0..self.grid.len()).map(symbol).collect();
        let components = self
            .components
            .iter()
            .map(|c| c.iter().zip(&table).map(|(z, s)| z * s).collect())
            .collect();
        Self {
            grid: self.grid.clone(),
            components,
            time: self.time,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.apply_symbol(|_| a)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v * a).collect())
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            components,
            time: self.time,
        })
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.components.len() != other.components.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} components", self.components.len()),
                actual: format!("{}", other.components.len()),
            });
        }
        Ok(())
    }

    /// Largest relative violation of `ĝ(-k) = conj(ĝ(k))` over all components.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.components {
            let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for (flat, z) in c.iter().enumerate() {
                let m = self.grid.modes(flat);
                let mirror = self.grid.index_of_modes([-m[0], -m[1]]);
                worst = worst.max((z - c[mirror].conj()).norm() / scale);
            }
        }
        worst
    }

    /// Euclidean norm of all coefficients (used for relative comparisons).
    pub fn coefficient_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coefficient-wise distance to another field.
    pub fn max_coefficient_distance(&self, other: &SpectralField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("compatible fields")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs).expect("compatible fields")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

/// Transform physical samples to a field; see [`SpectralField::from_physical`].
pub fn to_spectral(grid: &PeriodicGrid, samples: &[Vec<f64>]) -> Result<SpectralField> {
    SpectralField::from_physical(grid, samples)
}

/// Inverse transform; see [`SpectralField::to_physical`].
pub fn to_physical(field: &SpectralField) -> Vec<Vec<f64>> {
    field.to_physical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(1, 64, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = grid();
        let f = SpectralField::from_fn(&g, 1, |_, _| 3.5);
        let c = f.component(0);
        assert!((c[0].re - 3.5).abs() < 1e-14);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn cosine_has_two_modes() {
        let g = grid();
        let l = g.half_width();
        let f = SpectralField::from_fn(&g, 1, |x, _| (PI * x[0] / l).cos());
        let nonzero: Vec<i64> = f
            .component(0)
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 1e-12)
            .map(|(i, _)| g.modes(i)[0])
            .collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.contains(&1) && nonzero.contains(&-1));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = grid();
        assert!(SpectralField::from_physical(&g, &[vec![0.0; 10]]).is_err());
    }

    #[test]
    fn two_dimensional_round_trip() {
        let g = PeriodicGrid::new(2, 16, 1.5).unwrap();
        let f = SpectralField::from_fn(&g, 2, |x, c| (x[0] + 2.0 * x[1]).sin() + c as f64 * x[0].cos());
        let back = SpectralField::from_physical(&g, &f.to_physical()).unwrap();
        assert!(back.max_coefficient_distance(&f) < 1e-14);
        assert!(f.hermitian_defect() < 1e-12);
    }
}
