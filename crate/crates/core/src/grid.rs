//! Uniform periodic grids on the torus `[-L, L)^d`.
//!
//! Coefficients are stored in the standard FFT layout: along each axis, index
//! `i < N/2` carries mode `k = i` and index `i >= N/2` carries `k = i - N`, so the
//! modes run over `{-N/2, ..., N/2 - 1}`. Two-dimensional arrays are row-major
//! with axis 0 outermost.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    dim: usize,
    n: usize,
    half_width: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |ξ|² per flat index.
    xi_sq: Vec<f64>,
}

/// A periodic grid with `n` points per axis on `[-L, L)^d`, `d ∈ {1, 2}`.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("half_width", &self.inner.half_width)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.half_width == other.inner.half_width)
    }
}

impl PeriodicGrid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two ≥ 4, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = std::f64::consts::PI / half_width;
        let axis: Vec<f64> = (0..n).map(|i| mode_of(i, n) as f64 * scale).collect();
        let len = n.pow(dim as u32);
        let xi_sq = (0..len)
            .map(|flat| match dim {
                1 => axis[flat] * axis[flat],
                _ => {
                    let (i0, i1) = (flat / n, flat % n);
                    axis[i0] * axis[i0] + axis[i1] * axis[i1]
                }
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                half_width,
                forward,
                inverse,
                xi_sq,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.inner.xi_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_width / self.inner.n as f64
    }

    /// Quadrature weight of a single grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    /// Volume of the torus, `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.inner.half_width).powi(self.inner.dim as i32)
    }

    /// Wavenumber spacing `π / L`.
    pub fn fundamental(&self) -> f64 {
        std::f64::consts::PI / self.inner.half_width
    }

    /// Largest resolved |ξ| along a single axis, `π N / (2L)`.
    pub fn max_axis_wavenumber(&self) -> f64 {
        self.fundamental() * (self.inner.n / 2) as f64
    }

    /// Integer mode numbers of a flat index, one per axis.
    pub fn modes(&self, flat: usize) -> [i64; 2] {
        let n = self.inner.n;
        match self.inner.dim {
            1 => [mode_of(flat, n), 0],
            _ => [mode_of(flat / n, n), mode_of(flat % n, n)],
        }
    }

    /// Flat index of the given integer modes (wrapping modulo `N`).
    pub fn index_of_modes(&self, modes: [i64; 2]) -> usize {
        let n = self.inner.n;
        let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
        match self.inner.dim {
            1 => wrap(modes[0]),
            _ => wrap(modes[0]) * n + wrap(modes[1]),
        }
    }

    /// Wavenumber vector ξ_k of a flat index.
    pub fn wavenumber(&self, flat: usize) -> [f64; 2] {
        let m = self.modes(flat);
        let s = self.fundamental();
        [m[0] as f64 * s, m[1] as f64 * s]
    }

    /// |ξ_k|² for every flat index.
    pub fn xi_sq(&self) -> &[f64] {
        &self.inner.xi_sq
    }

    /// Whether the flat index sits on the Nyquist mode `-N/2` along `axis`.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        self.modes(flat)[axis] == -((self.inner.n / 2) as i64)
    }

    /// Physical coordinates of a flat index; `x_j = -L + j h` per axis.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let n = self.inner.n;
        let h = self.spacing();
        let l = self.inner.half_width;
        match self.inner.dim {
            1 => [-l + flat as f64 * h, 0.0],
            _ => [-l + (flat / n) as f64 * h, -l + (flat % n) as f64 * h],
        }
    }

    /// Same torus with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.inner.dim, self.inner.n * factor, self.inner.half_width)
    }

    /// Unnormalized forward DFT in place (`Σ_j x_j e^{-2πi jk/N}` per axis).
    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// Unnormalized inverse DFT in place.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        debug_assert_eq!(data.len(), self.len());
        match self.inner.dim {
            1 => plan.process(data),
            _ => {
                // rows are contiguous; columns go through a scratch buffer
                plan.process(data);
                let mut column = vec![Complex64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        column[r] = data[r * n + c];
                    }
                    plan.process(&mut column);
                    for r in 0..n {
                        data[r * n + c] = column[r];
                    }
                }
            }
        }
    }
}

/// Integer mode of FFT index `i` on an axis of length `n`.
pub fn mode_of(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(PeriodicGrid::new(3, 16, 1.0).is_err());
        assert!(PeriodicGrid::new(1, 12, 1.0).is_err());
        assert!(PeriodicGrid::new(1, 16, 0.0).is_err());
        assert!(PeriodicGrid::new(1, 16, f64::NAN).is_err());
    }

    #[test]
    fn mode_layout_round_trips() {
        for dim in [1, 2] {
            let g = PeriodicGrid::new(dim, 16, 2.0).unwrap();
            for flat in 0..g.len() {
                let m = g.modes(flat);
                assert!(m[0] >= -8 && m[0] < 8);
                assert_eq!(g.index_of_modes(m), flat);
            }
        }
    }

    #[test]
    fn wavenumbers_use_torus_scaling() {
        let l = 3.0;
        let g = PeriodicGrid::new(1, 8, l).unwrap();
        let xi = g.wavenumber(g.index_of_modes([2, 0]));
        assert!((xi[0] - 2.0 * std::f64::consts::PI / l).abs() < 1e-15);
        assert!(g.is_nyquist(4, 0));
        assert_eq!(g.modes(4)[0], -4);
    }

    #[test]
    fn points_cover_the_torus() {
        let g = PeriodicGrid::new(2, 8, 1.0).unwrap();
        assert_eq!(g.point(0), [-1.0, -1.0]);
        let last = g.point(g.len() - 1);
        assert!((last[0] - 0.75).abs() < 1e-15 && (last[1] - 0.75).abs() < 1e-15);
    }
}
