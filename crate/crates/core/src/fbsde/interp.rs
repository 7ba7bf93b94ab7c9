//! Off-grid evaluation of periodic samples by Catmull–Rom cubics (tensor
//! product in two dimensions).

use crate::grid::PeriodicGrid;

#[inline]
fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Base index (periodic) and weights for one axis coordinate.
#[inline]
fn stencil(grid: &PeriodicGrid, x: f64) -> ([usize; 4], [f64; 4]) {
    let n = grid.n();
    let u = (x + grid.half_width()) / grid.spacing();
    let f = u.floor();
    let t = u - f;
    let i = (f as i64).rem_euclid(n as i64) as usize;
    let idx = [(i + n - 1) % n, i, (i + 1) % n, (i + 2) % n];
    (idx, weights(t))
}

/// Precomputed stencil for evaluating several fields at one point.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    idx: [[usize; 4]; 2],
    w: [[f64; 4]; 2],
    dim: usize,
    n: usize,
}

impl Stencil {
    pub fn new(grid: &PeriodicGrid, x: &[f64]) -> Self {
        let dim = grid.dim();
        let mut idx = [[0; 4]; 2];
        let mut w = [[0.0; 4]; 2];
        for a in 0..dim {
            let (i, ww) = stencil(grid, x[a]);
            idx[a] = i;
            w[a] = ww;
        }
        Self { idx, w, dim, n: grid.n() }
    }

    #[inline]
    pub fn apply(&self, samples: &[f64]) -> f64 {
        if self.dim == 1 {
            (0..4).map(|a| self.w[0][a] * samples[self.idx[0][a]]).sum()
        } else {
            let mut s = 0.0;
            for a in 0..4 {
                let row = self.idx[0][a] * self.n;
                let mut r = 0.0;
                for b in 0..4 {
                    r += self.w[1][b] * samples[row + self.idx[1][b]];
                }
                s += self.w[0][a] * r;
            }
            s
        }
    }
}

/// Value of periodic `samples` at an arbitrary point.
pub fn interpolate(grid: &PeriodicGrid, samples: &[f64], x: &[f64]) -> f64 {
    Stencil::new(grid, x).apply(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_cubics_locally() {
        let g = PeriodicGrid::new(1, 64, 3.0).unwrap();
        let s: Vec<f64> = (0..64).map(|j| (g.point(j)[0]).sin()).collect();
        for j in [0, 5, 63] {
            assert!((interpolate(&g, &s, &[g.point(j)[0]]) - s[j]).abs() < 1e-14);
        }
        let x = 0.123_f64;
        assert!((interpolate(&g, &s, &[x]) - x.sin()).abs() < 1e-4);
        // Periodic wrap.
        assert!((interpolate(&g, &s, &[x + 6.0]) - interpolate(&g, &s, &[x])).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_product() {
        let g = PeriodicGrid::new(2, 32, 3.0).unwrap();
        let s: Vec<f64> = (0..g.len())
            .map(|j| {
                let p = g.point(j);
                (p[0] * 0.5).cos() * (p[1] * 0.5).sin()
            })
            .collect();
        let x = [0.37_f64, -1.2];
        let exact = (x[0] * 0.5).cos() * (x[1] * 0.5).sin();
        assert!((interpolate(&g, &s, &x) - exact).abs() < 1e-4);
    }
}
