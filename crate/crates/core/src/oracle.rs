//! Crank–Nicolson finite differences for one-dimensional periodic backward
//! equations
//!
//! `u_t + ½u_xx + b u_x − κu + f(t, x, u, u_x) + s(t, x) = 0`, `u(T) = Φ`,
//!
//! with second-order central differences. The drift is treated classically, so
//! this is only meaningful for smooth `b`; it serves as an independent check of
//! the spectral solvers.

use crate::error::{Error, Result};
use crate::pde::Driver;

/// Inputs on a uniform periodic grid of `n` points over `[-L, L)`.
pub struct FdProblem<'a> {
    pub n: usize,
    pub half_width: f64,
    /// Output knots `t_0 < … < t_K = T`.
    pub knots: &'a [f64],
    /// Drift samples: one array, or one per knot (held on `[t_k, t_{k+1})`).
    pub drift: Vec<Vec<f64>>,
    pub kappa: f64,
    pub driver: Option<&'a dyn Driver>,
    /// Extra source samples per knot, linearly interpolated in time.
    pub source: Option<Vec<Vec<f64>>>,
    pub terminal: Vec<f64>,
    /// Crank–Nicolson steps per knot interval.
    pub substeps: usize,
}

/// Solves the cyclic tridiagonal system with constant-per-row bands
/// `lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]` (indices mod n).
pub fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Sherman–Morrison: A = T + u vᵀ with corner terms moved into u, v.
    let gamma = -diag[0];
    let alpha = upper[n - 1];
    let beta = lower[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = thomas(lower, &d, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(lower, &d, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(a, b)| a - fact * b).collect()
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    x[0] = rhs[0] / bet;
    for j in 1..n {
        c[j] = upper[j - 1] / bet;
        bet = diag[j] - lower[j] * c[j];
        x[j] = (rhs[j] - lower[j] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        x[j] -= c[j + 1] * x[j + 1];
    }
    x
}

/// Central difference `(u_{j+1} - u_{j-1}) / 2h`.
pub fn central_difference(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|j| (u[(j + 1) % n] - u[(j + n - 1) % n]) / (2.0 * h)).collect()
}

/// Samples at every knot, index-aligned with `problem.knots`.
pub fn solve_backward_fd(problem: &FdProblem<'_>) -> Result<Vec<Vec<f64>>> {
    let n = problem.n;
    let knots = problem.knots;
    if n < 4 || problem.terminal.len() != n || knots.is_empty() || problem.substeps == 0 {
        return Err(Error::InvalidArgument("finite-difference problem is malformed".into()));
    }
    if problem.drift.is_empty() || problem.drift.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidArgument("drift samples must have n points".into()));
    }
    let h = 2.0 * problem.half_width / n as f64;
    let xs: Vec<f64> = (0..n).map(|j| -problem.half_width + j as f64 * h).collect();
    let kk = knots.len();
    let mut out = vec![Vec::new(); kk];
    out[kk - 1] = problem.terminal.clone();
    let mut u = problem.terminal.clone();

    let eval_f = |t: f64, u: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        if let Some(drv) = problem.driver {
            let ux = central_difference(u, h);
            let mut o = [0.0];
            for j in 0..n {
                drv.evaluate(t, &xs[j..j + 1], &u[j..j + 1], &ux[j..j + 1], &mut o);
                f[j] = o[0];
            }
        }
        f
    };
    let source_at = |k: usize, theta: f64| -> Vec<f64> {
        match &problem.source {
            None => vec![0.0; n],
            Some(s) => s[k].iter().zip(&s[k + 1]).map(|(a, b)| a + theta * (b - a)).collect(),
        }
    };

    for k in (0..kk - 1).rev() {
        let b = &problem.drift[k.min(problem.drift.len() - 1)];
        let diff = 0.5 / (h * h);
        let lower: Vec<f64> = b.iter().map(|bj| diff - bj / (2.0 * h)).collect();
        let upper: Vec<f64> = b.iter().map(|bj| diff + bj / (2.0 * h)).collect();
        let center = -2.0 * diff - problem.kappa;
        let dt = (knots[k + 1] - knots[k]) / problem.substeps as f64;
        let lhs_lower: Vec<f64> = lower.iter().map(|l| -0.5 * dt * l).collect();
        let lhs_upper: Vec<f64> = upper.iter().map(|l| -0.5 * dt * l).collect();
        let lhs_diag = vec![1.0 - 0.5 * dt * center; n];
        for sub in (0..problem.substeps).rev() {
            let t_old = knots[k] + (sub + 1) as f64 * dt;
            let t_new = knots[k] + sub as f64 * dt;
            let f_old = eval_f(t_old, &u);
            let s_old = source_at(k, (sub + 1) as f64 / problem.substeps as f64);
            let s_new = source_at(k, sub as f64 / problem.substeps as f64);
            let explicit: Vec<f64> = (0..n)
                .map(|j| {
                    let au = lower[j] * u[(j + n - 1) % n] + center * u[j] + upper[j] * u[(j + 1) % n];
                    u[j] + 0.5 * dt * (au + f_old[j] + s_old[j] + s_new[j])
                })
                .collect();
            let mut next = u.clone();
            for _ in 0..100 {
                let f_new = eval_f(t_new, &next);
                let rhs: Vec<f64> = explicit.iter().zip(&f_new).map(|(e, f)| e + 0.5 * dt * f).collect();
                let cand = solve_cyclic_tridiagonal(&lhs_lower, &lhs_diag, &lhs_upper, &rhs);
                let change = cand.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                next = cand;
                if problem.driver.is_none() || change < 1e-15 {
                    break;
                }
            }
            u = next;
        }
        out[k] = u.clone();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solver_inverts_a_periodic_laplacian_shift() {
        let n = 9;
        let lower = vec![-1.0; n];
        let upper = vec![-0.5; n];
        let diag = vec![4.0; n];
        let x: Vec<f64> = (0..n).map(|j| (j as f64).sin()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|j| lower[j] * x[(j + n - 1) % n] + diag[j] * x[j] + upper[j] * x[(j + 1) % n])
            .collect();
        let got = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs);
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_decay_of_a_single_mode() {
        let n = 256;
        let l = std::f64::consts::PI;
        let h = 2.0 * l / n as f64;
        let knots = [0.0, 0.25, 0.5];
        let terminal: Vec<f64> = (0..n).map(|j| (-l + j as f64 * h).cos()).collect();
        let p = FdProblem {
            n,
            half_width: l,
            knots: &knots,
            drift: vec![vec![0.0; n]],
            kappa: 0.0,
            driver: None,
            source: None,
            terminal: terminal.clone(),
            substeps: 20,
        };
        let out = solve_backward_fd(&p).unwrap();
        let decay = (-0.25f64).exp();
        for j in 0..n {
            assert!((out[0][j] - decay * terminal[j]).abs() < 1e-4);
        }
    }
}
