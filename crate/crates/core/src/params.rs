//! Solver parameters and the admissibility gate on `(β, q, δ, p, γ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

/// Regularity exponents, horizon, grid and time discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Spatial dimension `d`.
    pub dim: usize,
    /// Negative order of the drift, `b ∈ H^{-β}_q`.
    pub beta: f64,
    pub q: f64,
    /// Second integrability index `d/(1-β)`; required only by the forward-drift system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_tilde: Option<f64>,
    pub delta: f64,
    pub p: f64,
    pub gamma: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of uniform time steps `K`.
    pub steps: usize,
    /// Points per axis `N`.
    pub grid_points: usize,
    /// Torus half-width `L`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_half_width() -> f64 {
    2.0 * std::f64::consts::PI
}

impl SolverParams {
    /// A valid one-dimensional parameter set (`β = 1/4, q = 3, δ = 1/2, p = 5/2, γ = 1/10`).
    pub fn example_1d() -> Self {
        Self {
            dim: 1,
            beta: 0.25,
            q: 3.0,
            q_tilde: None,
            delta: 0.5,
            p: 2.5,
            gamma: 0.1,
            lambda: 0.0,
            horizon: 0.5,
            steps: 256,
            grid_points: 512,
            half_width: default_half_width(),
        }
    }

    /// Hölder exponent `α = δ - d/p` of the gradient.
    pub fn alpha(&self) -> f64 {
        self.delta - self.dim as f64 / self.p
    }

    /// `d / (1 - β)`.
    pub fn required_q_tilde(&self) -> f64 {
        self.dim as f64 / (1.0 - self.beta)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn knots(&self) -> Vec<f64> {
        uniform_knots(self.horizon, self.steps)
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.dim, self.grid_points, self.half_width)
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }

    /// Gate that must pass before any solve; returns the violations as an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_standing_assumptions(self);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::ParameterGate(report.to_string()))
        }
    }

    /// Gate for the forward-drift system: the drift must also live in `H^{-β}_{q̃}`.
    pub fn ensure_forward_gate(&self) -> Result<()> {
        match self.q_tilde {
            None => Err(Error::ParameterGate(format!(
                "extra L^q-condition: q_tilde = d/(1-β) = {:.6} must be declared",
                self.required_q_tilde()
            ))),
            Some(qt) if (qt - self.required_q_tilde()).abs() > 1e-9 * qt.abs().max(1.0) => {
                Err(Error::ParameterGate(format!(
                    "extra L^q-condition: q_tilde = {qt} differs from d/(1-β) = {:.6}",
                    self.required_q_tilde()
                )))
            }
            Some(_) => Ok(()),
        }
    }
}

/// `K + 1` uniform knots on `[0, T]`; a zero horizon gives the single knot `0`.
pub fn uniform_knots(horizon: f64, steps: usize) -> Vec<f64> {
    if horizon == 0.0 {
        return vec![0.0];
    }
    (0..=steps)
        .map(|k| {
            if k == steps {
                horizon
            } else {
                horizon * k as f64 / steps as f64
            }
        })
        .collect()
}

/// One violated inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Parameter that carries the violation.
    pub key: &'static str,
    pub message: String,
}

/// Outcome of [`validate_standing_assumptions`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.key, v.message))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Check `β ∈ (0, 1/2)`, `q ∈ (d/(1-β), d/β)`, `(δ, p) ∈ K(β, q)`, `2γ < 1-δ-β`,
/// and the discretization knobs.
pub fn validate_standing_assumptions(params: &SolverParams) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |key: &'static str, message: String| out.push(Violation { key, message });

    let numbers = [
        ("beta", params.beta),
        ("q", params.q),
        ("delta", params.delta),
        ("p", params.p),
        ("gamma", params.gamma),
        ("lambda", params.lambda),
        ("horizon", params.horizon),
        ("half_width", params.half_width),
    ];
    let mut finite = true;
    for (key, v) in numbers {
        if !v.is_finite() {
            push(key, format!("{key} = {v} is not finite"));
            finite = false;
        }
    }
    if !finite {
        return ValidationReport { violations: out };
    }

    let d = params.dim as f64;
    let (beta, q, delta, p, gamma) = (params.beta, params.q, params.delta, params.p, params.gamma);

    if !(params.dim == 1 || params.dim == 2) {
        push("dim", format!("d = {} ∉ {{1, 2}}", params.dim));
    }
    if beta <= 0.0 {
        push("beta", "β ≤ 0".into());
    }
    if beta >= 0.5 {
        push("beta", "β ≥ 1/2".into());
    }
    if beta > 0.0 && beta < 1.0 {
        let lo = d / (1.0 - beta);
        if q <= lo {
            push("q", format!("q ≤ d/(1−β) = {}", fmt_num(lo)));
        }
        let hi = d / beta;
        if q >= hi {
            push("q", format!("q ≥ d/β = {}", fmt_num(hi)));
        }
    }
    if delta <= beta {
        push("delta", "δ ≤ β".into());
    }
    if delta >= 1.0 - beta {
        push("delta", format!("δ ≥ 1−β = {}", fmt_num(1.0 - beta)));
    }
    if delta > 0.0 && p <= d / delta {
        push("p", format!("p ≤ d/δ = {}", fmt_num(d / delta)));
    }
    if p >= q {
        push("p", format!("p ≥ q = {}", fmt_num(q)));
    }
    if gamma <= 0.0 {
        push("gamma", "γ ≤ 0".into());
    }
    if 2.0 * gamma >= 1.0 - delta - beta {
        push("gamma", format!("2γ ≥ 1−δ−β = {}", fmt_num(1.0 - delta - beta)));
    }
    if params.lambda < 0.0 {
        push("lambda", "λ < 0".into());
    }
    if params.horizon < 0.0 {
        push("horizon", "T < 0".into());
    }
    if params.steps == 0 {
        push("steps", "K = 0".into());
    }
    if params.grid_points < 4 || !params.grid_points.is_power_of_two() {
        push("grid_points", format!("N = {} is not a power of two ≥ 4", params.grid_points));
    }
    if params.half_width <= 0.0 {
        push("half_width", "L ≤ 0".into());
    }
    if let Some(qt) = params.q_tilde {
        let want = d / (1.0 - beta);
        if !qt.is_finite() || (qt - want).abs() > 1e-9 * want.abs().max(1.0) {
            push("q_tilde", format!("q̃ = {qt} ≠ d/(1−β) = {}", fmt_num(want)));
        }
    }
    ValidationReport { violations: out }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(beta: f64, q: f64, delta: f64, p: f64, gamma: f64) -> SolverParams {
        SolverParams {
            beta,
            q,
            delta,
            p,
            gamma,
            ..SolverParams::example_1d()
        }
    }

    #[test]
    fn admissible_example_passes() {
        // q ∈ (4/3, 4), δ ∈ (1/4, 3/4), p ∈ (2, 3), 2γ = 0.2 < 0.25
        assert!(validate_standing_assumptions(&base(0.25, 3.0, 0.5, 2.5, 0.1)).is_ok());
    }

    #[test]
    fn delta_below_beta_is_named() {
        let r = validate_standing_assumptions(&base(0.25, 3.0, 0.2, 2.5, 0.1));
        assert!(r.mentions("δ ≤ β"), "{r}");
    }

    #[test]
    fn q_above_d_over_beta_is_named() {
        let r = validate_standing_assumptions(&base(0.4, 3.0, 0.5, 2.2, 0.01));
        assert!(r.mentions("q ≥ d/β = 2.5"), "{r}");
    }

    #[test]
    fn delta_above_one_minus_beta_is_named() {
        let r = validate_standing_assumptions(&base(0.25, 3.0, 0.8, 2.5, 0.01));
        assert!(r.mentions("δ ≥ 1−β = 0.75"), "{r}");
    }

    #[test]
    fn non_finite_values_are_reported() {
        let r = validate_standing_assumptions(&base(f64::NAN, 3.0, 0.5, 2.5, 0.1));
        assert!(!r.is_ok());
        assert_eq!(r.violations[0].key, "beta");
    }

    #[test]
    fn forward_gate_requires_q_tilde() {
        let mut p = SolverParams::example_1d();
        assert!(p.ensure_forward_gate().unwrap_err().to_string().contains("extra L^q-condition"));
        p.q_tilde = Some(p.required_q_tilde());
        assert!(p.ensure_forward_gate().is_ok());
        p.q_tilde = Some(2.0);
        assert!(!validate_standing_assumptions(&p).is_ok());
    }

    #[test]
    fn knots_end_exactly_at_horizon() {
        let k = uniform_knots(0.3, 7);
        assert_eq!(k.len(), 8);
        assert_eq!(k[0], 0.0);
        assert_eq!(k[7], 0.3);
    }
}
