use std::sync::Arc;

use fbsde_lab::oracle::{central_difference, solve_backward_fd, FdProblem};
use fbsde_lab::pde::{
    choose_lambda, holder_time_bound_check, solve_aux_w, solve_aux_xi, solve_semilinear, DriftPath, Driver, DriverSpec,
    FixedPointConfig, MildSolution, Offset, TerminalSpec,
};
use fbsde_lab::sobolev::heat_semigroup;
use fbsde_lab::{Error, SolverParams, SpectralField};

fn params(n: usize, k: usize) -> SolverParams {
    SolverParams {
        grid_points: n,
        steps: k,
        ..SolverParams::example_1d()
    }
}

fn smooth_drift(p: &SolverParams, scale: f64) -> DriftPath {
    let g = p.grid().unwrap();
    DriftPath::Static(SpectralField::from_fn(&g, 1, |x, _| {
        scale * (0.5 * x[0].sin() + 0.3 * (2.0 * x[0]).cos())
    }))
}

fn gaussian() -> TerminalSpec {
    TerminalSpec::Gaussian {
        amplitude: 1.0,
        width: 1.0,
        center: vec![0.3],
    }
}

fn sinusoidal_driver() -> DriverSpec {
    DriverSpec::Sinusoidal {
        coefficient: 0.5,
        slope: 0.0,
        offset: Offset {
            amplitude: 0.2,
            width: 1.0,
            center: vec![-0.5],
        },
    }
}

fn relative_sup_error(spec: &MildSolution, fd: &[Vec<f64>]) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, row) in fd.iter().enumerate() {
        let s = &spec.value_samples(k)[0];
        for (a, b) in s.iter().zip(row) {
            err = err.max((a - b).abs());
            scale = scale.max(b.abs());
        }
    }
    err / scale
}

fn samples(f: &SpectralField) -> Vec<f64> {
    f.to_physical().swap_remove(0)
}

#[test]
fn zero_drift_and_driver_is_heat_flow() {
    let p = params(128, 32);
    let g = p.grid().unwrap();
    let phi = gaussian().realize(&g).unwrap();
    let u = solve_semilinear(&DriftPath::zero(&g), &DriverSpec::Zero, &phi, &p, &FixedPointConfig::default()).unwrap();
    for (k, &t) in u.times().iter().enumerate() {
        let expect = heat_semigroup(&phi, p.horizon - t).unwrap();
        assert!(u.value(k).max_coefficient_distance(&expect) < 1e-10);
    }
    assert_eq!(u.value(p.steps).max_coefficient_distance(&phi), 0.0);
}

#[test]
fn linear_driver_with_constant_terminal_solves_scalar_ode() {
    let c = 0.8;
    let y0 = 1.5;
    let mut errs = Vec::new();
    for k in [16, 32] {
        let p = params(16, k);
        let g = p.grid().unwrap();
        let phi = SpectralField::from_fn(&g, 1, |_, _| y0);
        let f = DriverSpec::Linear {
            coefficient: c,
            slope: 0.0,
            offset: Offset::default(),
        };
        let u = solve_semilinear(&DriftPath::zero(&g), &f, &phi, &p, &FixedPointConfig::default()).unwrap();
        let got = u.value(0).component(0)[0].re;
        errs.push((got - y0 * (c * p.horizon).exp()).abs());
    }
    assert!(errs[0] < 1e-3, "{errs:?}");
    assert!(errs[1] < errs[0] / 1.9, "{errs:?}");
}

#[test]
fn smooth_drift_matches_finite_differences() {
    let p = params(512, 256);
    let g = p.grid().unwrap();
    let drift = smooth_drift(&p, 1.0);
    let phi = gaussian().realize(&g).unwrap();
    let f = sinusoidal_driver();
    let u = solve_semilinear(&drift, &f, &phi, &p, &FixedPointConfig::default()).unwrap();
    assert!(u.report().converged);
    assert!(u.report().contraction_ratio < 1.0);
    let knots = p.knots();
    let fd = solve_backward_fd(&FdProblem {
        n: 512,
        half_width: p.half_width,
        knots: &knots,
        drift: vec![samples(drift.at(0))],
        kappa: 0.0,
        driver: Some(&f),
        source: None,
        terminal: samples(&phi),
        substeps: 2,
    })
    .unwrap();
    let err = relative_sup_error(&u, &fd);
    assert!(err <= 1e-3, "relative sup error {err}");
}

#[test]
fn solution_is_real_and_terminal_exact() {
    let p = params(64, 16);
    let g = p.grid().unwrap();
    let phi = gaussian().realize(&g).unwrap();
    let u = solve_semilinear(&smooth_drift(&p, 1.0), &sinusoidal_driver(), &phi, &p, &FixedPointConfig::default()).unwrap();
    assert_eq!(u.value(p.steps).max_coefficient_distance(&phi), 0.0);
    for k in 0..=p.steps {
        assert!(u.value(k).hermitian_defect() < 1e-12);
    }
}

#[test]
fn degenerate_horizon_returns_terminal() {
    let mut p = params(32, 4);
    p.horizon = 0.0;
    let g = p.grid().unwrap();
    let phi = gaussian().realize(&g).unwrap();
    let u = solve_semilinear(&smooth_drift(&p, 1.0), &sinusoidal_driver(), &phi, &p, &FixedPointConfig::default()).unwrap();
    assert_eq!(u.times(), &[0.0]);
    assert_eq!(u.value(0).max_coefficient_distance(&phi), 0.0);
}

#[derive(Debug)]
struct Stiff;

impl Driver for Stiff {
    fn evaluate(&self, _t: f64, _x: &[f64], y: &[f64], _z: &[f64], out: &mut [f64]) {
        out[0] = 60.0 * y[0];
    }
    fn lipschitz(&self) -> f64 {
        60.0
    }
}

#[test]
fn growing_increments_are_reported_as_non_contraction() {
    let p = params(16, 32);
    let g = p.grid().unwrap();
    let phi = SpectralField::from_fn(&g, 1, |_, _| 1.0);
    let f = DriverSpec::Custom(Arc::new(Stiff));
    let err = solve_semilinear(&DriftPath::zero(&g), &f, &phi, &p, &FixedPointConfig::default()).unwrap_err();
    match err {
        Error::NonContraction { ratio, .. } => assert!(ratio > 1.0, "{ratio}"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn invalid_parameters_are_gated() {
    let mut p = params(32, 4);
    p.delta = 0.2;
    let g = p.grid().unwrap();
    let phi = gaussian().realize(&g).unwrap();
    let err = solve_semilinear(&DriftPath::zero(&g), &DriverSpec::Zero, &phi, &p, &FixedPointConfig::default()).unwrap_err();
    assert!(err.to_string().contains("δ ≤ β"));
}

#[test]
fn per_knot_drift_length_is_checked() {
    let p = params(32, 4);
    let g = p.grid().unwrap();
    let drift = DriftPath::PerKnot(vec![SpectralField::zeros(&g, 1); 3]);
    let phi = gaussian().realize(&g).unwrap();
    let err = solve_semilinear(&drift, &DriverSpec::Zero, &phi, &p, &FixedPointConfig::default()).unwrap_err();
    assert!(matches!(err, Error::KnotMismatch(_)));
}

fn base_u(p: &SolverParams) -> MildSolution {
    let g = p.grid().unwrap();
    let phi = gaussian().realize(&g).unwrap();
    solve_semilinear(&smooth_drift(p, 1.0), &sinusoidal_driver(), &phi, p, &FixedPointConfig::default()).unwrap()
}

#[test]
fn w_vanishes_for_zero_drift_and_is_linear() {
    let p = params(128, 32);
    let g = p.grid().unwrap();
    let u = base_u(&p);
    let cfg = FixedPointConfig::default();
    let w0 = solve_aux_w(&DriftPath::zero(&g), &u, &p, &cfg).unwrap();
    assert!(w0.values().iter().all(|w| w.coefficient_norm() == 0.0));
    let w1 = solve_aux_w(&smooth_drift(&p, 1.0), &u, &p, &cfg).unwrap();
    let w2 = solve_aux_w(&smooth_drift(&p, 2.0), &u, &p, &cfg).unwrap();
    for k in 0..=p.steps {
        assert!(w2.value(k).max_coefficient_distance(&w1.value(k).scale(2.0)) < 1e-12);
    }
    assert_eq!(w1.value(p.steps).coefficient_norm(), 0.0);
}

#[test]
fn w_matches_finite_differences() {
    let p = params(512, 256);
    let u = base_u(&p);
    let drift = smooth_drift(&p, 1.0);
    let w = solve_aux_w(&drift, &u, &p, &FixedPointConfig::default()).unwrap();
    let knots = p.knots();
    let b = samples(drift.at(0));
    let h = p.grid().unwrap().spacing();
    // Source of the heat equation is -b u_x with u_x by central differences.
    let source: Vec<Vec<f64>> = (0..knots.len())
        .map(|k| {
            let ux = central_difference(&u.value_samples(k)[0], h);
            ux.iter().zip(&b).map(|(a, c)| -a * c).collect()
        })
        .collect();
    let fd = solve_backward_fd(&FdProblem {
        n: 512,
        half_width: p.half_width,
        knots: &knots,
        drift: vec![vec![0.0; 512]],
        kappa: 0.0,
        driver: None,
        source: Some(source),
        terminal: vec![0.0; 512],
        substeps: 2,
    })
    .unwrap();
    let err = relative_sup_error(&w, &fd);
    assert!(err <= 1e-3, "relative sup error {err}");
}

fn forward_params(n: usize, k: usize) -> SolverParams {
    let mut p = params(n, k);
    p.q_tilde = Some(p.required_q_tilde());
    p
}

#[test]
fn xi_requires_the_extra_integrability_condition() {
    let p = params(32, 8);
    let err = solve_aux_xi(&smooth_drift(&p, 1.0), 1.0, &p, &FixedPointConfig::default()).unwrap_err();
    assert!(err.to_string().contains("extra L^q-condition"));
}

#[test]
fn xi_vanishes_for_zero_drift_and_damps_with_lambda() {
    let p = forward_params(128, 32);
    let g = p.grid().unwrap();
    let cfg = FixedPointConfig::default();
    let xi0 = solve_aux_xi(&DriftPath::zero(&g), 1.0, &p, &cfg).unwrap();
    assert_eq!(xi0.sup_gradient(), 0.0);
    let drift = smooth_drift(&p, 1.0);
    let sups: Vec<f64> = [0.0, 10.0, 100.0]
        .iter()
        .map(|&l| solve_aux_xi(&drift, l, &p, &cfg).unwrap().sup_gradient())
        .collect();
    assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
}

#[test]
fn xi_matches_finite_differences() {
    let p = forward_params(512, 256);
    let drift = smooth_drift(&p, 1.0);
    let lambda = 2.0;
    let xi = solve_aux_xi(&drift, lambda, &p, &FixedPointConfig::default()).unwrap();
    let knots = p.knots();
    let b = samples(drift.at(0));
    let fd = solve_backward_fd(&FdProblem {
        n: 512,
        half_width: p.half_width,
        knots: &knots,
        drift: vec![b.clone()],
        kappa: lambda + 1.0,
        driver: None,
        source: Some(vec![b; knots.len()]),
        terminal: vec![0.0; 512],
        substeps: 2,
    })
    .unwrap();
    let err = relative_sup_error(&xi, &fd);
    assert!(err <= 1e-3, "relative sup error {err}");
}

#[test]
fn lambda_search() {
    let p = forward_params(128, 32);
    let g = p.grid().unwrap();
    let cfg = FixedPointConfig::default();
    let (l0, xi0) = choose_lambda(&DriftPath::zero(&g), &p, &cfg).unwrap();
    assert_eq!(l0, 1.0);
    assert_eq!(xi0.sup_gradient(), 0.0);

    let small = smooth_drift(&p, 0.2);
    let (l1, xi1) = choose_lambda(&small, &p, &cfg).unwrap();
    assert_eq!(l1, 1.0);
    assert!(xi1.sup_gradient() <= 0.5);

    let big = smooth_drift(&p, 2.0);
    let (l2, xi2) = choose_lambda(&big, &p, &cfg).unwrap();
    assert!(xi2.sup_gradient() <= 0.5);
    let (l3, _) = choose_lambda(&big.scale(10.0), &p, &cfg).unwrap();
    assert!(l3 >= l2, "{l3} < {l2}");
}

#[test]
fn lambda_damping_along_doubling_schedule() {
    let p = forward_params(128, 32);
    let drift = smooth_drift(&p, 2.0);
    let cfg = FixedPointConfig::default();
    let sups: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&l| solve_aux_xi(&drift, l, &p, &cfg).unwrap().sup_gradient())
        .collect();
    for w in sups.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "{sups:?}");
    }
}

#[test]
fn holder_time_bound() {
    let p = params(128, 32);
    let g = p.grid().unwrap();
    let cfg = FixedPointConfig::default();
    let (gamma, eps) = (0.05, 0.1);

    let constant = SpectralField::from_fn(&g, 1, |_, _| 2.0);
    let u = solve_semilinear(&DriftPath::zero(&g), &DriverSpec::Zero, &constant, &p, &cfg).unwrap();
    assert_eq!(holder_time_bound_check(&u, &p, gamma, eps).unwrap().constant, 0.0);

    let phi = gaussian().realize(&g).unwrap();
    let c: Vec<f64> = [32, 64]
        .iter()
        .map(|&k| {
            let pk = p.with_steps(k);
            let u = solve_semilinear(&DriftPath::zero(&g), &DriverSpec::Zero, &phi, &pk, &cfg).unwrap();
            holder_time_bound_check(&u, &pk, gamma, eps).unwrap().constant
        })
        .collect();
    assert!(c[0].is_finite() && c[0] > 0.0);
    assert!((c[1] / c[0] - 1.0).abs() < 0.25, "{c:?}");

    assert!(holder_time_bound_check(&u, &p, 0.2, 0.1).is_err());
}
