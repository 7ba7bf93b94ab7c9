use std::f64::consts::PI;

use fbsde_lab::checks::random_field;
use fbsde_lab::field::{to_physical, to_spectral};
use fbsde_lab::sobolev::{
    bessel_power, gradient, heat_semigroup, lp_norm_samples, sobolev_norm, spatial_holder_seminorm, sup_norm,
    sup_norm_and_holder,
};
use fbsde_lab::stats::fit_bound;
use fbsde_lab::{PeriodicGrid, SpectralField};
use proptest::prelude::*;

const L: f64 = 2.0 * PI;

fn grid1(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(1, n, L).unwrap()
}

fn relative(a: &SpectralField, b: &SpectralField) -> f64 {
    a.max_coefficient_distance(b) / b.coefficient_norm()
}

fn gaussian(g: &PeriodicGrid, var: f64) -> SpectralField {
    SpectralField::from_fn(g, 1, |x, _| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / (2.0 * var)).exp() / (2.0 * PI * var).powf(x.len() as f64 / 2.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in 0u64..1000, dim in 1usize..=2, order in -1.0f64..1.0) {
        let g = PeriodicGrid::new(dim, if dim == 1 { 256 } else { 32 }, L).unwrap();
        let f = random_field(&g, dim, order, g.n() / 2, seed).unwrap();
        let samples = to_physical(&f);
        let back = to_physical(&to_spectral(&g, &samples).unwrap());
        let scale = samples.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = samples.iter().flatten().zip(back.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err <= 1e-12 * scale, "{err}");
    }

    #[test]
    fn bessel_isomorphism(seed in 0u64..1000, s in -2.0f64..2.0) {
        let g = grid1(256);
        let f = random_field(&g, 1, 0.0, 100, seed).unwrap();
        let back = bessel_power(&bessel_power(&f, s), -s);
        prop_assert!(relative(&back, &f) <= 1e-12);
        let direct = sobolev_norm(&f, s, 2.5).unwrap();
        let via = sobolev_norm(&bessel_power(&f, s), 0.0, 2.5).unwrap();
        prop_assert_eq!(direct, via);
    }

    #[test]
    fn semigroup_law(seed in 0u64..1000, t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let g = grid1(256);
        let f = random_field(&g, 1, 0.0, 120, seed).unwrap();
        let two = heat_semigroup(&heat_semigroup(&f, t).unwrap(), s).unwrap();
        let one = heat_semigroup(&f, t + s).unwrap();
        let gap = sobolev_norm(&two.axpy(-1.0, &one).unwrap(), 0.0, 2.0).unwrap();
        prop_assert!(gap <= 1e-12 * sobolev_norm(&f, 0.0, 2.0).unwrap());
    }

    #[test]
    fn norm_homogeneity_and_triangle(seed in 0u64..1000, s in -1.0f64..2.0, p in 1.1f64..6.0, c in -5.0f64..5.0) {
        let g = grid1(128);
        let a = random_field(&g, 1, 0.5, 40, seed).unwrap();
        let b = random_field(&g, 1, 0.5, 40, seed + 10_000).unwrap();
        let na = sobolev_norm(&a, s, p).unwrap();
        let scaled = sobolev_norm(&a.scale(c), s, p).unwrap();
        prop_assert!((scaled - c.abs() * na).abs() <= 1e-12 * (1.0 + c.abs() * na));
        let sum = sobolev_norm(&a.axpy(1.0, &b).unwrap(), s, p).unwrap();
        prop_assert!(sum <= na + sobolev_norm(&b, s, p).unwrap() + 1e-12);
    }
}

#[test]
fn l2_norm_matches_parseval() {
    let g = grid1(256);
    let f = random_field(&g, 1, 0.0, 100, 5).unwrap();
    let parseval = (g.volume() * f.component(0).iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    let norm = sobolev_norm(&f, 0.0, 2.0).unwrap();
    assert!((norm - parseval).abs() <= 1e-10 * parseval);
}

#[test]
fn single_mode_h1_norm_against_dense_quadrature() {
    // A^{1/2} sin(ξx) = (1 + ξ²/2)^{1/2} sin(ξx); integrate it on a much finer grid.
    let g = grid1(64);
    let xi = PI / L;
    let f = SpectralField::from_fn(&g, 1, |x, _| (xi * x[0]).sin());
    let got = sobolev_norm(&f, 1.0, 2.0).unwrap();
    let m = 20_000;
    let h = 2.0 * L / m as f64;
    let dense: Vec<f64> = (0..m)
        .map(|j| (1.0 + xi * xi / 2.0).sqrt() * (xi * (-L + j as f64 * h)).sin())
        .collect();
    let oracle = lp_norm_samples(&dense, h, 2.0);
    assert!((got - oracle).abs() <= 1e-10 * oracle, "{got} vs {oracle}");
}

#[test]
fn heat_flow_of_gaussian_widens_its_variance() {
    let g = grid1(512);
    let (var, t) = (0.25, 0.5);
    let out = heat_semigroup(&gaussian(&g, var), t).unwrap().to_physical();
    let exact = gaussian(&g, var + t).to_physical();
    for j in 0..g.len() {
        if g.point(j)[0].abs() < L / 2.0 {
            assert!((out[0][j] - exact[0][j]).abs() <= 1e-10, "x = {}", g.point(j)[0]);
        }
    }
}

#[test]
fn gradient_matches_refined_finite_differences() {
    // Centered differences of the band-limited field converge at second order.
    let coarse = grid1(256);
    let f = random_field(&coarse, 1, 1.0, 8, 11).unwrap();
    let coeffs = f.component(0).to_vec();
    let exact = to_physical(&gradient(&f))[0].clone();
    let mut errors = Vec::new();
    for factor in [1usize, 2, 4] {
        // The same trigonometric polynomial; grid index j sits at x = -L + jh.
        let m = coarse.n() * factor;
        let h = 2.0 * L / m as f64;
        let eval = |x: f64| -> f64 {
            (0..coarse.len())
                .map(|k| {
                    let w = coarse.wavenumber(k)[0];
                    (coeffs[k] * num_complex::Complex64::from_polar(1.0, w * (x + L))).re
                })
                .sum()
        };
        let err = (0..coarse.n())
            .step_by(8)
            .map(|j| {
                let x = coarse.point(j)[0];
                let fd = (eval(x + h) - eval(x - h)) / (2.0 * h);
                (fd - exact[j]).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.1, "rate {rate} from {errors:?}");
    }
}

#[test]
fn sup_and_holder_of_simple_sequences() {
    let g = grid1(64);
    let c = SpectralField::from_fn(&g, 1, |_, _| -1.5);
    let (sup, q) = sup_norm_and_holder(&[c.clone(), c.clone(), c], &[0.0, 0.3, 1.0], 0.4).unwrap();
    assert!((sup - 1.5).abs() < 1e-14 && q < 1e-14);

    let base = SpectralField::from_fn(&g, 1, |x, _| x[0].sin() + 0.5);
    let times = [0.0, 0.25, 0.5, 1.0];
    let fields: Vec<SpectralField> = times.iter().map(|&t| base.scale(t)).collect();
    let (_, q) = sup_norm_and_holder(&fields, &times, 1.0).unwrap();
    assert!((q - sup_norm(&base)).abs() < 1e-12);
}

#[test]
fn heat_flow_holder_quotient_is_stable_under_refinement() {
    let g = grid1(256);
    let phi = gaussian(&g, 0.5);
    let quotient = |k: usize| {
        let times: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        let fields: Vec<SpectralField> = times.iter().map(|&t| heat_semigroup(&phi, t).unwrap()).collect();
        sup_norm_and_holder(&fields, &times, 0.1).unwrap().1
    };
    let (a, b) = (quotient(16), quotient(64));
    assert!(a.is_finite() && (a - b).abs() <= 0.05 * a, "{a} vs {b}");
}

#[test]
fn morrey_bound_holds_with_one_constant() {
    // sup|h| + sup|∇h| + [∇h]_α ≤ C ‖h‖_{H^{1+δ}_p} with α = δ - d/p.
    let (delta, p) = (0.5, 2.5);
    let alpha = delta - 1.0 / p;
    let g = grid1(256);
    let ratios: Vec<f64> = (0..100)
        .map(|i| {
            let h = random_field(&g, 1, 1.0 + delta + 0.1 * (i % 5) as f64, 20 + i % 60, 500 + i as u64).unwrap();
            let grad = gradient(&h);
            let lhs = sup_norm(&h) + sup_norm(&grad) + spatial_holder_seminorm(&grad, alpha);
            lhs / sobolev_norm(&h, 1.0 + delta, p).unwrap()
        })
        .collect();
    let bound = fit_bound(&ratios, 2.0);
    assert!(bound.passed, "{bound:?}");
}
