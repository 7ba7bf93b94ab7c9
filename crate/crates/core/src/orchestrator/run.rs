//! Dispatch of a validated scenario to the solvers and checks.

use crate::checks::{fd_oracle_check, heat_flow_gap, mapping_property_check, paraproduct_bound_check, spectral_core_check};
use crate::error::{Error, Result};
use crate::fbsde::{
    bsde_residual, check_domain, bsde_residual_transformed, covariation_check, drift_samples,
    evaluate_bsde_pair, feynman_kac_check, interior_band, streamed_bsde_residual, zvonkin_transform, FkConfig, FkMode,
    ForwardModel, PathEnsemble, PathSpec, ZvonkinDirection,
};
use crate::field::SpectralField;
use crate::mollify::convergence_study;
use crate::params::SolverParams;
use crate::pde::{
    choose_lambda, holder_time_bound_check, solve_aux_w, solve_aux_xi, solve_semilinear, DriftPath, MildSolution,
    XI_GRADIENT_TARGET,
};
use crate::stats::{fit_bound, ks_critical_value, ks_statistic, loglog_slope, Moments};

use super::artifact::{RunArtifact, Table};
use super::scenario::{ExperimentKind, ForwardKind, Scenario};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Run independent ladder levels concurrently.
    pub parallel: bool,
    pub quiet: bool,
}

fn context<T>(op: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Context {
        context: op.into(),
        source: Box::new(e),
    })
}

struct Setup<'a> {
    scenario: &'a Scenario,
    opts: RunOptions,
    drift: DriftPath,
    phi: SpectralField,
}

impl<'a> Setup<'a> {
    fn new(scenario: &'a Scenario, opts: RunOptions) -> Result<Self> {
        let p = &scenario.params;
        let grid = p.grid()?;
        let drift = context(
            "mollify/realize drift",
            scenario.drift.realize_path(&grid, &p.knots(), &scenario.drift_profile),
        )?;
        let phi = context("pde-solver/realize terminal", scenario.terminal.realize(&grid))?;
        Ok(Self {
            scenario,
            opts,
            drift,
            phi,
        })
    }

    fn params(&self) -> &SolverParams {
        &self.scenario.params
    }

    fn seed(&self) -> u64 {
        self.scenario.experiment.seed
    }

    fn log(&self, msg: &str) {
        if !self.opts.quiet {
            eprintln!("[{}] {msg}", self.scenario.experiment.kind.as_str());
        }
    }

    /// Drift on the knots of `p` (time-dependent profiles are re-realized).
    fn drift_for(&self, p: &SolverParams) -> Result<DriftPath> {
        if p.steps == self.params().steps {
            return Ok(self.drift.clone());
        }
        let grid = p.grid()?;
        context(
            "mollify/realize drift",
            self.scenario.drift.realize_path(&grid, &p.knots(), &self.scenario.drift_profile),
        )
    }

    fn solve_u(&self, p: &SolverParams, drift: &DriftPath) -> Result<MildSolution> {
        self.log(&format!("solving for u with K = {}", p.steps));
        context(
            "pde-solver/solve_semilinear",
            solve_semilinear(drift, &self.scenario.driver, &self.phi, p, &self.scenario.solver),
        )
    }

    fn solve_w(&self, p: &SolverParams, drift: &DriftPath, u: &MildSolution) -> Result<Option<MildSolution>> {
        if drift.is_zero() {
            return Ok(None);
        }
        self.log("solving for w");
        context("pde-solver/solve_aux_w", solve_aux_w(drift, u, p, &self.scenario.solver)).map(Some)
    }

    fn solve_xi(&self, p: &SolverParams, drift: &DriftPath) -> Result<(f64, MildSolution)> {
        self.log("choosing λ and solving for ξ");
        context("pde-solver/choose_lambda", choose_lambda(drift, p, &self.scenario.solver))
    }

    fn path_knots(&self, u: &MildSolution) -> Vec<f64> {
        u.times()[self.scenario.monte_carlo.start_knot..].to_vec()
    }

    fn band(&self) -> f64 {
        interior_band(self.params().half_width, self.params().horizon)
    }
}

fn record_solution(art: &mut RunArtifact, name: &str, s: &MildSolution) {
    let r = s.report();
    art.metric(&format!("{name}.iterations"), r.iterations as f64);
    art.metric(&format!("{name}.contraction_ratio"), r.contraction_ratio);
    art.metric(&format!("{name}.sup"), s.sup_value());
    art.metric(&format!("{name}.sup_gradient"), s.sup_gradient());
    art.check(
        &format!("{name}.contraction"),
        r.contraction_ratio < 1.0,
        r.contraction_ratio,
        1.0,
        "fitted increment ratio after burn-in",
    );
    let mut t = Table::new(&format!("{name}_increments"), &["iteration", "increment", "weighted_increment"]);
    for (i, (a, b)) in r.increments.iter().zip(&r.weighted_increments).enumerate() {
        t.push(vec![(i + 1) as f64, *a, *b]);
    }
    art.tables.push(t);
}

/// Runs the scenario; it is validated again first.
pub fn run_experiment(scenario: &Scenario, opts: &RunOptions) -> Result<RunArtifact> {
    scenario.validate()?;
    let setup = Setup::new(scenario, *opts)?;
    let e = &scenario.experiment;
    let mut art = RunArtifact::new(scenario.hash(), e.kind.as_str(), &e.name, e.seed);
    match e.kind {
        ExperimentKind::SolvePde => solve_pde(&setup, &mut art)?,
        ExperimentKind::SolveAux => solve_aux(&setup, &mut art)?,
        ExperimentKind::Simulate4 => simulate4(&setup, &mut art)?,
        ExperimentKind::Simulate5 => simulate5(&setup, &mut art)?,
        ExperimentKind::VerifyFk => verify_fk(&setup, &mut art)?,
        ExperimentKind::ConvergenceStudy => study_convergence(&setup, &mut art)?,
        ExperimentKind::ResidualStudy => study_residual(&setup, &mut art)?,
    }
    Ok(art)
}

fn solve_pde(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let p = st.params();
    let checks = &sc.checks;
    let u = st.solve_u(p, &st.drift)?;
    record_solution(art, "u", &u);
    art.snapshot("u", &u);
    if checks.heat_flow && st.drift.is_zero() && crate::pde::Driver::is_zero(&sc.driver) {
        let gap = context("sobolev-core/heat_semigroup", heat_flow_gap(&u, &st.phi))?;
        art.check_at_most("heat_flow", gap, 1e-10, "max coefficient distance to P(T - t)Φ");
    }
    if checks.fd_oracle {
        st.log("running the finite-difference oracle");
        let r = context(
            "pde-solver/oracle",
            fd_oracle_check(&st.drift, &sc.driver, &st.phi, p, &sc.solver, checks.fd_substeps),
        )?;
        art.check_at_most("fd_oracle", r.relative_error, 1e-3, "relative sup error against Crank–Nicolson");
        art.check(
            "fd_oracle_halving",
            r.halving_reduces_gap(),
            r.relative_error,
            r.coarse_relative_error,
            "gap at K must be below the gap at K/2",
        );
    }
    let grid = p.grid()?;
    if checks.spectral_fields > 0 {
        let r = context("sobolev-core/spectral", spectral_core_check(&grid, checks.spectral_fields, st.seed()))?;
        art.metric("spectral.round_trip", r.round_trip);
        art.metric("spectral.isomorphism", r.isomorphism);
        art.metric("spectral.semigroup", r.semigroup);
        art.check_at_most("spectral_core", r.worst(), 1e-12, format!("{} random fields", r.fields));
    }
    if checks.mapping_inputs > 0 {
        let r = context(
            "sobolev-core/mapping",
            mapping_property_check(p, checks.mapping_inputs, checks.mapping_times, st.seed()),
        )?;
        let b = fit_bound(&r.ratios, checks.slack);
        art.metric("mapping.constant", b.constant);
        art.check(
            "mapping_property",
            b.passed,
            b.held_out_max,
            b.slack * b.constant,
            "held-out (small t) ratios against the constant fitted on large t",
        );
        let mut t = Table::new("mapping_ratios", &["time_index", "input", "ratio"]);
        for (i, r) in r.ratios.iter().enumerate() {
            t.push(vec![(i / checks.mapping_inputs + 1) as f64, (i % checks.mapping_inputs) as f64, *r]);
        }
        art.tables.push(t);
    }
    if checks.paraproduct_pairs > 0 {
        let r = context("paraproduct/bound", paraproduct_bound_check(p, checks.paraproduct_pairs, st.seed()))?;
        let b = fit_bound(&r.ratios, checks.slack);
        art.metric("paraproduct.constant", b.constant);
        art.check(
            "paraproduct_bound",
            b.passed,
            b.held_out_max,
            b.slack * b.constant,
            "held-out pairs against the constant fitted on the first half",
        );
        art.check_at_most("paraproduct_consistency", r.consistency, 1e-12, "band-limited product against exact convolution");
        let mut t = Table::new("paraproduct_ratios", &["pair", "ratio"]);
        for (i, r) in r.ratios.iter().enumerate() {
            t.push(vec![i as f64, *r]);
        }
        art.tables.push(t);
    }
    Ok(())
}

fn solve_aux(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let p = st.params();
    let u = st.solve_u(p, &st.drift)?;
    record_solution(art, "u", &u);
    art.snapshot("u", &u);
    let w = context("pde-solver/solve_aux_w", solve_aux_w(&st.drift, &u, p, &st.scenario.solver))?;
    art.metric("w.sup", w.sup_value());
    art.metric("w.sup_gradient", w.sup_gradient());
    art.snapshot("w", &w);
    if u.times().len() > 2 {
        let eps = (1.0 - p.delta - p.beta) / 2.0;
        let h = context(
            "pde-solver/holder_time_bound_check",
            holder_time_bound_check(&u, p, p.gamma, eps),
        )?;
        art.metric("u.holder_constant", h.constant);
        art.check("u.holder_finite", h.constant.is_finite(), h.constant, f64::INFINITY, "time-Hölder constant of u");
    }
    if p.q_tilde.is_some() {
        let (lambda, xi) = st.solve_xi(p, &st.drift)?;
        art.metric("lambda", lambda);
        record_solution(art, "xi", &xi);
        art.check_at_most("xi.gradient", xi.sup_gradient(), XI_GRADIENT_TARGET, "sup|∇ξ| at the chosen λ");
        art.snapshot("xi", &xi);
    }
    Ok(())
}

/// Sample moments of `X_T - x` over all paths, simulated in blocks.
fn terminal_moments(st: &Setup, spec: &PathSpec, paths: usize) -> Result<(Vec<Moments>, usize)> {
    let d = spec.dim();
    let block = st.scenario.monte_carlo.block;
    let mut m = vec![Moments::default(); d];
    let mut flagged = 0;
    let mut first = 0;
    let last = spec.knots.len() - 1;
    while first < paths {
        let count = block.min(paths - first);
        let e = context("fbsde-sim/simulate", spec.simulate_block(first, count))?;
        for p in &e.paths {
            flagged += usize::from(p.flagged);
            for (i, mi) in m.iter_mut().enumerate() {
                mi.push(p.x[last * d + i] - spec.start[i]);
            }
        }
        first += count;
    }
    context("fbsde-sim/domain", check_domain(flagged, paths))?;
    Ok((m, flagged))
}

fn path_table(name: &str, e: &PathEnsemble, count: usize) -> Table {
    let d = e.dim;
    let mut t = Table::new(name, &["path", "t", "w", "x", "y", "z"]);
    for (i, p) in e.paths.iter().take(count).enumerate() {
        let dz = p.z.len() / e.knots.len().max(1);
        let dy = p.y.len() / e.knots.len().max(1);
        for (k, &time) in e.knots.iter().enumerate() {
            let y = if dy > 0 { p.y[k * dy] } else { f64::NAN };
            let z = if dz > 0 { p.z[k * dz] } else { f64::NAN };
            t.push(vec![i as f64, time, p.w[k * d], p.x[k * d], y, z]);
        }
    }
    t
}

fn simulate4(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let p = st.params();
    let mc = &sc.monte_carlo;
    let u = st.solve_u(p, &st.drift)?;
    record_solution(art, "u", &u);
    let w = st.solve_w(p, &st.drift, &u)?;
    let knots = st.path_knots(&u);
    let start = sc.start();
    let spec = PathSpec {
        model: ForwardModel::Brownian,
        knots: &knots,
        start: &start,
        seed: st.seed(),
        band: st.band(),
    };
    st.log(&format!("simulating {} Brownian paths", mc.paths));
    let (m, flagged) = terminal_moments(st, &spec, mc.paths)?;
    let elapsed = knots[knots.len() - 1] - knots[0];
    art.metric("flagged_fraction", flagged as f64 / mc.paths as f64);
    for (i, mi) in m.iter().enumerate() {
        let se = (elapsed / mc.paths as f64).sqrt();
        let z = if se > 0.0 { mi.mean.abs() / se } else { 0.0 };
        art.check_at_most(&format!("brownian_mean_{i}"), z, 4.0, "|mean(X_T - x)| in standard errors");
        let rel = if elapsed > 0.0 { (mi.variance() / elapsed - 1.0).abs() } else { mi.variance() };
        art.check_at_most(&format!("brownian_variance_{i}"), rel, 0.05, "relative variance error against T - t");
    }

    st.log("backward residual");
    let r = context(
        "fbsde-sim/bsde_residual",
        streamed_bsde_residual(&spec, mc.paths, mc.block, &u, &sc.driver, &st.phi, w.as_ref()),
    )?;
    art.metric("residual.mean", r.mean_residual);
    art.metric("residual.max", r.max_residual);
    let mut t = Table::new("residual_per_knot", &["t", "mean", "worst"]);
    for (k, &time) in knots.iter().enumerate() {
        t.push(vec![time, r.per_knot_mean[k], r.per_knot_worst[k]]);
    }
    art.tables.push(t);

    let small = mc.ensemble_paths.min(mc.paths);
    let mut e = context("fbsde-sim/simulate_brownian", spec.simulate_block(0, small))?;
    context("fbsde-sim/evaluate_bsde_pair", evaluate_bsde_pair(&u, &mut e))?;
    art.tables.push(path_table("paths", &e, mc.export_paths));

    if sc.checks.zvonkin {
        let zero;
        let wref = match &w {
            Some(w) => w,
            None => {
                let g = u.grid();
                let values = u.times().iter().map(|_| SpectralField::zeros(g, u.num_components())).collect();
                zero = MildSolution::from_values(u.times().to_vec(), values, crate::pde::SolveReport::direct())?;
                &zero
            }
        };
        let fwd = context("fbsde-sim/zvonkin_transform", zvonkin_transform(&e, wref, ZvonkinDirection::Forward))?;
        let back = context("fbsde-sim/zvonkin_transform", zvonkin_transform(&fwd, wref, ZvonkinDirection::Inverse))?;
        let mut worst: f64 = 0.0;
        for (a, b) in e.paths.iter().zip(&back.paths) {
            for (x, y) in a.y.iter().chain(&a.z).zip(b.y.iter().chain(&b.z)) {
                worst = worst.max((x - y).abs());
            }
        }
        art.check_at_most("zvonkin_involution", worst, 1e-12, "inverse(forward(Y, Z)) against (Y, Z)");
        let r0 = context("fbsde-sim/bsde_residual", bsde_residual(&e, &sc.driver, &st.phi, Some(wref)))?;
        let r1 = context(
            "fbsde-sim/bsde_residual",
            bsde_residual_transformed(&fwd, &sc.driver, &st.phi, wref),
        )?;
        let gap = r0
            .per_knot_worst
            .iter()
            .zip(&r1.per_knot_worst)
            .map(|(a, b)| (a - b).abs())
            .fold((r0.mean_residual - r1.mean_residual).abs(), f64::max);
        art.check_at_most("zvonkin_residual_agreement", gap, 1e-10, "original against transformed residual");
    }

    if !sc.checks.covariation.is_empty() {
        let mut gaps = Table::new("covariation", &["steps", "epsilon", "sup_gap", "worst_path_gap"]);
        let mut curves = None;
        for &[steps, div] in &sc.checks.covariation {
            let pk = p.with_steps(steps);
            let drift = st.drift_for(&pk)?;
            let uk = st.solve_u(&pk, &drift)?;
            let kk = uk.times().to_vec();
            let spec_k = PathSpec {
                model: ForwardModel::Brownian,
                knots: &kk,
                start: &start,
                seed: st.seed(),
                band: st.band(),
            };
            let mut ek = context("fbsde-sim/simulate_brownian", spec_k.simulate_block(0, small))?;
            context("fbsde-sim/evaluate_bsde_pair", evaluate_bsde_pair(&uk, &mut ek))?;
            let eps = p.horizon / div as f64;
            let c = context("fbsde-sim/covariation_check", covariation_check(&ek, eps))?;
            gaps.push(vec![steps as f64, eps, c.sup_gap, c.worst_path_gap]);
            curves = Some(c);
        }
        let g = gaps.column("sup_gap").unwrap_or_default();
        let shrinking = g.windows(2).all(|w| w[1] < w[0]);
        art.check(
            "covariation_shrinks",
            shrinking,
            *g.last().unwrap_or(&f64::NAN),
            g[0],
            "sup gap at the finest resolution against the coarsest",
        );
        if let Some(c) = curves {
            let mut t = Table::new("covariation_curve", &["t", "covariation", "integrated_z"]);
            for (i, &time) in c.times.iter().enumerate() {
                t.push(vec![time, c.covariation[i][0], c.integrated_z[i][0]]);
            }
            art.tables.push(t);
        }
        art.tables.push(gaps);
    }
    Ok(())
}

fn simulate5(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let p = st.params();
    let mc = &sc.monte_carlo;
    let checks = &sc.checks;
    let (lambda, xi) = st.solve_xi(p, &st.drift)?;
    art.metric("lambda", lambda);
    record_solution(art, "xi", &xi);
    art.check_at_most("xi.gradient", xi.sup_gradient(), XI_GRADIENT_TARGET, "sup|∇ξ| at the chosen λ");
    let knots = st.path_knots(&xi);
    let start = sc.start();
    let spec = PathSpec {
        model: ForwardModel::Virtual { xi: &xi, lambda },
        knots: &knots,
        start: &start,
        seed: st.seed(),
        band: st.band(),
    };
    st.log(&format!("simulating {} virtual paths", mc.paths));
    let (m, flagged) = terminal_moments(st, &spec, mc.paths)?;
    art.metric("flagged_fraction", flagged as f64 / mc.paths as f64);
    for (i, mi) in m.iter().enumerate() {
        art.metric(&format!("terminal_mean_{i}"), mi.mean);
        art.metric(&format!("terminal_variance_{i}"), mi.variance());
    }
    let small = mc.ensemble_paths.min(mc.paths);

    if checks.collapse {
        let v = context("fbsde-sim/simulate_forward_virtual", spec.simulate_block(0, small))?;
        let b = PathSpec {
            model: ForwardModel::Brownian,
            ..spec
        };
        let w = context("fbsde-sim/simulate_brownian", b.simulate_block(0, small))?;
        let gap = v
            .paths
            .iter()
            .zip(&w.paths)
            .flat_map(|(a, c)| a.x.iter().zip(&c.x).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        art.check_at_most("degenerate_collapse", gap, 1e-12, "virtual against Brownian paths, shared seed");
    }

    if checks.ks_direct_euler {
        st.log("direct Euler comparison");
        let samples = drift_samples(&st.drift);
        let euler = PathSpec {
            model: ForwardModel::DirectEuler {
                drift: &st.drift,
                samples: &samples,
            },
            seed: st.seed().wrapping_add(1),
            ..spec
        };
        let a = terminal_samples(st, &spec, mc.paths)?;
        let b = terminal_samples(st, &euler, mc.paths)?;
        let ks = ks_statistic(&a, &b);
        let crit = ks_critical_value(checks.ks_alpha, a.len(), b.len());
        art.check_at_most("ks_direct_euler", ks, crit, format!("KS distance of X_T at α = {}", checks.ks_alpha));
    }

    if checks.lambda_factor > 0.0 {
        let l2 = checks.lambda_factor * lambda;
        st.log(&format!("re-solving ξ at λ = {l2}"));
        let xi2 = context("pde-solver/solve_aux_xi", solve_aux_xi(&st.drift, l2, p, &sc.solver))?;
        let other = PathSpec {
            model: ForwardModel::Virtual { xi: &xi2, lambda: l2 },
            seed: st.seed().wrapping_add(2),
            ..spec
        };
        let (m2, _) = terminal_moments(st, &other, mc.paths)?;
        let mut worst: f64 = 0.0;
        for (a, b) in m.iter().zip(&m2) {
            let se = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
            worst = worst.max((a.mean - b.mean).abs() / se);
            let sv = (a.variance_standard_error().powi(2) + b.variance_standard_error().powi(2)).sqrt();
            worst = worst.max((a.variance() - b.variance()).abs() / sv);
        }
        art.metric("lambda_alternative", l2);
        art.check_at_most("lambda_invariance", worst, 4.0, "mean and variance gaps in combined standard errors");
    }

    let u = st.solve_u(p, &st.drift)?;
    record_solution(art, "u", &u);
    let r = context(
        "fbsde-sim/bsde_residual",
        streamed_bsde_residual(&spec, mc.paths, mc.block, &u, &sc.driver, &st.phi, None),
    )?;
    art.metric("residual.mean", r.mean_residual);
    art.metric("residual.max", r.max_residual);
    let mut e = context("fbsde-sim/simulate_forward_virtual", spec.simulate_block(0, mc.export_paths.min(mc.paths)))?;
    context("fbsde-sim/evaluate_bsde_pair", evaluate_bsde_pair(&u, &mut e))?;
    art.tables.push(path_table("paths", &e, mc.export_paths));
    art.snapshot("xi", &xi);
    Ok(())
}

fn terminal_samples(st: &Setup, spec: &PathSpec, paths: usize) -> Result<Vec<f64>> {
    let d = spec.dim();
    let last = spec.knots.len() - 1;
    let mut out = Vec::with_capacity(paths);
    let mut flagged = 0;
    let mut first = 0;
    while first < paths {
        let count = st.scenario.monte_carlo.block.min(paths - first);
        let e = context("fbsde-sim/simulate", spec.simulate_block(first, count))?;
        for p in &e.paths {
            flagged += usize::from(p.flagged);
            out.push(p.x[last * d]);
        }
        first += count;
    }
    context("fbsde-sim/domain", check_domain(flagged, paths))?;
    Ok(out)
}

fn verify_fk(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let p = st.params();
    let mc = &sc.monte_carlo;
    let u = st.solve_u(p, &st.drift)?;
    record_solution(art, "u", &u);
    let cfg = FkConfig {
        paths: mc.paths,
        seed: st.seed(),
        richardson: mc.richardson,
        block: mc.block,
    };
    let start = sc.start();
    st.log(&format!("Feynman–Kac estimate with {} paths", mc.paths));
    let report = match mc.mode {
        ForwardKind::Brownian => {
            let w = st.solve_w(p, &st.drift, &u)?;
            context(
                "fbsde-sim/feynman_kac_check",
                feynman_kac_check(&u, &sc.driver, mc.start_knot, &start, FkMode::Brownian { w: w.as_ref() }, &cfg),
            )?
        }
        ForwardKind::Virtual => {
            let (lambda, xi) = st.solve_xi(p, &st.drift)?;
            art.metric("lambda", lambda);
            context(
                "fbsde-sim/feynman_kac_check",
                feynman_kac_check(&u, &sc.driver, mc.start_knot, &start, FkMode::Virtual { xi: &xi, lambda }, &cfg),
            )?
        }
    };
    let mut t = Table::new("feynman_kac", &["component", "target", "estimate", "standard_error", "z_score"]);
    for (i, c) in report.components.iter().enumerate() {
        t.push(vec![i as f64, c.target, c.estimate, c.standard_error, c.z_score]);
    }
    art.tables.push(t);
    art.metric("fk.flagged_fraction", report.flagged_fraction);
    art.check_at_most("fk_z_score", report.max_abs_z(), sc.checks.z_max, "largest |z| over components");
    Ok(())
}

fn study_convergence(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let p = st.params();
    st.log(&format!("ladder {:?}", sc.study.levels));
    let table = context(
        "mollify/convergence_study",
        convergence_study(&st.drift, &sc.study.levels, &sc.driver, &st.phi, p, &sc.solver, st.opts.parallel),
    )?;
    let mut t = Table::new(
        "convergence",
        &[
            "level",
            "drift_distance",
            "solution_distance",
            "stability_ratio",
            "sup_u",
            "sup_grad_u",
            "sup_w",
            "sup_grad_w",
            "sup_w_gap",
            "iterations",
            "contraction_ratio",
        ],
    );
    for r in &table.rows {
        t.push(vec![
            r.level as f64,
            r.drift_distance,
            r.solution_distance,
            r.stability_ratio().unwrap_or(f64::NAN),
            r.sup_u,
            r.sup_grad_u,
            r.sup_w,
            r.sup_grad_w,
            r.sup_w_gap,
            r.iterations as f64,
            r.contraction_ratio,
        ]);
    }
    art.tables.push(t);
    art.metric("reference.sup_u", table.sup_u_ref);
    art.metric("reference.sup_grad_u", table.sup_grad_u_ref);
    art.metric("reference.sup_w", table.sup_w_ref);
    art.metric("reference.contraction_ratio", table.reference_contraction_ratio);

    let dist: Vec<f64> = table.rows.iter().map(|r| r.drift_distance).collect();
    art.check(
        "drift_distance_monotone",
        dist.windows(2).all(|w| w[1] < w[0]),
        *dist.last().unwrap_or(&f64::NAN),
        dist.first().copied().unwrap_or(f64::NAN),
        "‖bⁿ - b‖ strictly decreasing along the ladder",
    );
    let ratios: Vec<f64> = table.rows.iter().filter_map(|r| r.stability_ratio()).collect();
    let b = fit_bound(&ratios, sc.checks.slack);
    art.metric("stability.constant", b.constant);
    art.check(
        "stability_ratio",
        b.passed && !ratios.is_empty(),
        b.held_out_max,
        b.slack * b.constant,
        "fine-level ratios against the constant fitted on coarse levels",
    );
    let w_ratios: Vec<f64> = table.rows.iter().filter_map(|r| r.w_ratio()).collect();
    let b = fit_bound(&w_ratios, sc.checks.slack);
    art.metric("w_convergence.constant", b.constant);
    art.check(
        "w_convergence",
        b.passed && !w_ratios.is_empty(),
        b.held_out_max,
        b.slack * b.constant,
        "sup|wⁿ - w| / ‖bⁿ - b‖ on fine levels against the coarse-level constant",
    );
    for (name, col, reference) in [
        ("uniform_sup_u", "sup_u", table.sup_u_ref),
        ("uniform_sup_grad_u", "sup_grad_u", table.sup_grad_u_ref),
        ("uniform_sup_w", "sup_w", table.sup_w_ref),
    ] {
        let values = art.table("convergence").and_then(|t| t.column(col)).unwrap_or_default();
        let mut all = values.clone();
        all.push(reference);
        let b = fit_bound(&all, sc.checks.slack);
        art.check(name, b.passed, b.held_out_max, b.slack * b.constant, "fine levels and reference against coarse-level constant");
    }
    let worst = table
        .rows
        .iter()
        .map(|r| r.contraction_ratio)
        .fold(table.reference_contraction_ratio, f64::max);
    art.check("ladder_contraction", worst < 1.0, worst, 1.0, "largest fitted increment ratio over the ladder");
    Ok(())
}

fn study_residual(st: &Setup, art: &mut RunArtifact) -> Result<()> {
    let sc = st.scenario;
    let mc = &sc.monte_carlo;
    let start = sc.start();
    let mut t = Table::new("residual", &["steps", "dt", "mean_residual", "max_residual"]);
    for &steps in &sc.study.steps {
        let p = sc.params.with_steps(steps);
        let drift = st.drift_for(&p)?;
        let u = st.solve_u(&p, &drift)?;
        record_solution(art, &format!("u_{steps}"), &u);
        let knots = st.path_knots(&u);
        let r = match mc.mode {
            ForwardKind::Brownian => {
                let w = st.solve_w(&p, &drift, &u)?;
                let spec = PathSpec {
                    model: ForwardModel::Brownian,
                    knots: &knots,
                    start: &start,
                    seed: st.seed(),
                    band: st.band(),
                };
                streamed_bsde_residual(&spec, mc.paths, mc.block, &u, &sc.driver, &st.phi, w.as_ref())
            }
            ForwardKind::Virtual => {
                let (lambda, xi) = st.solve_xi(&p, &drift)?;
                let spec = PathSpec {
                    model: ForwardModel::Virtual { xi: &xi, lambda },
                    knots: &knots,
                    start: &start,
                    seed: st.seed(),
                    band: st.band(),
                };
                streamed_bsde_residual(&spec, mc.paths, mc.block, &u, &sc.driver, &st.phi, None)
            }
        };
        let r = context("fbsde-sim/bsde_residual", r)?;
        t.push(vec![steps as f64, p.dt(), r.mean_residual, r.max_residual]);
    }
    let dt = t.column("dt").unwrap_or_default();
    let res = t.column("mean_residual").unwrap_or_default();
    let slope = loglog_slope(&dt, &res);
    art.metric("residual.slope", slope);
    art.tables.push(t);
    art.check_at_most(
        "residual_slope",
        (slope - sc.study.slope_target).abs(),
        sc.study.slope_tolerance,
        format!("|slope - {}| of mean residual against Δt", sc.study.slope_target),
    );
    Ok(())
}
