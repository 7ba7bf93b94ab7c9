use std::process::Command;

use fbsde_lab::orchestrator::{emit_report, run_experiment, RunArtifact, RunOptions, Scenario, Snapshot, Table};
use fbsde_lab::Error;

const MINIMAL: &str = r#"
[experiment]
kind = "solve-pde"
seed = 1

[params]
dim = 1
beta = 0.25
q = 3.0
delta = 0.5
p = 2.5
gamma = 0.1
horizon = 0.5
steps = 32
grid_points = 128

[terminal]
kind = "gaussian"
amplitude = 1.0
width = 1.0
"#;

const SMOOTH: &str = r#"
[drift]
kind = "smooth"
modes = [{ k = [2], sin = 0.5 }, { k = [4], cos = 0.3 }]
"#;

fn scenario(kind: &str, extra: &str) -> String {
    format!("{}\n{extra}", MINIMAL.replace("\"solve-pde\"", &format!("\"{kind}\"")))
}

fn quiet() -> RunOptions {
    RunOptions {
        parallel: false,
        quiet: true,
    }
}

fn validation_messages(text: &str) -> Vec<String> {
    match Scenario::parse(text) {
        Err(Error::Validation(v)) => v,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn check<'a>(art: &'a RunArtifact, name: &str) -> &'a fbsde_lab::orchestrator::CheckResult {
    art.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn minimal_scenario_is_valid() {
    let s = Scenario::parse(MINIMAL).unwrap();
    assert_eq!(s.params.dim, 1);
    assert_eq!(s.start(), vec![0.0]);
}

#[test]
fn inadmissible_delta_names_the_inequality() {
    let v = validation_messages(&MINIMAL.replace("delta = 0.5", "delta = 0.8"));
    assert!(v.iter().any(|m| m.starts_with("params.delta") && m.contains("δ ≥ 1−β = 0.75")), "{v:?}");
}

#[test]
fn forward_system_requires_q_tilde() {
    let v = validation_messages(&scenario("simulate5", ""));
    assert!(v.iter().any(|m| m.contains("extra L^q-condition")), "{v:?}");
    let ok = scenario("simulate5", "").replace("grid_points = 128", "grid_points = 128\nq_tilde = 1.3333333333333333");
    assert!(Scenario::parse(&ok).is_ok());
}

#[test]
fn parse_errors_carry_line_and_column() {
    let text = MINIMAL.replace("beta = 0.25", "beta = oops");
    match Scenario::parse(&text) {
        Err(Error::Parse { line, column, .. }) => {
            assert_eq!(line, 8);
            assert_eq!(column, 8);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(Scenario::parse("[experiment]\nkind = \"nope\"\n"), Err(Error::Parse { .. })));
}

#[test]
fn study_fields_are_required_by_kind() {
    let v = validation_messages(&scenario("convergence-study", "[study]\nlevels = [4, 8]\n"));
    assert!(v.iter().any(|m| m.starts_with("study.levels")), "{v:?}");
    let v = validation_messages(&scenario("simulate4", "[checks]\ncovariation = [[32, 32]]\n"));
    assert!(v.iter().any(|m| m.starts_with("checks.covariation")), "{v:?}");
}

#[test]
fn hash_ignores_output_but_not_seed() {
    let a = Scenario::parse(MINIMAL).unwrap();
    let mut b = a.clone();
    b.experiment.output = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.experiment.seed = 2;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn heat_flow_run_writes_a_consistent_artifact() {
    let s = Scenario::parse(MINIMAL).unwrap();
    let art = run_experiment(&s, &quiet()).unwrap();
    assert!(check(&art, "heat_flow").passed);
    assert!(art.passed());
    let dir = tempfile::tempdir().unwrap();
    art.write(dir.path()).unwrap();
    let back = RunArtifact::load(dir.path()).unwrap();
    assert_eq!(back.scenario_hash, s.hash());
    assert_eq!(back.checks, art.checks);

    let bytes = std::fs::read(dir.path().join("snapshots").join("u.fbsnap")).unwrap();
    let (header, times, values) = Snapshot::decode(&bytes).unwrap();
    assert_eq!((header.dim, header.n, header.knots), (1, 128, 33));
    assert_eq!(header.horizon, 0.5);
    assert_eq!(times.len(), 33);
    assert_eq!(values[0][0].len(), 128);
    let csv = std::fs::read_to_string(dir.path().join("u_increments.csv")).unwrap();
    assert!(csv.starts_with(&format!("# scenario_hash={}", s.hash())));
}

#[test]
fn fk_run_reports_a_z_score() {
    let text = scenario("verify-fk", &format!("{SMOOTH}\n[monte_carlo]\npaths = 4000\nblock = 1000\n"));
    let art = run_experiment(&Scenario::parse(&text).unwrap(), &quiet()).unwrap();
    let z = check(&art, "fk_z_score");
    assert!(z.passed && z.value <= 4.0, "{z:?}");
    assert_eq!(art.table("feynman_kac").unwrap().rows.len(), 1);
}

#[test]
fn convergence_run_tabulates_each_level() {
    let text = scenario(
        "convergence-study",
        "[drift]\nkind = \"fractional-noise\"\nhurst = 0.75\nseed = 3\namplitude = 1.0\n\n[study]\nlevels = [4, 8, 16, 32]\n",
    )
    .replace("beta = 0.25", "beta = 0.3")
    .replace("delta = 0.5", "delta = 0.45");
    let art = run_experiment(&Scenario::parse(&text).unwrap(), &quiet()).unwrap();
    let t = art.table("convergence").unwrap();
    assert_eq!(t.column("level").unwrap(), vec![4.0, 8.0, 16.0, 32.0]);
    assert!(check(&art, "drift_distance_monotone").passed);
}

#[test]
fn reports_are_deterministic_and_plot_the_residual_slope() {
    let text = scenario(
        "residual-study",
        &format!("{SMOOTH}\n[monte_carlo]\npaths = 300\n\n[study]\nsteps = [16, 64, 256]\n"),
    );
    let art = run_experiment(&Scenario::parse(&text).unwrap(), &quiet()).unwrap();
    let (a, b) = (emit_report(&art), emit_report(&art));
    assert_eq!(a, b);
    let plot = a.plots.iter().find(|p| p.name == "residual").unwrap();
    let csv = plot.to_csv();
    let slope = art.metrics["residual.slope"];
    assert!(csv.contains(&format!("# slope={slope:.6}")), "{csv}");
    let dt = art.table("residual").unwrap().column("dt").unwrap();
    assert_eq!(plot.points.len(), 3);
    assert!((plot.points[0].0 - dt[0].ln()).abs() < 1e-15);
}

#[test]
fn empty_study_reports_no_levels() {
    let mut art = RunArtifact::new("0".repeat(64), "convergence-study", "", 0);
    art.tables.push(Table::new("convergence", &["level", "drift_distance", "solution_distance"]));
    let r = emit_report(&art);
    assert!(r.text.contains("no levels"));
    assert!(!r.ok);
}

#[test]
fn inner_failures_name_the_operation() {
    // Two Picard iterations cannot reach the tolerance, so the first solve fails.
    let text = scenario("solve-aux", &format!("{SMOOTH}\n[solver]\nmax_iterations = 2\n"));
    match run_experiment(&Scenario::parse(&text).unwrap(), &quiet()) {
        Err(Error::Context { context, .. }) => assert!(context.starts_with("pde-solver/"), "{context}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_fbsde-lab");
    let good = dir.path().join("good.toml");
    std::fs::write(&good, MINIMAL).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, MINIMAL.replace("delta = 0.5", "delta = 0.8")).unwrap();
    let out = dir.path().join("run");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap();

    let ok = run(&["solve-pde", "--scenario", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("summary.json").exists() && out.join("report.txt").exists());

    let again = run(&["report", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(again.status.code(), Some(0));

    let invalid = run(&["solve-pde", "--scenario", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("δ ≥ 1−β = 0.75"));

    let wrong_kind = run(&["verify-fk", "--scenario", good.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(wrong_kind.status.code(), Some(2));
    assert_eq!(run(&["solve-pde"]).status.code(), Some(2));
}
