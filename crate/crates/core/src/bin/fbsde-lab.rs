use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbsde_lab::orchestrator::{emit_report, load_scenario, run_experiment, ExperimentKind, RunArtifact, RunOptions};
use fbsde_lab::Error;

#[derive(Parser)]
#[command(name = "fbsde-lab", version, about = "Mild-solution solvers and FBSDE Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the semilinear PDE and run the solver checks.
    SolvePde(RunArgs),
    /// Solve for u, the correction w and the forward transform ξ.
    SolveAux(RunArgs),
    /// Brownian forward paths and the corrected backward equation.
    Simulate4(RunArgs),
    /// Virtual forward paths built from ξ.
    Simulate5(RunArgs),
    /// Compare u(t, x) with its Feynman–Kac estimate.
    VerifyFk(RunArgs),
    /// Mollification ladder against the full drift.
    StudyConvergence(RunArgs),
    /// Backward residual against the step size.
    StudyResidual(RunArgs),
    /// Summarize an artifact directory written by a previous run.
    Report {
        /// Artifact directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Artifact directory; defaults to the scenario's `output` or `runs/<kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; more than one also runs ladder levels concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long)]
    quiet: bool,
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::Parse { .. } | Error::Validation(_) => true,
        Error::Context { source, .. } => is_config_error(source),
        _ => false,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if is_config_error(e) { 2 } else { 1 })
}

fn report(dir: &PathBuf, art: &RunArtifact, quiet: bool) -> Result<bool, Error> {
    let r = emit_report(art);
    r.write(dir)?;
    if quiet {
        println!("{}: {}", art.experiment, if r.ok { "PASS" } else { "FAIL" });
    } else {
        print!("{}", r.text);
    }
    Ok(r.ok && art.passed())
}

fn run(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let mut scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if scenario.experiment.kind != kind {
        eprintln!(
            "error: scenario describes a {} experiment, not {}",
            scenario.experiment.kind.as_str(),
            kind.as_str()
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = args.seed {
        scenario.experiment.seed = seed;
    }
    if args.parallel == 0 {
        eprintln!("error: --parallel needs at least one thread");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.parallel).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let dir = args
        .out
        .or_else(|| scenario.experiment.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(kind.as_str()));
    let opts = RunOptions {
        parallel: args.parallel > 1,
        quiet: args.quiet,
    };
    let result = run_experiment(&scenario, &opts).and_then(|art| {
        art.write(&dir)?;
        report(&dir, &art, args.quiet)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::SolvePde(a) => run(ExperimentKind::SolvePde, a),
        Command::SolveAux(a) => run(ExperimentKind::SolveAux, a),
        Command::Simulate4(a) => run(ExperimentKind::Simulate4, a),
        Command::Simulate5(a) => run(ExperimentKind::Simulate5, a),
        Command::VerifyFk(a) => run(ExperimentKind::VerifyFk, a),
        Command::StudyConvergence(a) => run(ExperimentKind::ConvergenceStudy, a),
        Command::StudyResidual(a) => run(ExperimentKind::ResidualStudy, a),
        Command::Report { out, quiet } => match RunArtifact::load(&out).and_then(|art| report(&out, &art, quiet)) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => fail(&e),
        },
    }
}
