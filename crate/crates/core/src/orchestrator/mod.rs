//! Scenario files, experiment dispatch, artifacts and reports.

mod artifact;
mod report;
mod run;
mod scenario;

pub use artifact::{CheckResult, RunArtifact, Snapshot, SnapshotHeader, Table};
pub use report::{emit_report, PlotData, Report};
pub use run::{run_experiment, RunOptions};
pub use scenario::{
    load_scenario, ChecksSection, ExperimentKind, ExperimentSection, ForwardKind, MonteCarloSection, Scenario,
    StudySection,
};
