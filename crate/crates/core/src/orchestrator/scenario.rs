//! Scenario files: TOML with one table per concern, validated before any work.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mollify::{DriftSpec, TimeProfile};
use crate::params::{validate_standing_assumptions, SolverParams};
use crate::pde::{DriverSpec, FixedPointConfig, TerminalSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SolvePde,
    SolveAux,
    #[serde(rename = "simulate4")]
    Simulate4,
    #[serde(rename = "simulate5")]
    Simulate5,
    VerifyFk,
    ConvergenceStudy,
    ResidualStudy,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SolvePde => "solve-pde",
            ExperimentKind::SolveAux => "solve-aux",
            ExperimentKind::Simulate4 => "simulate4",
            ExperimentKind::Simulate5 => "simulate5",
            ExperimentKind::VerifyFk => "verify-fk",
            ExperimentKind::ConvergenceStudy => "convergence-study",
            ExperimentKind::ResidualStudy => "residual-study",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: String,
    /// Master seed for every random draw of the run.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardKind {
    /// Brownian forward paths with the `w` correction.
    #[default]
    Brownian,
    /// The virtual forward solution built from `ξ`.
    Virtual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub paths: usize,
    /// Start point; defaults to the origin.
    pub start: Vec<f64>,
    /// Index of the start knot.
    pub start_knot: usize,
    pub block: usize,
    pub richardson: bool,
    pub mode: ForwardKind,
    /// Paths written to the path table.
    pub export_paths: usize,
    /// Paths used for the ensemble-level checks that keep every path in memory.
    pub ensemble_paths: usize,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            paths: 10_000,
            start: Vec::new(),
            start_knot: 0,
            block: 8192,
            richardson: true,
            mode: ForwardKind::Brownian,
            export_paths: 4,
            ensemble_paths: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    /// Random fields for the transform, isomorphism and semigroup checks (0 = off).
    pub spectral_fields: usize,
    /// Random inputs for the semigroup mapping property (0 = off).
    pub mapping_inputs: usize,
    pub mapping_times: usize,
    /// Random pairs for the paraproduct bound (0 = off).
    pub paraproduct_pairs: usize,
    /// Compare with the finite-difference oracle at `K` and `K/2`.
    pub fd_oracle: bool,
    pub fd_substeps: usize,
    /// Compare with `P(T - t)Φ`; applies only without drift and driver.
    pub heat_flow: bool,
    pub zvonkin: bool,
    pub ks_direct_euler: bool,
    pub ks_alpha: f64,
    /// Compare the forward law at `λ` and `factor·λ` (0 = off).
    pub lambda_factor: f64,
    pub collapse: bool,
    /// `[steps, T/ε]` pairs, coarse first; empty = off.
    pub covariation: Vec<[usize; 2]>,
    pub z_max: f64,
    /// Held-out ratios must stay below `slack` times the fitted constant.
    pub slack: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            spectral_fields: 0,
            mapping_inputs: 0,
            mapping_times: 12,
            paraproduct_pairs: 0,
            fd_oracle: false,
            fd_substeps: 2,
            heat_flow: true,
            zvonkin: false,
            ks_direct_euler: false,
            ks_alpha: 0.01,
            lambda_factor: 0.0,
            collapse: false,
            covariation: Vec::new(),
            z_max: 4.0,
            slack: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    /// Truncation levels of a convergence study, coarse to fine.
    pub levels: Vec<usize>,
    /// Step counts of a residual study.
    pub steps: Vec<usize>,
    pub slope_target: f64,
    pub slope_tolerance: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            levels: Vec::new(),
            steps: Vec::new(),
            slope_target: 0.5,
            slope_tolerance: 0.15,
        }
    }
}

/// A fully described experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: ExperimentSection,
    pub params: SolverParams,
    #[serde(default)]
    pub solver: FixedPointConfig,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub drift_profile: TimeProfile,
    #[serde(default)]
    pub driver: DriverSpec,
    pub terminal: TerminalSpec,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub study: StudySection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn parse(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Every violated constraint, prefixed by its key.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = validate_standing_assumptions(&self.params)
            .violations
            .iter()
            .map(|v| format!("params.{}: {}", v.key, v.message))
            .collect();
        let kind = self.experiment.kind;
        let forward = kind == ExperimentKind::Simulate5
            || (kind == ExperimentKind::VerifyFk && self.monte_carlo.mode == ForwardKind::Virtual);
        if forward || (kind == ExperimentKind::SolveAux && self.params.q_tilde.is_some()) {
            if let Err(e) = self.params.ensure_forward_gate() {
                let msg = match e {
                    Error::ParameterGate(m) => m,
                    other => other.to_string(),
                };
                out.push(format!("params.q_tilde: {msg}"));
            }
        }
        let mc = &self.monte_carlo;
        let monte_carlo = matches!(
            kind,
            ExperimentKind::Simulate4
                | ExperimentKind::Simulate5
                | ExperimentKind::VerifyFk
                | ExperimentKind::ResidualStudy
        );
        if monte_carlo {
            if mc.paths < 2 {
                out.push("monte_carlo.paths: need at least 2 paths".into());
            }
            if mc.block == 0 {
                out.push("monte_carlo.block: must be positive".into());
            }
            if !mc.start.is_empty() && mc.start.len() != self.params.dim {
                out.push(format!(
                    "monte_carlo.start: {} coordinates for d = {}",
                    mc.start.len(),
                    self.params.dim
                ));
            }
            if mc.start_knot > self.params.steps {
                out.push(format!("monte_carlo.start_knot: {} > K = {}", mc.start_knot, self.params.steps));
            }
        }
        match kind {
            ExperimentKind::ConvergenceStudy => {
                if self.study.levels.len() < 3 {
                    out.push(format!("study.levels: need at least 3 levels, got {}", self.study.levels.len()));
                }
                if self.study.levels.windows(2).any(|w| w[0] >= w[1]) {
                    out.push("study.levels: must increase strictly".into());
                }
            }
            ExperimentKind::ResidualStudy
                if self.study.steps.len() < 2 => {
                    out.push(format!("study.steps: need at least 2 step counts, got {}", self.study.steps.len()));
                }
            _ => {}
        }
        for [steps, div] in &self.checks.covariation {
            if *div == 0 || 2 * div > *steps {
                out.push(format!("checks.covariation: ε = T/{div} is below 2Δt = 2T/{steps}"));
            }
        }
        if self.checks.z_max <= 0.0 || self.checks.slack < 1.0 {
            out.push("checks: z_max must be positive and slack at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the output location.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.experiment.output = None;
        let json = serde_json::to_string(&canonical).expect("scenario serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Start point of the Monte Carlo runs.
    pub fn start(&self) -> Vec<f64> {
        if self.monte_carlo.start.is_empty() {
            vec![0.0; self.params.dim]
        } else {
            self.monte_carlo.start.clone()
        }
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Context {
        context: format!("reading {}", path.display()),
        source: Box::new(e.into()),
    })?;
    Scenario::parse(&text)
}
