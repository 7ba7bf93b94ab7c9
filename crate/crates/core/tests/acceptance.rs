//! Runs every shipped scenario and prints one PASS/FAIL line per acceptance criterion.
//! The last criterion re-runs each scenario and compares the written artifacts byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fbsde_lab::orchestrator::{emit_report, load_scenario, run_experiment, RunArtifact, RunOptions};

const SCENARIOS: &[&str] = &[
    "ac01_spectral_core",
    "ac02_mapping",
    "ac03_paraproduct",
    "ac04_fd_oracle",
    "ac05_heat_flow",
    "ac06_stability_ladder",
    "ac07_zvonkin",
    "ac08_residual_slope",
    "ac09a_fk_heat",
    "ac09b_fk_linear",
    "ac09c_fk_smooth_drift",
    "ac10a_virtual_collapse",
    "ac10b_virtual_law",
    "ac10c_fk_fractional",
    "ac11_covariation",
];

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

/// Runs a scenario, writes its artifact and report under `dir`, and returns the artifact.
fn run(name: &str, dir: &Path) -> Result<RunArtifact, String> {
    let scenario = load_scenario(scenario_path(name)).map_err(|e| e.to_string())?;
    let art = run_experiment(&scenario, &RunOptions { parallel: false, quiet: true }).map_err(|e| e.to_string())?;
    art.write(dir).map_err(|e| e.to_string())?;
    emit_report(&art).write(dir).map_err(|e| e.to_string())?;
    Ok(art)
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("artifact directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("artifact file"));
            }
        }
    }
    out
}

struct Outcome {
    runs: BTreeMap<&'static str, Result<RunArtifact, String>>,
}

impl Outcome {
    /// Named checks of one scenario: all must exist and pass.
    fn checks(&self, scenario: &str, names: &[&str]) -> (bool, String) {
        let art = match &self.runs[scenario] {
            Ok(a) => a,
            Err(e) => return (false, format!("{scenario}: error: {e}")),
        };
        let mut ok = true;
        let mut parts = Vec::new();
        for name in names {
            match art.checks.iter().find(|c| c.name == *name) {
                Some(c) => {
                    ok &= c.passed;
                    parts.push(format!("{}={:.3e} (limit {:.3e})", c.name, c.value, c.threshold));
                }
                None => {
                    ok = false;
                    parts.push(format!("{name} missing"));
                }
            }
        }
        (ok, format!("{scenario}: {}", parts.join(", ")))
    }

    fn all_checks(&self, scenario: &str) -> (bool, String) {
        match &self.runs[scenario] {
            Ok(a) => {
                let names: Vec<&str> = a.checks.iter().map(|c| c.name.as_str()).collect();
                self.checks(scenario, &names)
            }
            Err(e) => (false, format!("{scenario}: error: {e}")),
        }
    }
}

fn combine(parts: Vec<(bool, String)>) -> (bool, String) {
    let ok = parts.iter().all(|p| p.0);
    (ok, parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let mut runs = BTreeMap::new();
    for &name in SCENARIOS {
        let start = Instant::now();
        let r = run(name, &root.path().join("first").join(name));
        eprintln!("  ran {name} in {:.1}s", start.elapsed().as_secs_f64());
        runs.insert(name, r);
    }
    let out = Outcome { runs };

    let mut lines: Vec<(&str, &str, (bool, String))> = vec![
        ("AC1", "spectral core", out.checks("ac01_spectral_core", &["spectral_core"])),
        ("AC2", "mapping property", out.checks("ac02_mapping", &["mapping_property"])),
        (
            "AC3",
            "paraproduct bound",
            out.checks("ac03_paraproduct", &["paraproduct_bound", "paraproduct_consistency"]),
        ),
        ("AC4", "PDE oracle", out.checks("ac04_fd_oracle", &["fd_oracle", "fd_oracle_halving"])),
    ];

    let mut ac5 = vec![out.checks("ac05_heat_flow", &["heat_flow"])];
    for &name in SCENARIOS {
        if let Ok(a) = &out.runs[name] {
            let names: Vec<&str> = a
                .checks
                .iter()
                .filter(|c| c.name.ends_with("contraction"))
                .map(|c| c.name.as_str())
                .collect();
            let (ok, _) = out.checks(name, &names);
            let worst = a
                .checks
                .iter()
                .filter(|c| c.name.ends_with("contraction"))
                .map(|c| c.value)
                .fold(0.0, f64::max);
            ac5.push((ok && !names.is_empty(), format!("{name}: ratio {worst:.3}")));
        } else {
            ac5.push(out.checks(name, &[]));
        }
    }
    lines.push(("AC5", "Picard contraction", combine(ac5)));
    lines.push(("AC6", "stability ladder", out.all_checks("ac06_stability_ladder")));
    lines.push((
        "AC7",
        "Zvonkin equivalence",
        out.checks("ac07_zvonkin", &["zvonkin_involution", "zvonkin_residual_agreement"]),
    ));
    lines.push(("AC8", "residual order", out.checks("ac08_residual_slope", &["residual_slope"])));
    lines.push((
        "AC9",
        "Feynman-Kac, Brownian paths",
        combine(
            ["ac09a_fk_heat", "ac09b_fk_linear", "ac09c_fk_smooth_drift"]
                .iter()
                .map(|s| out.checks(s, &["fk_z_score"]))
                .collect(),
        ),
    ));
    lines.push((
        "AC10",
        "virtual forward solution",
        combine(vec![
            out.checks("ac10a_virtual_collapse", &["degenerate_collapse"]),
            out.checks("ac10b_virtual_law", &["ks_direct_euler", "lambda_invariance"]),
            out.checks("ac10c_fk_fractional", &["fk_z_score"]),
        ]),
    ));
    lines.push(("AC11", "covariation", out.checks("ac11_covariation", &["covariation_shrinks"])));

    let mut identical = Vec::new();
    for &name in SCENARIOS {
        let first = root.path().join("first").join(name);
        let second = root.path().join("second").join(name);
        let ok = match run(name, &second) {
            Ok(_) => first.exists() && files(&first) == files(&second),
            Err(_) => false,
        };
        identical.push((ok, format!("{name}: {}", if ok { "identical" } else { "differs" })));
    }
    lines.push(("AC12", "reproducibility", combine(identical)));

    println!();
    let mut all = true;
    for (id, title, (ok, detail)) in &lines {
        all &= ok;
        println!("{id:<5} {} {title}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
