//! Human-readable summary and two-column plot data from a run artifact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::stats::loglog_slope;

use super::artifact::{RunArtifact, Table};

/// One two-column plot file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub name: String,
    /// Comment lines written before the column header, without the leading `#`.
    pub header: Vec<String>,
    pub columns: [String; 2],
    pub points: Vec<(f64, f64)>,
}

impl PlotData {
    fn new(name: &str, x: &str, y: &str) -> Self {
        Self {
            name: name.into(),
            header: Vec::new(),
            columns: [x.into(), y.into()],
            points: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            let _ = writeln!(s, "# {h}");
        }
        let _ = writeln!(s, "{},{}", self.columns[0], self.columns[1]);
        for (x, y) in &self.points {
            let _ = writeln!(s, "{x:e},{y:e}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub text: String,
    pub plots: Vec<PlotData>,
    /// False when a check failed or the artifact holds nothing to report.
    pub ok: bool,
}

impl Report {
    /// Writes `report.txt` and `plots/<name>.csv` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("plots"))?;
        std::fs::write(dir.join("report.txt"), &self.text)?;
        for p in &self.plots {
            std::fs::write(dir.join("plots").join(format!("{}.csv", p.name)), p.to_csv())?;
        }
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else {
        format!("{v:.6e}")
    }
}

fn pairs(t: &Table, x: &str, y: &str) -> Vec<(f64, f64)> {
    match (t.column(x), t.column(y)) {
        (Some(a), Some(b)) => a.into_iter().zip(b).filter(|(a, b)| a.is_finite() && b.is_finite()).collect(),
        _ => Vec::new(),
    }
}

fn plots_for(art: &RunArtifact, text: &mut String) -> (Vec<PlotData>, bool) {
    let mut plots = Vec::new();
    let mut ok = true;
    for t in &art.tables {
        match t.name.as_str() {
            "convergence" => {
                if t.rows.is_empty() {
                    text.push_str("convergence study: no levels\n");
                    ok = false;
                    continue;
                }
                let mut p = PlotData::new("stability", "drift_distance", "solution_distance");
                p.points = pairs(t, "drift_distance", "solution_distance");
                plots.push(p);
                let mut p = PlotData::new("drift_distance", "level", "drift_distance");
                p.points = pairs(t, "level", "drift_distance");
                plots.push(p);
            }
            "residual" => {
                if t.rows.is_empty() {
                    text.push_str("residual study: no levels\n");
                    ok = false;
                    continue;
                }
                let raw = pairs(t, "dt", "mean_residual");
                let (dt, res): (Vec<f64>, Vec<f64>) = raw.iter().copied().unzip();
                let slope = loglog_slope(&dt, &res);
                let mut p = PlotData::new("residual", "ln_dt", "ln_residual");
                p.header.push(format!("slope={slope:.6}"));
                p.points = raw.iter().map(|(a, b)| (a.ln(), b.ln())).collect();
                plots.push(p);
            }
            "covariation_curve" => {
                for y in ["covariation", "integrated_z"] {
                    let mut p = PlotData::new(&format!("covariation_{y}"), "t", y);
                    p.points = pairs(t, "t", y);
                    plots.push(p);
                }
            }
            "covariation" => {
                let mut p = PlotData::new("covariation_gap", "epsilon", "sup_gap");
                p.points = pairs(t, "epsilon", "sup_gap");
                plots.push(p);
            }
            "residual_per_knot" => {
                let mut p = PlotData::new("residual_per_knot", "t", "worst");
                p.points = pairs(t, "t", "worst");
                plots.push(p);
            }
            name if name.ends_with("_increments") => {
                let mut p = PlotData::new(name, "iteration", "increment");
                p.points = pairs(t, "iteration", "increment");
                plots.push(p);
            }
            _ => {}
        }
    }
    (plots, ok)
}

/// Deterministic text summary and plot data; checks and metrics appear in name order.
pub fn emit_report(art: &RunArtifact) -> Report {
    let mut text = String::new();
    let _ = writeln!(text, "experiment: {}", art.experiment);
    if !art.name.is_empty() {
        let _ = writeln!(text, "name: {}", art.name);
    }
    let _ = writeln!(text, "seed: {}", art.seed);
    let _ = writeln!(text, "scenario hash: {}", art.scenario_hash);
    let (mut plots, mut ok) = plots_for(art, &mut text);
    for p in &mut plots {
        p.header.insert(0, format!("scenario_hash={}", art.scenario_hash));
    }

    let mut checks: Vec<_> = art.checks.iter().collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let _ = writeln!(text, "\nchecks ({}):", checks.len());
    for c in &checks {
        let _ = writeln!(
            text,
            "  {} {:<32} value {} threshold {}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt(c.value),
            fmt(c.threshold),
            c.detail
        );
    }
    if checks.is_empty() {
        text.push_str("  none\n");
    }
    ok &= checks.iter().all(|c| c.passed);

    let _ = writeln!(text, "\nmetrics:");
    for (k, v) in &art.metrics {
        let _ = writeln!(text, "  {k:<32} {}", fmt(*v));
    }
    let _ = writeln!(text, "\ntables:");
    for t in &art.tables {
        let _ = writeln!(text, "  {} ({} rows: {})", t.name, t.rows.len(), t.columns.join(", "));
    }
    for t in art.tables.iter().filter(|t| t.rows.len() <= 16 && !t.name.ends_with("_increments")) {
        let _ = writeln!(text, "\n{}:", t.name);
        let widths: Vec<usize> = t.columns.iter().map(|c| c.chars().count().max(12)).collect();
        let cells = |items: Vec<String>| {
            items.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let _ = writeln!(text, "  {}", cells(t.columns.clone()));
        for r in &t.rows {
            let _ = writeln!(text, "  {}", cells(r.iter().map(|v| format!("{v:.5e}")).collect()));
        }
    }
    let _ = writeln!(text, "\nresult: {}", if ok { "PASS" } else { "FAIL" });
    Report { text, plots, ok }
}
