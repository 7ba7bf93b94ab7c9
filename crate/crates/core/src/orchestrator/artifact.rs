//! Run outputs and their on-disk layout.
//!
//! A run directory holds `summary.json`, one CSV per table and one binary
//! snapshot per solved field under `snapshots/`. Every text file starts with a
//! `# scenario_hash=<hex>` line.
//!
//! Snapshot layout (little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `FBSDSNAP` |
//! | 4 | version (`u32`, currently 1) |
//! | 4 | `d` (`u32`) |
//! | 4 | `N` points per axis (`u32`) |
//! | 4 | component count (`u32`) |
//! | 4 | knot count `K + 1` (`u32`) |
//! | 4 | reserved, zero |
//! | 8 | `L` (`f64`) |
//! | 8 | `T` (`f64`) |
//! | 32 | SHA-256 of the scenario |
//! | 8·(K+1) | knot times |
//! | 8·(K+1)·components·N^d | physical samples, knot-major, then component, then row-major grid |

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::MildSolution;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"FBSDSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// JSON has no non-finite numbers; they round-trip through `null` as NaN.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(with = "nullable")]
    pub value: f64,
    #[serde(with = "nullable")]
    pub threshold: f64,
    pub detail: String,
}

/// Numeric table written as CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let mut s = format!("# scenario_hash={hash}\n{}\n", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Artifact(format!("table {name} has no header")))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| Error::Artifact(format!("table {name}: {e}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.into(),
            columns,
            rows,
        })
    }
}

/// Serialized field snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Header fields of a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub components: usize,
    pub knots: usize,
    pub half_width: f64,
    pub horizon: f64,
    pub scenario_hash: [u8; 32],
}

fn hash_bytes(hex: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = hex.get(2 * i..2 * i + 2).and_then(|h| u8::from_str_radix(h, 16).ok()).unwrap_or(0);
    }
    out
}

impl Snapshot {
    pub fn encode(name: &str, solution: &MildSolution, scenario_hash: &str) -> Self {
        let grid = solution.grid();
        let mut b = Vec::new();
        b.extend_from_slice(SNAPSHOT_MAGIC);
        for v in [
            SNAPSHOT_VERSION,
            grid.dim() as u32,
            grid.n() as u32,
            solution.num_components() as u32,
            solution.times().len() as u32,
            0,
        ] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&grid.half_width().to_le_bytes());
        b.extend_from_slice(&solution.horizon().to_le_bytes());
        b.extend_from_slice(&hash_bytes(scenario_hash));
        for t in solution.times() {
            b.extend_from_slice(&t.to_le_bytes());
        }
        for k in 0..solution.times().len() {
            for comp in solution.value_samples(k) {
                for v in comp {
                    b.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Self { name: name.into(), bytes: b }
    }

    /// Header, knot times and samples (`[knot][component][point]`).
    pub fn decode(bytes: &[u8]) -> Result<(SnapshotHeader, Vec<f64>, Vec<Vec<Vec<f64>>>)> {
        let bad = |m: &str| Error::Artifact(format!("snapshot: {m}"));
        if bytes.len() < 80 || &bytes[..8] != SNAPSHOT_MAGIC {
            return Err(bad("missing magic"));
        }
        let u = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u(0) != SNAPSHOT_VERSION as usize {
            return Err(bad("unsupported version"));
        }
        let mut scenario_hash = [0u8; 32];
        scenario_hash.copy_from_slice(&bytes[48..80]);
        let header = SnapshotHeader {
            dim: u(1),
            n: u(2),
            components: u(3),
            knots: u(4),
            half_width: f(32),
            horizon: f(40),
            scenario_hash,
        };
        let points = header.n.pow(header.dim as u32);
        let expected = 80 + 8 * header.knots * (1 + header.components * points);
        if bytes.len() != expected {
            return Err(bad(&format!("length {} != {expected}", bytes.len())));
        }
        let times = (0..header.knots).map(|k| f(80 + 8 * k)).collect();
        let mut o = 80 + 8 * header.knots;
        let mut data = Vec::with_capacity(header.knots);
        for _ in 0..header.knots {
            let mut comps = Vec::with_capacity(header.components);
            for _ in 0..header.components {
                comps.push((0..points).map(|j| f(o + 8 * j)).collect());
                o += 8 * points;
            }
            data.push(comps);
        }
        Ok((header, times, data))
    }
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifact {
    pub scenario_hash: String,
    pub experiment: String,
    pub name: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    scenario_hash: String,
    experiment: String,
    name: String,
    seed: u64,
    passed: bool,
    checks: Vec<CheckResult>,
    metrics: BTreeMap<String, Option<f64>>,
    tables: Vec<String>,
    snapshots: Vec<String>,
}

impl RunArtifact {
    pub fn new(scenario_hash: String, experiment: &str, name: &str, seed: u64) -> Self {
        Self {
            scenario_hash,
            experiment: experiment.into(),
            name: name.into(),
            seed,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            tables: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Records `value ≤ threshold` (or the given verdict) as a named check.
    pub fn check(&mut self, name: &str, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            value,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn check_at_most(&mut self, name: &str, value: f64, threshold: f64, detail: impl Into<String>) {
        self.check(name, value <= threshold, value, threshold, detail);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn snapshot(&mut self, name: &str, solution: &MildSolution) {
        self.snapshots.push(Snapshot::encode(name, solution, &self.scenario_hash));
    }

    fn summary_json(&self) -> Result<String> {
        let s = Summary {
            scenario_hash: self.scenario_hash.clone(),
            experiment: self.experiment.clone(),
            name: self.name.clone(),
            seed: self.seed,
            passed: self.passed(),
            checks: self.checks.clone(),
            metrics: self.metrics.iter().map(|(k, v)| (k.clone(), v.is_finite().then_some(*v))).collect(),
            tables: self.tables.iter().map(|t| t.name.clone()).collect(),
            snapshots: self.snapshots.iter().map(|s| s.name.clone()).collect(),
        };
        Ok(serde_json::to_string_pretty(&s)? + "\n")
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), self.summary_json()?)?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv(&self.scenario_hash))?;
        }
        if !self.snapshots.is_empty() {
            let snaps = dir.join("snapshots");
            fs::create_dir_all(&snaps)?;
            for s in &self.snapshots {
                fs::write(snaps.join(format!("{}.fbsnap", s.name)), &s.bytes)?;
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join("summary.json"))
            .map_err(|e| Error::Artifact(format!("{}: {e}", dir.join("summary.json").display())))?;
        let s: Summary = serde_json::from_str(&text)?;
        let tables = s
            .tables
            .iter()
            .map(|n| {
                let t = fs::read_to_string(dir.join(format!("{n}.csv")))
                    .map_err(|e| Error::Artifact(format!("table {n}: {e}")))?;
                Table::from_csv(n, &t)
            })
            .collect::<Result<Vec<_>>>()?;
        let snapshots = s
            .snapshots
            .iter()
            .map(|n| {
                let bytes = fs::read(dir.join("snapshots").join(format!("{n}.fbsnap")))
                    .map_err(|e| Error::Artifact(format!("snapshot {n}: {e}")))?;
                Ok(Snapshot { name: n.clone(), bytes })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario_hash: s.scenario_hash,
            experiment: s.experiment,
            name: s.name,
            seed: s.seed,
            checks: s.checks,
            metrics: s.metrics.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect(),
            tables,
            snapshots,
        })
    }
}
