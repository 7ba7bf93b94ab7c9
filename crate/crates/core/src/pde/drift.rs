use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::PeriodicGrid;
use crate::sobolev::sobolev_norm;

/// Drift held piecewise constant in time on the knot grid.
#[derive(Clone, Debug)]
pub enum DriftPath {
    /// Same field at every knot.
    Static(SpectralField),
    /// One field per knot.
    PerKnot(Vec<SpectralField>),
}

impl DriftPath {
    pub fn zero(grid: &PeriodicGrid) -> Self {
        DriftPath::Static(SpectralField::zeros(grid, grid.dim()))
    }

    pub fn at(&self, knot: usize) -> &SpectralField {
        match self {
            DriftPath::Static(f) => f,
            DriftPath::PerKnot(v) => &v[knot.min(v.len() - 1)],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.at(0).grid()
    }

    pub fn dim(&self) -> usize {
        self.at(0).num_components()
    }

    /// Distinct fields and the knot → field map.
    pub fn distinct(&self) -> (Vec<&SpectralField>, Vec<usize>) {
        match self {
            DriftPath::Static(f) => (vec![f], Vec::new()),
            DriftPath::PerKnot(v) => (v.iter().collect(), (0..v.len()).collect()),
        }
    }

    pub fn index_of(&self, knot: usize) -> usize {
        match self {
            DriftPath::Static(_) => 0,
            DriftPath::PerKnot(v) => knot.min(v.len() - 1),
        }
    }

    pub fn check_knots(&self, knots: usize) -> Result<()> {
        match self {
            DriftPath::PerKnot(v) if v.len() != knots => Err(Error::KnotMismatch(format!(
                "drift has {} knots, time grid has {knots}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DriftPath::Static(f) => f.coefficient_norm() == 0.0,
            DriftPath::PerKnot(v) => v.iter().all(|f| f.coefficient_norm() == 0.0),
        }
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        match self {
            DriftPath::Static(x) => DriftPath::Static(f(x)),
            DriftPath::PerKnot(v) => DriftPath::PerKnot(v.iter().map(f).collect()),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|f| f.scale(a))
    }

    /// `sup_k ‖b(t_k)‖_{H^s_p}`.
    pub fn sup_norm(&self, s: f64, p: f64) -> Result<f64> {
        let (fields, _) = self.distinct();
        let mut best: f64 = 0.0;
        for f in fields {
            best = best.max(sobolev_norm(f, s, p)?);
        }
        Ok(best)
    }

    /// `sup_k ‖self(t_k) - other(t_k)‖_{H^s_p}` over `knots` knots.
    pub fn sup_distance(&self, other: &DriftPath, knots: usize, s: f64, p: f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        match (self, other) {
            (DriftPath::Static(a), DriftPath::Static(b)) => {
                best = sobolev_norm(&(a - b), s, p)?;
            }
            _ => {
                for k in 0..knots {
                    a_minus_b(self.at(k), other.at(k)).and_then(|d| sobolev_norm(&d, s, p)).map(|v| best = best.max(v))?;
                }
            }
        }
        Ok(best)
    }
}

fn a_minus_b(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.axpy(-1.0, b)
}
