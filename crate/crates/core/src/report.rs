use serde::Serialize;

/// One named identity check: the worst residual over all sampled arguments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub id: String,
    /// The identity written out as a formula, for traceability.
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdentityReport {
    pub records: Vec<IdentityRecord>,
}

impl IdentityReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a record. NaN residuals never pass.
    pub fn push(&mut self, id: &str, anchor: &str, residual: f64, tolerance: f64) {
        let residual = residual.abs();
        self.records.push(IdentityRecord {
            id: id.to_string(),
            anchor: anchor.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }

    pub fn extend(&mut self, other: IdentityReport) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn get(&self, id: &str) -> Option<&IdentityRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Running maximum of residuals for one identity.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Worst(pub f64);

impl Worst {
    pub fn see(&mut self, r: f64) {
        if r.is_nan() {
            self.0 = f64::NAN;
        } else if !self.0.is_nan() {
            self.0 = self.0.max(r.abs());
        }
    }
}
