use std::io::Write;
use std::path::Path;

use serde::Serialize;

use sasakian_core::contact::EinsteinFit;
use sasakian_core::report::IdentityReport;
use sasakian_core::spectral::{SpectrumResult, StabilityVerdict};
use sasakian_core::tanno::{MinimalityComparison, StabilityEquivalence};
use sasakian_core::variation::VariationReport;

use crate::config::RunConfig;

/// One pass/fail line of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    /// Where the check ran: `ambient`, `immersion`, `potential[2]`, `alpha=0.5`, …
    pub scope: String,
    pub id: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub scope: String,
    pub result: SpectrumResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub scope: String,
    pub label: &'static str,
    pub verdict: StabilityVerdict,
}

/// Per-α summary of a deformation run.
#[derive(Debug, Clone, Serialize)]
pub struct DeformationEntry {
    pub alpha: f64,
    pub beta: f64,
    pub target_fit: EinsteinFit,
    /// `(A + 2)/α + 2` from the source fit.
    pub mapped_constant: Option<f64>,
    pub minimality: Option<MinimalityComparison>,
    pub equivalence: Option<StabilityEquivalence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    /// Every record passed and no error interrupted the run.
    pub pass: bool,
    pub error: Option<String>,
    pub records: Vec<Record>,
    pub einstein: Option<EinsteinFit>,
    pub variations: Vec<VariationReport>,
    pub spectra: Vec<SpectrumEntry>,
    pub verdicts: Vec<VerdictEntry>,
    pub deformations: Vec<DeformationEntry>,
    /// Checks that were skipped, and why.
    pub notes: Vec<String>,
    pub config: Option<RunConfig>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, tolerance_scale: f64, config: Option<RunConfig>) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tolerance_scale,
            pass: false,
            error: None,
            records: Vec::new(),
            einstein: None,
            variations: Vec::new(),
            spectra: Vec::new(),
            verdicts: Vec::new(),
            deformations: Vec::new(),
            notes: Vec::new(),
            config,
        }
    }

    pub fn push(&mut self, scope: &str, id: &str, anchor: &str, residual: f64, tolerance: f64) {
        let residual = residual.abs();
        self.records.push(Record {
            scope: scope.to_string(),
            id: id.to_string(),
            anchor: anchor.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }

    /// A boolean condition as a record: residual 0 when it holds, 1 otherwise.
    pub fn push_flag(&mut self, scope: &str, id: &str, anchor: &str, holds: bool) {
        self.push(scope, id, anchor, if holds { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn extend(&mut self, scope: &str, r: &IdentityReport) {
        for rec in &r.records {
            self.records.push(Record {
                scope: scope.to_string(),
                id: rec.id.clone(),
                anchor: rec.anchor.clone(),
                residual: rec.residual,
                tolerance: rec.tolerance,
                pass: rec.pass,
            });
        }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn finish(&mut self) {
        self.pass = self.error.is_none() && !self.records.is_empty() && self.records.iter().all(|r| r.pass);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn find(&self, scope: &str, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.scope == scope && r.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn write_eigenvalues_csv(&self, path: &Path) -> csv::Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            scope: &'a str,
            method: &'static str,
            index: usize,
            eigenvalue: f64,
        }
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.spectra {
            let method = match e.result.method {
                sasakian_core::spectral::SpectrumMethod::Grid => "grid",
                sasakian_core::spectral::SpectrumMethod::Lattice => "lattice",
            };
            for (index, &eigenvalue) in e.result.eigenvalues.iter().enumerate() {
                w.serialize(Row {
                    scope: &e.scope,
                    method,
                    index,
                    eigenvalue,
                })?;
            }
        }
        for d in &self.deformations {
            if let Some(eq) = &d.equivalence {
                let scope = format!("alpha={}", d.alpha);
                for (label, values) in [("source", &eq.source_eigenvalues), ("target", &eq.target_eigenvalues)] {
                    for (index, &eigenvalue) in values.iter().enumerate() {
                        w.serialize(Row {
                            scope: &format!("{scope}/{label}"),
                            method: "grid",
                            index,
                            eigenvalue,
                        })?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_constants_csv(&self, path: &Path) -> csv::Result<()> {
        #[derive(Serialize)]
        struct Row {
            alpha: f64,
            beta: f64,
            source_a: Option<f64>,
            mapped_a: Option<f64>,
            target_a: f64,
            target_b: f64,
            source_lambda1: Option<f64>,
            target_lambda1: Option<f64>,
            source_verdict: Option<&'static str>,
            target_verdict: Option<&'static str>,
        }
        let mut w = csv::Writer::from_path(path)?;
        let source_a = self.einstein.map(|f| f.a);
        for d in &self.deformations {
            let eq = d.equivalence.as_ref();
            w.serialize(Row {
                alpha: d.alpha,
                beta: d.beta,
                source_a,
                mapped_a: d.mapped_constant,
                target_a: d.target_fit.a,
                target_b: d.target_fit.b,
                source_lambda1: eq.map(|e| e.source.lambda1),
                target_lambda1: eq.map(|e| e.target.lambda1),
                source_verdict: eq.map(|e| e.source.label()),
                target_verdict: eq.map(|e| e.target.label()),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per failing record, for the terminal.
    pub fn summary(&self, out: &mut impl Write) -> std::io::Result<()> {
        let failed = self.failures().count();
        writeln!(
            out,
            "{}: {} ({} records, {} failed)",
            self.command,
            if self.pass { "pass" } else { "FAIL" },
            self.records.len(),
            failed
        )?;
        for r in self.failures() {
            writeln!(
                out,
                "  {} {}: residual {:e} > {:e}  [{}]",
                r.scope, r.id, r.residual, r.tolerance, r.anchor
            )?;
        }
        if let Some(e) = &self.error {
            writeln!(out, "  error: {e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_requires_records_and_no_error() {
        let mut r = RunReport::new("verify", 0, 1.0, None);
        r.finish();
        assert!(!r.pass);
        r.push("ambient", "a", "x = x", -1e-9, 1e-8);
        r.finish();
        assert!(r.pass);
        assert_eq!(r.records[0].residual, 1e-9);
        r.push_flag("ambient", "b", "p", false);
        r.finish();
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
        r.records.pop();
        r.error = Some("boom".into());
        r.finish();
        assert!(!r.pass);
    }

    #[test]
    fn nan_residuals_fail() {
        let mut r = RunReport::new("verify", 0, 1.0, None);
        r.push("ambient", "a", "x = x", f64::NAN, 1.0);
        r.finish();
        assert!(!r.pass);
        assert!(r.to_json().contains("\"residual\": null"));
    }
}
