//! Structured outputs of identity checks and inequality sweeps, with JSON
//! and CSV serialization. Field order and float formatting are stable, so
//! identical inputs produce byte-identical files.

use serde::Serialize;

/// Stable schema version stamped into every emitted document.
pub const SCHEMA_VERSION: u32 = 1;

/// One checked inequality `lhs <= rhs` with its numerical slack.
#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub error_bar: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Amount by which the bound fails beyond the error bar and tolerance
    /// (zero when it holds).
    pub violation: f64,
}

impl BoundEntry {
    pub fn check(
        label: impl Into<String>,
        lhs: f64,
        rhs: f64,
        error_bar: f64,
        tolerance: f64,
    ) -> Self {
        let violation = (lhs - rhs - error_bar - tolerance).max(0.0);
        Self {
            label: label.into(),
            lhs,
            rhs,
            error_bar,
            tolerance,
            pass: violation == 0.0,
            violation,
        }
    }
}

/// Result of an inequality sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub schema_version: u32,
    pub name: String,
    pub entries: Vec<BoundEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundsReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            entries: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: BoundEntry) {
        self.entries.push(entry);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }

    pub fn max_violation(&self) -> f64 {
        self.entries.iter().map(|e| e.violation).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut rows = vec![vec![
            "schema_version".to_string(),
            "report".to_string(),
            "label".to_string(),
            "lhs".to_string(),
            "rhs".to_string(),
            "error_bar".to_string(),
            "tolerance".to_string(),
            "pass".to_string(),
            "violation".to_string(),
        ]];
        for e in &self.entries {
            rows.push(vec![
                SCHEMA_VERSION.to_string(),
                self.name.clone(),
                e.label.clone(),
                fmt_f64(e.lhs),
                fmt_f64(e.rhs),
                fmt_f64(e.error_bar),
                fmt_f64(e.tolerance),
                e.pass.to_string(),
                fmt_f64(e.violation),
            ]);
        }
        rows_to_csv(&rows)
    }
}

/// A single named scalar.
#[derive(Debug, Clone, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// Named constants produced by a closed-form evaluation (Lipschitz
/// constants, Heinz constants, ...), with the branch taken where the
/// definition is piecewise.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub schema_version: u32,
    pub name: String,
    pub values: Vec<NamedValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConstantsReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            values: Vec::new(),
            branch: None,
            notes: Vec::new(),
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.push(NamedValue {
            name: name.into(),
            value,
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }

    pub fn header(&self) -> Vec<String> {
        self.values.iter().map(|v| v.name.clone()).collect()
    }

    pub fn row(&self) -> Vec<String> {
        self.values.iter().map(|v| fmt_f64(v.value)).collect()
    }
}

/// Summary row for a sweep of checks.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub schema_version: u32,
    pub name: String,
    pub total: usize,
    pub violations: usize,
    pub max_violation: f64,
}

impl ViolationReport {
    pub fn from_bounds(report: &BoundsReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: report.name.clone(),
            total: report.entries.len(),
            violations: report.violations(),
            max_violation: report.max_violation(),
        }
    }
}

/// Shortest-round-trip float formatting (deterministic).
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Minimal CSV encoding; fields are quoted only when they contain commas,
/// quotes or newlines.
pub fn rows_to_csv(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        let encoded: Vec<String> = row
            .iter()
            .map(|f| {
                if f.contains(',') || f.contains('"') || f.contains('\n') {
                    format!("\"{}\"", f.replace('"', "\"\""))
                } else {
                    f.clone()
                }
            })
            .collect();
        out.push_str(&encoded.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_entry_pass_and_violation() {
        let ok = BoundEntry::check("a", 1.0, 2.0, 0.0, 0.0);
        assert!(ok.pass);
        assert_eq!(ok.violation, 0.0);
        let margin = BoundEntry::check("b", 1.05, 1.0, 0.1, 0.0);
        assert!(margin.pass);
        let bad = BoundEntry::check("c", 2.0, 1.0, 0.1, 0.1);
        assert!(!bad.pass);
        assert!((bad.violation - 0.8).abs() < 1e-15);
    }

    #[test]
    fn csv_is_stable() {
        let mut r = BoundsReport::new("demo");
        r.push(BoundEntry::check("x", 0.5, 1.0, 0.0, 0.0));
        let a = r.to_csv();
        let b = r.to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("schema_version,report,label"));
    }

    #[test]
    fn constants_report_roundtrip() {
        let mut c = ConstantsReport::new("consts");
        c.set("mu1", 1.0);
        c.set("mu2", 0.25);
        assert_eq!(c.get("mu1"), Some(1.0));
        assert_eq!(c.header(), vec!["mu1".to_string(), "mu2".to_string()]);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"mu1\""));
    }
}
