//! Structured pass/fail records.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Stated in the source literature.
    Literature,
    /// Immediate from the definitions.
    Trivial,
    /// Obtained by an independent computation or oracle.
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Passes when the residual is at most the tolerance.
    AtMost,
    /// Passes when the measured value is at least the tolerance.
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// `None` when the measured value was not finite or could not be computed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn evaluate(&mut self) {
        if self.status == Status::NotApplicable {
            return;
        }
        let ok = match (self.residual, self.kind) {
            (Some(r), CheckKind::AtMost) => r <= self.tolerance,
            (Some(r), CheckKind::AtLeast) => r >= self.tolerance,
            (None, _) => false,
        };
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Running maximum of `|value|` over grid points, remembering the worst point.
/// A non-finite value poisons the maximum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaxResidual {
    pub max: f64,
    pub point: Option<Vec<f64>>,
    poisoned: bool,
}

impl MaxResidual {
    pub fn new() -> MaxResidual {
        MaxResidual::default()
    }

    pub fn update(&mut self, value: f64, point: &[f64]) {
        if self.poisoned {
            return;
        }
        let v = value.abs();
        if !v.is_finite() {
            self.poisoned = true;
            self.max = f64::NAN;
            self.point = Some(point.to_vec());
        } else if v > self.max || self.point.is_none() {
            self.max = v.max(self.max);
            self.point = Some(point.to_vec());
        }
    }

    pub fn merge(&mut self, other: &MaxResidual) {
        if self.poisoned {
            return;
        }
        if other.poisoned || (other.point.is_some() && (other.max > self.max || self.point.is_none())) {
            *self = other.clone();
        }
    }

    pub fn value(&self) -> Option<f64> {
        if self.poisoned {
            None
        } else {
            Some(self.max)
        }
    }
}

/// Named residual maxima and value minima collected over grid points, kept in
/// first-recorded order so reports come out in a stable order.
#[derive(Clone, Debug, Default)]
pub struct Samples {
    max: Vec<(String, MaxResidual)>,
    min: Vec<(String, f64, Vec<f64>)>,
}

impl Samples {
    pub fn new() -> Samples {
        Samples::default()
    }

    /// Records `|value|` under `id`.
    pub fn abs(&mut self, id: &str, value: f64, point: &[f64]) {
        match self.max.iter_mut().find(|(k, _)| k == id) {
            Some((_, m)) => m.update(value, point),
            None => {
                let mut m = MaxResidual::new();
                m.update(value, point);
                self.max.push((id.to_string(), m));
            }
        }
    }

    /// Records a signed value whose minimum over the grid matters.
    pub fn min(&mut self, id: &str, value: f64, point: &[f64]) {
        match self.min.iter_mut().find(|(k, _, _)| k == id) {
            Some(entry) => {
                if !(value >= entry.1) {
                    entry.1 = value;
                    entry.2 = point.to_vec();
                }
            }
            None => self.min.push((id.to_string(), value, point.to_vec())),
        }
    }

    pub fn merge(&mut self, other: &Samples) {
        for (id, m) in &other.max {
            match self.max.iter_mut().find(|(k, _)| k == id) {
                Some((_, mine)) => mine.merge(m),
                None => self.max.push((id.clone(), m.clone())),
            }
        }
        for (id, v, p) in &other.min {
            self.min(id, *v, p);
        }
    }

    pub fn collect(all: &[Samples]) -> Samples {
        let mut out = Samples::new();
        for s in all {
            out.merge(s);
        }
        out
    }

    pub fn max_of(&self, id: &str) -> MaxResidual {
        self.max
            .iter()
            .find(|(k, _)| k == id)
            .map(|(_, m)| m.clone())
            .unwrap_or_default()
    }

    pub fn min_of(&self, id: &str) -> Option<(f64, Vec<f64>)> {
        self.min
            .iter()
            .find(|(k, _, _)| k == id)
            .map(|(_, v, p)| (*v, p.clone()))
    }

    pub fn max_ids(&self) -> Vec<&str> {
        self.max.iter().map(|(k, _)| k.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attachments: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

impl VerificationReport {
    pub fn new(suite: &str) -> VerificationReport {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_string(),
            grid: None,
            passed: true,
            checks: Vec::new(),
            attachments: BTreeMap::new(),
            duration_ms: None,
        }
    }

    pub fn with_grid(mut self, grid: impl fmt::Display) -> VerificationReport {
        self.grid = Some(grid.to_string());
        self
    }

    fn push(&mut self, mut check: Check) -> &mut Check {
        check.evaluate();
        self.passed &= check.passed();
        self.checks.push(check);
        self.checks.last_mut().unwrap()
    }

    /// Residual check `|r| ≤ tol`.
    pub fn at_most(&mut self, id: &str, residual: &MaxResidual, tol: f64) -> &mut Check {
        self.push(Check {
            id: id.to_string(),
            residual: residual.value(),
            tolerance: tol,
            kind: CheckKind::AtMost,
            status: Status::Fail,
            point: residual.point.clone(),
            provenance: None,
            note: None,
        })
    }

    /// Residual check on the maximum recorded under `id`.
    pub fn sampled(&mut self, samples: &Samples, id: &str, tol: f64) -> &mut Check {
        self.at_most(id, &samples.max_of(id), tol)
    }

    /// Residual check on a single number.
    pub fn at_most_value(&mut self, id: &str, residual: f64, tol: f64) -> &mut Check {
        self.push(Check {
            id: id.to_string(),
            residual: Some(residual.abs()).filter(|r| r.is_finite()),
            tolerance: tol,
            kind: CheckKind::AtMost,
            status: Status::Fail,
            point: None,
            provenance: None,
            note: None,
        })
    }

    /// Lower-bound check `value ≥ bound`.
    pub fn at_least(&mut self, id: &str, value: f64, bound: f64, point: Option<Vec<f64>>) -> &mut Check {
        self.push(Check {
            id: id.to_string(),
            residual: Some(value).filter(|r| r.is_finite()),
            tolerance: bound,
            kind: CheckKind::AtLeast,
            status: Status::Fail,
            point,
            provenance: None,
            note: None,
        })
    }

    /// Boolean check.
    pub fn flag(&mut self, id: &str, ok: bool, note: impl Into<String>) -> &mut Check {
        let note = note.into();
        self.push(Check {
            id: id.to_string(),
            residual: Some(if ok { 0.0 } else { 1.0 }),
            tolerance: 0.0,
            kind: CheckKind::AtMost,
            status: Status::Fail,
            point: None,
            provenance: None,
            note: if note.is_empty() { None } else { Some(note) },
        })
    }

    /// A check that could not be computed.
    pub fn error(&mut self, id: &str, tol: f64, err: &Error) -> &mut Check {
        self.push(Check {
            id: id.to_string(),
            residual: None,
            tolerance: tol,
            kind: CheckKind::AtMost,
            status: Status::Fail,
            point: None,
            provenance: None,
            note: Some(err.to_string()),
        })
    }

    pub fn not_applicable(&mut self, id: &str, reason: &str) -> &mut Check {
        self.push(Check {
            id: id.to_string(),
            residual: None,
            tolerance: 0.0,
            kind: CheckKind::AtMost,
            status: Status::NotApplicable,
            point: None,
            provenance: None,
            note: Some(reason.to_string()),
        })
    }

    pub fn attach(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.attachments.insert(key.to_string(), v);
    }

    /// Appends another report's checks as `prefix.id` and its attachments as `prefix.key`.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.id = format!("{prefix}.{}", c.id);
            self.push(c);
        }
        for (k, v) in other.attachments {
            self.attachments.insert(format!("{prefix}.{k}"), v);
        }
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    /// Replaces the tolerance of every residual (`AtMost`) check and re-evaluates.
    pub fn override_tolerance(&mut self, tol: f64) {
        self.passed = true;
        for c in &mut self.checks {
            if c.kind == CheckKind::AtMost && c.status != Status::NotApplicable && c.tolerance > 0.0 {
                c.tolerance = tol;
                c.evaluate();
            }
            self.passed &= c.passed();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are serializable")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}: {}", self.suite, if self.passed { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::NotApplicable => "n/a ",
            };
            let cmp = match c.kind {
                CheckKind::AtMost => "<=",
                CheckKind::AtLeast => ">=",
            };
            let r = c.residual.map_or("--".to_string(), |r| format!("{r:.3e}"));
            write!(f, "  [{status}] {:<44} {r:>11} {cmp} {:.1e}", c.id, c.tolerance)?;
            if let Some(n) = &c.note {
                write!(f, "  ({n})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_conjunction() {
        let mut r = VerificationReport::new("t");
        let mut m = MaxResidual::new();
        m.update(1e-10, &[0.0]);
        r.at_most("small", &m, 1e-8);
        assert!(r.passed);
        r.at_least("bound", 0.05, 0.1, None);
        assert!(!r.passed);
        r.not_applicable("skip", "precondition");
        assert_eq!(r.failures().len(), 1);
    }

    #[test]
    fn non_finite_residual_fails() {
        let mut m = MaxResidual::new();
        m.update(1.0, &[0.0]);
        m.update(f64::NAN, &[1.0]);
        m.update(2.0, &[2.0]);
        assert_eq!(m.value(), None);
        let mut r = VerificationReport::new("t");
        r.at_most("nan", &m, 1e9);
        assert!(!r.passed);
    }

    #[test]
    fn tolerance_override_and_round_trip() {
        let mut r = VerificationReport::new("t").with_grid("x=0:1:3");
        r.at_most_value("a", 1e-6, 1e-8);
        r.attach("q", -1.0);
        assert!(!r.passed);
        r.override_tolerance(1e-5);
        assert!(r.passed);
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
