//! JSON reports for suites, demos and searches.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::linalg::Tolerance;

/// One failing case. `residual` is `None` for structural failures (axiom violations, errors).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// One identity evaluated by a demo, with its citation (`"example5: ..."`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub citation: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub citation: String,
    pub params: BTreeMap<String, Value>,
    pub trials: usize,
    pub cases: usize,
    pub failures: Vec<Failure>,
    pub max_residual: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<Line>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
    pub wall_time: f64,
}

impl Report {
    /// The JSON form with `wall_time` zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time = 0.0;
        serde_json::to_string_pretty(&r).expect("report is serializable")
    }
}

/// Accumulates cases for one report.
#[derive(Debug)]
pub struct ReportBuilder {
    check: String,
    citation: String,
    params: BTreeMap<String, Value>,
    trials: usize,
    tol: Tolerance,
    cases: usize,
    failures: Vec<Failure>,
    max_residual: f64,
    lines: Vec<Line>,
    details: BTreeMap<String, Value>,
    start: Instant,
}

impl ReportBuilder {
    pub fn new(check: &str, citation: &str, trials: usize, tol: Tolerance) -> Self {
        let mut params = BTreeMap::new();
        params.insert("tol".to_string(), Value::from(tol.eps()));
        params.insert("trials".to_string(), Value::from(trials));
        ReportBuilder {
            check: check.to_string(),
            citation: citation.to_string(),
            params,
            trials,
            tol,
            cases: 0,
            failures: Vec::new(),
            max_residual: 0.0,
            lines: Vec::new(),
            details: BTreeMap::new(),
            start: Instant::now(),
        }
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), to_value(value));
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.details.insert(key.to_string(), to_value(value));
        self
    }

    /// Records a residual against the report tolerance.
    pub fn record(&mut self, case: &str, trial: Option<usize>, residual: f64) -> bool {
        self.record_within(case, trial, residual, self.tol.eps())
    }

    /// Records a residual against an explicit bound. NaN always fails.
    pub fn record_within(&mut self, case: &str, trial: Option<usize>, residual: f64, bound: f64) -> bool {
        self.cases += 1;
        if !residual.is_nan() {
            self.max_residual = self.max_residual.max(residual);
        }
        let ok = residual <= bound;
        if !ok {
            self.failures.push(Failure {
                case: case.to_string(),
                trial,
                residual: Some(residual),
                message: None,
            });
        }
        ok
    }

    /// Records a pass/fail case with no residual.
    pub fn record_bool(&mut self, case: &str, trial: Option<usize>, ok: bool, message: impl FnOnce() -> String) -> bool {
        self.cases += 1;
        if !ok {
            self.failures.push(Failure {
                case: case.to_string(),
                trial,
                residual: None,
                message: Some(message()),
            });
        }
        ok
    }

    /// Records a case that could not be evaluated.
    pub fn record_error(&mut self, case: &str, trial: Option<usize>, err: impl std::fmt::Display) {
        self.record_bool(case, trial, false, || err.to_string());
    }

    /// Records a demo identity line; `citation` is echoed in the report.
    pub fn line(&mut self, citation: &str, residual: f64) -> bool {
        let ok = self.record(citation, None, residual);
        self.lines.push(Line {
            citation: citation.to_string(),
            residual,
            passed: ok,
        });
        ok
    }

    pub fn finish(self) -> Report {
        Report {
            passed: self.failures.is_empty(),
            check: self.check,
            citation: self.citation,
            params: self.params,
            trials: self.trials,
            cases: self.cases,
            failures: self.failures,
            max_residual: self.max_residual,
            lines: self.lines,
            details: self.details,
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_tracks_failures() {
        let mut b = ReportBuilder::new("demo", "x", 3, Tolerance::DEFAULT);
        assert!(b.record("a", Some(0), 1e-12));
        assert!(!b.record("b", Some(1), 1e-3));
        assert!(!b.record("c", Some(2), f64::NAN));
        let r = b.finish();
        assert!(!r.passed);
        assert_eq!(r.cases, 3);
        assert_eq!(r.failures.len(), 2);
        assert_eq!(r.max_residual, 1e-3);
    }

    #[test]
    fn canonical_json_ignores_wall_time() {
        let mut r = ReportBuilder::new("c", "x", 0, Tolerance::DEFAULT).finish();
        let s = r.canonical_json();
        r.wall_time = 12.0;
        assert_eq!(s, r.canonical_json());
        let back: Report = serde_json::from_str(&s).unwrap();
        assert_eq!(back.check, "c");
    }
}
