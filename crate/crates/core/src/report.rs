//! Check outcomes and the verification report.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl Verdict {
    pub fn from_pass(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    /// `Fail` wins over `Pass`, `Pass` over `Info`.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Pass, _) | (_, Pass) => Pass,
            _ => Info,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

/// A measured quantity against a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub value: f64,
    pub bound: f64,
    /// Signed margin; positive means the bound is violated by that much.
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

impl MarginReport {
    /// `value <= bound + tol`.
    pub fn upper(value: f64, bound: f64, tol: f64) -> Self {
        let margin = value - bound;
        MarginReport {
            value,
            bound,
            margin,
            tol,
            pass: margin <= tol,
        }
    }

    /// `value >= bound - tol`.
    pub fn lower(value: f64, bound: f64, tol: f64) -> Self {
        let margin = bound - value;
        MarginReport {
            value,
            bound,
            margin,
            tol,
            pass: margin <= tol,
        }
    }
}

/// One named entry of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub value: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub detail: serde_json::Value,
}

impl CheckResult {
    pub fn new(value: f64, threshold: f64, verdict: Verdict, detail: serde_json::Value) -> Self {
        CheckResult {
            value,
            threshold,
            verdict,
            detail,
        }
    }
}

/// Ordered map of named checks plus the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: BTreeMap<String, CheckResult>,
    pub provenance: serde_json::Value,
}

impl VerificationReport {
    pub fn new(provenance: serde_json::Value) -> Self {
        VerificationReport {
            checks: BTreeMap::new(),
            provenance,
        }
    }

    pub fn insert(&mut self, name: &str, result: CheckResult) {
        self.checks.insert(name.to_string(), result);
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| c.verdict.is_fail())
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures().is_empty() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn exit_codes() {
        let mut r = VerificationReport::new(json!({}));
        r.insert("a", CheckResult::new(1.0, 2.0, Verdict::Pass, json!(null)));
        r.insert("b", CheckResult::new(1.0, 2.0, Verdict::Info, json!(null)));
        assert_eq!(r.exit_code(), 0);
        r.insert("c", CheckResult::new(3.0, 2.0, Verdict::Fail, json!(null)));
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.failures(), vec!["c"]);
    }

    #[test]
    fn margins() {
        assert!(MarginReport::upper(1.0, 0.9, 0.2).pass);
        assert!(!MarginReport::upper(1.2, 0.9, 0.2).pass);
        assert!(MarginReport::lower(0.8, 0.9, 0.2).pass);
        assert!(!MarginReport::lower(0.5, 0.9, 0.2).pass);
        assert_eq!(Verdict::Info.and(Verdict::Pass), Verdict::Pass);
        assert_eq!(Verdict::Pass.and(Verdict::Fail), Verdict::Fail);
    }
}
