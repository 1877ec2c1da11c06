//! Reports shared by the `check_*` functions: plain law-violation lists
//! and the richer per-condition reports with verdicts and counterexamples.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub message: String,
}

/// List of violated laws; empty means the value passed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: &str, message: impl Into<String>) {
        self.violations.push(Violation { kind: kind.to_string(), message: message.into() });
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    /// True if some violation mentions `needle` in kind or message.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.kind.contains(needle) || v.message.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.kind, v.message)?;
        }
        Ok(())
    }
}

/// Counterexamples kept per report; further failures are only counted.
pub const MAX_COUNTEREXAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped(String),
}

/// The data needed to replay a failure, rendered with element names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub kind: String,
    pub data: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub verdict: Verdict,
    pub checked: u64,
    pub failures: u64,
    /// Cases where a step's own hypotheses fail, so its conclusion is not
    /// claimed there.
    pub not_applicable: u64,
    pub counterexamples: Vec<Counterexample>,
    pub details: Vec<String>,
}

impl ConditionReport {
    pub fn new(condition: &str) -> Self {
        ConditionReport {
            condition: condition.to_string(),
            verdict: Verdict::Pass,
            checked: 0,
            failures: 0,
            not_applicable: 0,
            counterexamples: Vec::new(),
            details: Vec::new(),
        }
    }

    pub fn fail(&mut self, kind: &str, data: Vec<(&str, String)>) {
        self.failures += 1;
        self.verdict = Verdict::Fail;
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            let data = data.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            self.counterexamples.push(Counterexample { kind: kind.to_string(), data });
        }
    }

    /// Marks the report skipped unless it already failed.
    pub fn skip(&mut self, reason: impl Into<String>) {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Skipped(reason.into());
        }
    }

    pub fn note(&mut self, d: impl Into<String>) {
        self.details.push(d.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    /// Folds `other` into `self`, keeping the worse verdict.
    pub fn absorb(&mut self, other: ConditionReport) {
        self.checked += other.checked;
        self.failures += other.failures;
        self.not_applicable += other.not_applicable;
        for c in other.counterexamples {
            if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                self.counterexamples.push(c);
            }
        }
        self.details.extend(other.details);
        match other.verdict {
            Verdict::Fail => self.verdict = Verdict::Fail,
            Verdict::Skipped(r) => self.skip(r),
            Verdict::Pass => {}
        }
    }
}
