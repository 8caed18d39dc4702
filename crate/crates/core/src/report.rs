//! Check records shared by validators, law suites and the command line.

use serde::Serialize;
use serde_json::Value;

use crate::config::TruncationConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sampled,
    Skipped,
}

/// Counterexamples kept per check; the count is always exact.
pub const MAX_FAILURES: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    /// Position in a numbered suite, when the check belongs to one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<usize>,
    pub name: String,
    /// The statement being checked, written out.
    pub anchor: String,
    pub mode: Mode,
    pub cases: usize,
    pub failure_count: usize,
    pub failures: Vec<String>,
    /// Anything the reader should know about how the check was decided.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, mode: Mode) -> Self {
        CheckRecord {
            item: None,
            name: name.into(),
            anchor: anchor.into(),
            mode,
            cases: 0,
            failure_count: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn case(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(describe());
        }
    }

    pub fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < MAX_FAILURES {
            self.failures.push(msg);
        }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.notes.contains(&msg) {
            self.notes.push(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: TruncationConfig,
    pub checks: Vec<CheckRecord>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
}

impl RunReport {
    pub fn new(config: TruncationConfig, checks: Vec<CheckRecord>) -> Self {
        let status = if checks.iter().all(CheckRecord::passed) { "pass" } else { "fail" };
        RunReport {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            checks,
            status: status.into(),
            extra: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
