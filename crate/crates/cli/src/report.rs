use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{Command, ExperimentConfig, Format};

pub const TOOL: &str = "codeword";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failure the code's declared scope predicts; does not fail the run.
    ExpectedFail,
    /// Informational measurement with no verdict.
    Reported,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "FAIL",
            Self::ExpectedFail => "expected-fail",
            Self::Reported => "reported",
        }
    }

    pub fn is_failure(self) -> bool {
        self == Self::Fail
    }
}

/// Min/max/mean fidelity over trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityStats {
    pub trials: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl FidelityStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Self { trials: values.len(), min, max, mean })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The relation being checked, in words.
    pub relation: String,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// `residual ≤ tolerance` decides pass or fail.
    pub fn bounded(name: impl Into<String>, relation: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            relation: relation.into(),
            residual: sanitize(residual),
            tolerance,
            status,
            fidelity: None,
            detail: None,
        }
    }

    /// Exact integer equality.
    pub fn count(name: impl Into<String>, relation: impl Into<String>, expected: usize, found: usize) -> Self {
        let mut c = Self::bounded(name, relation, expected.abs_diff(found) as f64, 0.0);
        c.detail = Some(format!("expected {expected}, found {found}"));
        c
    }

    pub fn reported(name: impl Into<String>, relation: impl Into<String>, value: f64) -> Self {
        let mut c = Self::bounded(name, relation, value, f64::INFINITY);
        c.status = Status::Reported;
        c.tolerance = 0.0;
        c
    }

    pub fn with_fidelity(mut self, values: &[f64]) -> Self {
        self.fidelity = FidelityStats::from_values(values);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Turns a failure into an expected failure.
    pub fn expect_failure(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::ExpectedFail;
        }
        self
    }

    pub fn failed(name: impl Into<String>, relation: impl Into<String>, why: impl Into<String>) -> Self {
        let mut c = Self::bounded(name, relation, f64::INFINITY, 0.0);
        c.detail = Some(why.into());
        c
    }
}

/// JSON has no infinities or NaN; an unbounded residual is written as `f64::MAX`.
fn sanitize(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub command: Command,
    pub code: String,
    pub seed: u64,
    pub trials: usize,
    pub env_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            command: c.command,
            code: c.code.describe(),
            seed: c.seed,
            trials: c.trials,
            env_dim: c.env_dim,
            error: c.error.as_ref().map(ToString::to_string),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeSummary {
    pub name: String,
    pub n_physical: usize,
    pub ancilla_qubits: usize,
    pub encoding_checksum: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub code: CodeSummary,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Report {
    pub fn new(config: &ExperimentConfig, code: CodeSummary, checks: Vec<Check>) -> Self {
        let verdict = if checks.iter().any(|c| c.status.is_failure()) { Verdict::Fail } else { Verdict::Pass };
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            config: ConfigEcho::from(config),
            code,
            checks,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        writeln!(out, "{} {}  {} --code {} --seed {} --trials {} --env-dim {}", self.tool, self.version, c.command, c.code, c.seed, c.trials, c.env_dim).unwrap();
        if let Some(e) = &c.error {
            writeln!(out, "error event: {e}").unwrap();
        }
        writeln!(
            out,
            "code {}: {} physical qubits, {} ancilla, E sha256 {}",
            self.code.name, self.code.n_physical, self.code.ancilla_qubits, self.code.encoding_checksum
        )
        .unwrap();
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        writeln!(out).unwrap();
        writeln!(out, "{:<width$}  {:<13}  {:>10}  {:>9}  relation", "check", "status", "residual", "tol").unwrap();
        for ch in &self.checks {
            writeln!(
                out,
                "{:<width$}  {:<13}  {:>10.3e}  {:>9.1e}  {}",
                ch.name,
                ch.status.label(),
                ch.residual,
                ch.tolerance,
                ch.relation
            )
            .unwrap();
            if let Some(f) = &ch.fidelity {
                writeln!(
                    out,
                    "{:<width$}  fidelity over {} trials: min {:.12} max {:.12} mean {:.12}",
                    "",
                    f.trials,
                    f.min,
                    f.max,
                    f.mean
                )
                .unwrap();
            }
            if let Some(d) = &ch.detail {
                writeln!(out, "{:<width$}  {d}", "").unwrap();
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "verdict: {}", if self.passed() { "pass" } else { "FAIL" }).unwrap();
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.to_table(),
            Format::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use codeword::codes::BuiltinCode;

    fn summary() -> CodeSummary {
        CodeSummary { name: "x".into(), n_physical: 3, ancilla_qubits: 2, encoding_checksum: "00".into() }
    }

    #[test]
    fn verdict_is_conjunction() {
        let cfg = ExperimentConfig::new(Command::Verify, BuiltinCode::Repetition3);
        let ok = Check::bounded("a", "r", 0.0, 1e-10);
        let bad = Check::bounded("b", "r", 1.0, 1e-10);
        let expected = bad.clone().expect_failure();
        let info = Check::reported("c", "r", 3.0);
        assert!(Report::new(&cfg, summary(), vec![ok.clone(), expected, info]).passed());
        assert!(!Report::new(&cfg, summary(), vec![ok, bad]).passed());
    }

    #[test]
    fn json_is_finite_and_stable() {
        let cfg = ExperimentConfig::new(Command::Verify, BuiltinCode::Repetition3);
        let checks = vec![
            Check::failed("boom", "r", "did not run"),
            Check::count("n", "count", 4, 4),
            Check::bounded("f", "r", 1e-12, 1e-10).with_fidelity(&[1.0, 0.5]),
        ];
        let r = Report::new(&cfg, summary(), checks);
        let a = r.to_json();
        assert_eq!(a, r.clone().to_json());
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["verdict"], "fail");
        assert_eq!(v["checks"][2]["fidelity"]["mean"], 0.75);
        assert!(r.to_table().contains("verdict: FAIL"));
    }
}
