use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use codeword::codes::{build_code, BuiltinCode, QuantumCode};
use codeword::errors::MAX_ENV_DIM;
use codeword::spec_file::parse_spec;
use serde::Serialize;

use crate::event::ErrorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Recover,
    Constraints,
    ExportSpec,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Verify => "verify",
            Self::Recover => "recover",
            Self::Constraints => "constraints",
            Self::ExportSpec => "export-spec",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "json" => Ok(Self::Json),
            other => bail!("unknown format `{other}` (expected table or json)"),
        }
    }
}

/// Where the code comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeSource {
    Builtin(BuiltinCode),
    File(PathBuf),
}

impl CodeSource {
    pub fn describe(&self) -> String {
        match self {
            Self::Builtin(b) => b.name().to_string(),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn load(&self) -> anyhow::Result<QuantumCode> {
        let spec = match self {
            Self::Builtin(b) => b.spec(),
            Self::File(path) => load_spec_file(path)?,
        };
        build_code(spec).with_context(|| format!("building code from {}", self.describe()))
    }
}

fn load_spec_file(path: &Path) -> anyhow::Result<codeword::codes::CodeSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&text).with_context(|| format!("in spec file {}", path.display()))
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_ENV_DIM: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub code: CodeSource,
    pub seed: u64,
    pub trials: usize,
    pub env_dim: usize,
    pub error: Option<ErrorSpec>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// A validated config for a built-in code with default settings.
    pub fn new(command: Command, code: BuiltinCode) -> Self {
        Self {
            command,
            code: CodeSource::Builtin(code),
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            env_dim: DEFAULT_ENV_DIM,
            error: None,
            output_path: None,
            format: Format::Table,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_env_dim(mut self, env_dim: usize) -> Self {
        self.env_dim = env_dim;
        self
    }

    pub fn with_error(mut self, error: ErrorSpec) -> Self {
        self.error = Some(error);
        self
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(2..=MAX_ENV_DIM).contains(&self.env_dim) {
            bail!("env-dim must be in 2..={MAX_ENV_DIM}, got {}", self.env_dim);
        }
        if self.command == Command::ExportSpec && !matches!(self.code, CodeSource::Builtin(_)) {
            bail!("export-spec needs a built-in code name");
        }
        if let Some(e) = &self.error {
            e.validate_dims()?;
        }
        Ok(())
    }
}

/// Resolves `--code` / `--spec-file` into a [`CodeSource`].
pub fn code_source(code: Option<&str>, spec_file: Option<&Path>) -> anyhow::Result<CodeSource> {
    match (code, spec_file) {
        (Some(_), Some(_)) => bail!("give either --code or --spec-file, not both"),
        (Some(name), None) => Ok(CodeSource::Builtin(name.parse()?)),
        (None, Some(path)) => Ok(CodeSource::File(path.to_path_buf())),
        (None, None) => bail!("one of --code or --spec-file is required"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        let ok = ExperimentConfig::new(Command::Verify, BuiltinCode::Perfect5);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_trials(0).validate().is_err());
        assert!(ok.clone().with_env_dim(1).validate().is_err());
        assert!(ok.clone().with_env_dim(9).validate().is_err());
        assert!(ok.with_env_dim(8).validate().is_ok());
    }

    #[test]
    fn code_sources() {
        assert_eq!(code_source(Some("steane7"), None).unwrap(), CodeSource::Builtin(BuiltinCode::Steane7));
        assert!(code_source(Some("shor9"), None).is_err());
        assert!(code_source(None, None).is_err());
        assert!(code_source(Some("steane7"), Some(Path::new("x"))).is_err());
        let f = code_source(None, Some(Path::new("a.toml"))).unwrap();
        assert_eq!(f.describe(), "file:a.toml");
    }

    #[test]
    fn formats() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("yaml".parse::<Format>().is_err());
    }
}
