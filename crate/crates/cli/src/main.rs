use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codeword_cli::config::{DEFAULT_ENV_DIM, DEFAULT_SEED, DEFAULT_TRIALS};
use codeword_cli::suites::{self, write_file};
use codeword_cli::{code_source, Command, ErrorSpec, ExperimentConfig, Format, Report};

#[derive(Parser)]
#[command(name = "codeword", version, about = "Simulate stabilizer-free encodings, error recovery and legal-operator constraints")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Check the encoding, counting identities and the per-qubit product relations.
    Verify(Common),
    /// Corrupt encoded states and recover them by decoding and in place.
    Recover(Common),
    /// Build the constraint basis and test gauge, representation and commutator relations.
    Constraints(Common),
    /// Write a built-in code as a spec file (to --out) and report the round trip.
    ExportSpec(Common),
}

#[derive(Args)]
struct Common {
    /// Built-in code: repetition3, perfect5 or steane7.
    #[arg(long)]
    code: Option<String>,
    /// TOML code specification.
    #[arg(long, value_name = "PATH")]
    spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Environment dimension for env errors.
    #[arg(long, default_value_t = DEFAULT_ENV_DIM)]
    env_dim: usize,
    /// Error event, e.g. `standard:a=3`, `coherent:seed=5`, `mixture:terms=3`, `env:qubit=2,dim=4`.
    #[arg(long)]
    error: Option<ErrorSpec>,
    #[arg(long, default_value = "table")]
    format: Format,
    /// Report destination (spec destination for export-spec).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn config(command: Command, c: Common) -> anyhow::Result<ExperimentConfig> {
    let cfg = ExperimentConfig {
        command,
        code: code_source(c.code.as_deref(), c.spec_file.as_deref())?,
        seed: c.seed,
        trials: c.trials,
        env_dim: c.env_dim,
        error: c.error,
        output_path: c.out,
        format: c.format,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<Report> {
    let (command, common) = match cli.command {
        Sub::Verify(c) => (Command::Verify, c),
        Sub::Recover(c) => (Command::Recover, c),
        Sub::Constraints(c) => (Command::Constraints, c),
        Sub::ExportSpec(c) => (Command::ExportSpec, c),
    };
    let cfg = config(command, common)?;
    if command == Command::ExportSpec {
        let (text, report) = suites::cmd_export_spec(&cfg)?;
        if cfg.output_path.is_none() {
            print!("{text}");
        } else {
            print!("{}", report.render(cfg.format));
        }
        return Ok(report);
    }
    let report = suites::run(&cfg)?;
    let rendered = report.render(cfg.format);
    match &cfg.output_path {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(r) if r.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
