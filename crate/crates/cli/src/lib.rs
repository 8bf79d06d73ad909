//! Command-line front end for the `subdiff` solver.
//!
//! Exit status: 0 success, 2 configuration error, 3 solver failure,
//! 4 certificate failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod presets;

pub use config::{parse_config, Config, RunConfig, StudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SUBDIFF_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "subdiff-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{key}: {message}")]
    Validation { key: String, message: String },

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Solver(#[from] subdiff::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use subdiff::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_CONFIG,
            CliError::Solver(e) => match e {
                E::NonConvergence { .. } | E::AccuracyNotAttained(_) | E::NonFinite(_) => EXIT_SOLVER,
                _ => EXIT_CONFIG,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Io(_) => "io",
            CliError::Usage(_) => "usage",
            CliError::Solver(_) if self.exit_code() == EXIT_SOLVER => "solver",
            CliError::Solver(_) => "problem",
        }
    }

    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_status": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "subdiff", version, about = "Time-fractional diffusion solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Built-in problem: zero, eigenmode, manufactured, aniso2d, stationary
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,

    /// Output directory [default: $SUBDIFF_OUT_DIR, then ./subdiff-out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Worker threads for the data-parallel kernels
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,

    /// Flips the sign of U_m after the run (diagnose only)
    #[arg(long, global = true, hide = true, value_name = "STEP")]
    pub inject_sign_flip: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the scheme and write solution snapshots and a run summary
    Solve,
    /// Refinement ladder against an oracle or by self-convergence
    Study,
    /// Energy certificates, kernel gap, weak-form residuals and error terms
    Diagnose,
    /// Kernel approximation gap report
    KernelGap,
}

/// Loads the configuration named on the command line.
pub fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let study = cli.command == Command::Study;
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), preset) => {
            let text = config::read_config_text(path)?;
            config::load(Some(&text), preset.as_deref(), study)?
        }
        (None, Some(preset)) => config::load(None, Some(preset), study)?,
        (None, None) => return Err(CliError::Usage("either --config or --preset is required".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.run_mut().seed = seed;
    }
    Ok(cfg)
}

/// Flag, then config, then environment, then the built-in default.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg.and_then(|c| c.out_dir.clone()) {
        return p;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

#[cfg(feature = "parallel")]
fn install_threads(n: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn install_threads(_: usize) -> Result<(), CliError> {
    Ok(())
}

/// Runs the parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let mut out_dir = resolve_out_dir(cli.out.as_deref(), None);
    let result = (|| {
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            install_threads(n)?;
        }
        let cfg = load_config(&cli)?;
        out_dir = resolve_out_dir(cli.out.as_deref(), Some(cfg.run()));
        let options = commands::Options { out_dir: out_dir.clone(), inject_sign_flip: cli.inject_sign_flip };
        match cli.command {
            Command::Solve => commands::solve(cfg.run(), &options),
            Command::Study => match &cfg {
                Config::Study(s) => commands::study(s, &options),
                Config::Run(_) => unreachable!("study configs are forced for the study command"),
            },
            Command::Diagnose => commands::diagnose(cfg.run(), &options),
            Command::KernelGap => commands::kernel_gap(cfg.run(), &options),
        }
    })();
    match result {
        Ok(outcome) => {
            print!("{}", outcome.text);
            outcome.status
        }
        Err(e) => {
            let record = e.record();
            let text = serde_json::to_string_pretty(&record).expect("error record serializes");
            eprintln!("{text}");
            if std::fs::create_dir_all(&out_dir).is_ok() {
                let _ = std::fs::write(out_dir.join("error.json"), text + "\n");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Solver(subdiff::Error::InvalidOrder(1.0)).exit_code(), 2);
        let e = CliError::Solver(subdiff::Error::NonConvergence { iterations: 3, residual: 1.0 });
        assert_eq!(e.exit_code(), 3);
        assert_eq!(e.record()["error"]["kind"], "solver");
    }

    #[test]
    fn out_dir_precedence() {
        let cfg = config::load(Some("[problem]\npreset = \"zero\"\n[output]\ndir = \"cfg\"\n"), None, false).unwrap();
        assert_eq!(resolve_out_dir(Some(Path::new("flag")), Some(cfg.run())), PathBuf::from("flag"));
        assert_eq!(resolve_out_dir(None, Some(cfg.run())), PathBuf::from("cfg"));
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from(["subdiff", "kernel-gap", "--preset", "eigenmode", "--seed", "3"]).unwrap();
        assert_eq!(cli.command, Command::KernelGap);
        assert_eq!(cli.seed, Some(3));
        assert!(Cli::try_parse_from(["subdiff", "solve", "--threads", "x"]).is_err());
        let cli = Cli::try_parse_from(["subdiff", "study", "--preset", "zero"]).unwrap();
        assert!(matches!(load_config(&cli).unwrap(), Config::Study(_)));
        let cli = Cli::try_parse_from(["subdiff", "solve"]).unwrap();
        assert_eq!(load_config(&cli).unwrap_err().exit_code(), 2);
    }
}
