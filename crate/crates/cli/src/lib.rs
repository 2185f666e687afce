//! `holonomy` command-line tool: isoholonomic bounds, tight plan synthesis,
//! verification, inequality falsification and Bloch-sphere export.
//!
//! Exit codes: 0 success, 2 invalid input, 3 matrix not unitary,
//! 4 insufficient complement for ancillas, 5 verification failed.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use holonomy_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_UNITARY: i32 = 3;
pub const EXIT_INSUFFICIENT_COMPLEMENT: i32 = 4;
pub const EXIT_VERIFICATION_FAILED: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    NotUnitary(String),
    #[error("{0}")]
    InsufficientComplement(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::NotUnitary(_) => EXIT_NOT_UNITARY,
            CliError::InsufficientComplement(_) => EXIT_INSUFFICIENT_COMPLEMENT,
            CliError::VerificationFailed(_) => EXIT_VERIFICATION_FAILED,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotUnitary { .. } => CliError::NotUnitary(e.to_string()),
            CoreError::InsufficientComplement { .. } => CliError::InsufficientComplement(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "holonomy", version, about = "Isoholonomic bounds and tight holonomic gate synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Isoholonomic bound of a gate.
    Bound(BoundArgs),
    /// Write a library gate as a matrix file.
    Gate(GateArgs),
    /// Build the tight plan for a gate.
    Synthesize(SynthesizeArgs),
    /// Simulate a plan and check that it is tight.
    Verify(VerifyArgs),
    /// Test the isoholonomic inequality on random closed loops.
    Falsify(FalsifyArgs),
    /// Export the Bloch-sphere trajectory of one channel as CSV.
    Bloch(BlochArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Matrix file holding the gate.
    pub input: PathBuf,
    /// Bound of the gate modulo global phase.
    #[arg(long)]
    pub projective: bool,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// One of t_gate, t_prime, hadamard, cnot.
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Matrix file holding the gate.
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Ambient dimension; defaults to twice the gate dimension.
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scale every precession axis by this factor (produces a non-tight
    /// plan, for exercising verification).
    #[arg(long)]
    pub detune: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Closed,
    Numeric,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Plan file written by `synthesize`.
    pub plan: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Closed)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FalsifyArgs {
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Draw each loop's dimension uniformly from `dim..=max_dim`.
    #[arg(long)]
    pub max_dim: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    /// Draw each loop's rank uniformly from `rank..=max_rank`.
    #[arg(long)]
    pub max_rank: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub loops: usize,
    /// Base seed. Precedence: this flag, then HOLONOMY_SEED, then 0.
    #[arg(long, env = "HOLONOMY_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Samples per loop (intervals on the unit time grid).
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Number of Hermitian generators per loop.
    #[arg(long, default_value_t = 3)]
    pub generators: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlochArgs {
    /// Plan file written by `synthesize`.
    pub plan: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit code.
/// Normal output goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match commands::dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
