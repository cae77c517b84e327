//! `mufact`: generate instances, factorise correlation matrices into unitary tuples, run the
//! ε → 2ε correction, estimate Schur multiplier norms and re-verify every artifact.
//!
//! Every command prints a JSON report on stdout. Artifacts go to `--out` when given and are
//! embedded in the report otherwise. Exit codes: 0 success, 2 malformed input, 3 residual
//! above `--tol`, 4 verification failure, 5 numeric domain error.

mod commands;
mod error;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "mufact", version, about = "Mixed-unitary factorisations of depolarised Schur multipliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random correlation matrix, unitary tuple or planted hull member.
    Gen(GenArgs),
    /// Search for a convex combination of unitary-tuple Gram matrices close to C.
    Factorise(FactoriseArgs),
    /// Build the mixed unitary ensemble realising δ_d ⊗ S_C from a tuple ensemble.
    Mu(MuArgs),
    /// Recover unitary tuples from a mixed unitary realisation of δ_d ⊗ S_C.
    Extract(ExtractArgs),
    /// Correct an approximate realisation into a certified hull member at dimension 2d.
    Correct(CorrectArgs),
    /// Bracket the Schur multiplier norms of a symbol A.
    Norms(NormsArgs),
    /// Re-verify artifacts from scratch.
    Verify(VerifyArgs),
    /// Diagonal biaverage of the map with the given Choi matrix.
    Biaverage(BiaverageArgs),
    /// Unitary dilation of a contraction X with X in both diagonal corners.
    Dilate(DilateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKind {
    Correlation,
    Tuple,
    FkdConvex,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Number of tuples in a planted instance.
    #[arg(long, default_value_t = 3)]
    pub atoms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; a directory for fkd-convex, which writes C.json and certificate.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactoriseArgs {
    #[arg(long = "C")]
    pub c: PathBuf,
    #[arg(long)]
    pub d: usize,
    /// Tuples per restart; defaults to k^2 + 1.
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Frobenius residual accepted as success.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MuArgs {
    #[arg(long)]
    pub tuples: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Defaults to n / k.
    #[arg(long)]
    pub d: Option<usize>,
    /// Defaults to the size of C.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[arg(long = "C")]
    pub c: PathBuf,
    #[arg(long)]
    pub phi: PathBuf,
    /// Caller's bound on the distance between δ_d ⊗ S_C and the ensemble.
    #[arg(long)]
    pub epsilon: f64,
    /// Seed of the heuristic lower bound on that distance.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Do not compute the heuristic lower bound.
    #[arg(long)]
    pub skip_premise: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    /// A is positive semidefinite: report the maximal diagonal entry.
    #[arg(long)]
    pub psd: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyKind {
    Correlation,
    Ensemble,
    Certificate,
    Channel,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub what: VerifyKind,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Allowed deviation between stored and recomputed certificate matrices.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BiaverageArgs {
    #[arg(long)]
    pub choi: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DilateArgs {
    #[arg(long = "X")]
    pub x: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: &Cli, args: Vec<String>) -> Result<(Report, u8), CliError> {
    let (name, seed) = match &cli.command {
        Command::Gen(a) => ("gen", Some(a.seed)),
        Command::Factorise(a) => ("factorise", Some(a.seed)),
        Command::Mu(_) => ("mu", None),
        Command::Extract(_) => ("extract", None),
        Command::Correct(a) => ("correct", Some(a.seed)),
        Command::Norms(a) => ("norms", Some(a.seed)),
        Command::Verify(_) => ("verify", None),
        Command::Biaverage(_) => ("biaverage", None),
        Command::Dilate(_) => ("dilate", None),
    };
    let mut report = Report::new(name, args, seed);
    let code = match &cli.command {
        Command::Gen(a) => commands::gen(a, &mut report),
        Command::Factorise(a) => commands::factorise(a, &mut report),
        Command::Mu(a) => commands::mu(a, &mut report),
        Command::Extract(a) => commands::extract(a, &mut report),
        Command::Correct(a) => commands::correct(a, &mut report),
        Command::Norms(a) => commands::norms(a, &mut report),
        Command::Verify(a) => commands::verify(a, &mut report),
        Command::Biaverage(a) => commands::biaverage(a, &mut report),
        Command::Dilate(a) => commands::dilate(a, &mut report),
    }?;
    Ok((report, code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = std::env::args().skip(1).collect();
    match run(&cli, args) {
        Ok((report, code)) => {
            report.print();
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
