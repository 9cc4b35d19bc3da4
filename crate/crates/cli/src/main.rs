//! `halfsup`: reproducible experiments on half-integral weight cusp forms.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Module(halfsup::Error),
    /// An invariant or acceptance check did not hold; outputs were still written.
    Failed(String),
}

impl From<halfsup::Error> for CliError {
    fn from(e: halfsup::Error) -> Self {
        CliError::Module(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Module(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Module(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "halfsup", version, about = "Sup-norm experiments for half-integral weight cusp forms")]
pub struct Cli {
    /// Plain-text `key=value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduce a point into F(2N).
    Reduce(ReduceArgs),
    /// Check the transformation law of a form on random generators.
    VerifyForm(FormArgs),
    /// Hecke eigenvalues tau(p^2), tau(p^4).
    HeckeEig(HeckeArgs),
    /// Verify the Hecke relation table.
    Relations(HeckeArgs),
    /// Build amplifier weights.
    Amplifier(AmplifierArgs),
    /// Count matrices moving z a bounded distance; optionally the counting lemma.
    CountMatrices(CountArgs),
    /// Kernel automorphy, phase equivariance and the Selberg transform.
    KernelCheck(KernelArgs),
    /// Sup norm, L2 norm and their ratio for one form.
    Supnorm(SupArgs),
    /// Supnorm over the dilated family, then the level-exponent fit.
    ScanLevels(ScanArgs),
    /// Fast invariant suite.
    Selftest,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// Point as x+yi.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
}

#[derive(Args, Debug)]
pub struct FormArgs {
    /// Library name (theta, eta8cubed, eta8cubed_d<d>) or a JSON file.
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub prec: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of random generators.
    #[arg(long)]
    pub gammas: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Entry bound for random generators.
    #[arg(long)]
    pub bound: Option<i64>,
}

#[derive(Args, Debug)]
pub struct HeckeArgs {
    #[arg(long)]
    pub form: Option<String>,
    /// Comma-separated primes.
    #[arg(long)]
    pub primes: Option<String>,
    #[arg(long)]
    pub prec: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AmplifierArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// `synthetic` or a form whose eigenvalues are used.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub prec: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long)]
    pub ell: Option<u64>,
    #[arg(long = "N")]
    pub n: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Counting-lemma mode: sum over square ell <= L.
    #[arg(long = "L")]
    pub l: Option<u64>,
    /// Random sample points for the lemma mode.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// bump:<delta> or gaussian:<rho>.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    #[arg(long)]
    pub gammas: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Spectral parameter for h(t).
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SupArgs {
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub prec: Option<usize>,
    /// Precision used for the L2 quadrature.
    #[arg(long)]
    pub l2_prec: Option<usize>,
    /// Grid as <nx>x<ny>.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub l2_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Levels 4N = 64d of the dilated family, comma-separated.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub prec: Option<usize>,
    #[arg(long)]
    pub l2_prec: Option<usize>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub l2_tol: Option<f64>,
    /// Exponent of the sanity band sup/L2 <= C N^e.
    #[arg(long)]
    pub band_exponent: Option<f64>,
}

fn threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("HALFSUP_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("HALFSUP_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    threads()?;
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.get("seed", cli.seed, 1u64)?;
    let out = PathBuf::from(settings.get_str("out", cli.out.map(|p| p.display().to_string()), "out")?);
    std::fs::create_dir_all(&out)?;
    let ctx = commands::Context {
        settings,
        out,
        seed,
        outputs: Default::default(),
    };
    commands::dispatch(&cli.command, ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Module(e)) => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(1)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("FAILED: {m}");
            ExitCode::from(1)
        }
    }
}
