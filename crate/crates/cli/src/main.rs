mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use periph_core::Error;

/// Peripheral spectra and peripheral Poisson boundaries of unital CP maps.
#[derive(Parser, Debug)]
#[command(name = "periph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Peripheral eigenvalues, multiplicities and semisimplicity.
    Spectrum {
        channel: PathBuf,
        #[arg(long, default_value_t = periph_core::spectral::DEFAULT_TOL_PERIPHERAL)]
        tol_peripheral: f64,
    },
    /// Run verification suites on the peripheral boundary.
    Verify {
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Depth of the dilation tower.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Powers used by the stability suite.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        k: Vec<usize>,
    },
    /// Peripheral product x∘y, cross-checked across algorithms.
    Product {
        channel: PathBuf,
        x: PathBuf,
        y: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Spectral)]
        method: Method,
        /// Number of terms in the Cesàro average.
        #[arg(long, default_value_t = 10_000)]
        cesaro_n: usize,
        /// Power n in (λμ)^{-n} τ^n(xy).
        #[arg(long, default_value_t = 200)]
        limit_n: usize,
        /// Tower depth for the dilation method.
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Generate an example channel (JSON) or the Toeplitz table (CSV).
    Example {
        #[command(subcommand)]
        example: Example,
    },
}

#[derive(Subcommand, Debug)]
enum Example {
    /// Conjugation by a diagonal unitary.
    Unitary {
        /// Diagonal entries, e.g. "1,i,-1,cis(0.785)".
        #[arg(long)]
        diag: String,
    },
    /// Mixture of tensor powers of the Weyl pair.
    Weyl {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        probs: String,
    },
    /// Random walk on a finite abelian group, e.g. "Z4" or "Z2xZ3".
    GroupWalk {
        #[arg(long, default_value = "Z2")]
        group: String,
        /// Weights μ(g) in table order.
        #[arg(long)]
        mu: String,
    },
    /// Truncated Toeplitz norms r(M) as CSV.
    ToeplitzDemo {
        #[arg(long = "M", value_delimiter = ',', default_value = "32,64,128,256")]
        m: Vec<usize>,
        /// Fourier coefficients "k:re[:im],...".
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value = "1")]
        lambda: String,
        /// Optional second term, enabling the product-law defect column.
        #[arg(long)]
        symbol2: Option<String>,
        #[arg(long, default_value = "1")]
        lambda2: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Cstar,
    Automorphism,
    Stability,
    Module,
    Dilation,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Spectral,
    Cesaro,
    Limit,
    Dilation,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                Error::CapExceeded { .. } => 3,
                Error::ToleranceConflict { .. } => 4,
                Error::NotInPeripheralSpan { .. } => 5,
                Error::NotSquare { .. }
                | Error::ShapeMismatch { .. }
                | Error::NotPerfectSquare(_)
                | Error::NonFinite
                | Error::Empty(_)
                | Error::InvalidProbabilities(_)
                | Error::NotUnitary(_)
                | Error::InvalidGroup(_)
                | Error::TruncationTooSmall { .. } => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("periph: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
