use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "spencer", version, about = "Spencer operators, mirror transformations and Spencer-complex diagnostics")]
pub struct Cli {
    /// Rank computations: exact rationals or floating point.
    #[arg(long, value_enum, default_value_t = Mode::Rational, global = true)]
    pub mode: Mode,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for randomized checks; required whenever one is requested.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load or build an algebra and check the Jacobi identity.
    Algebra(AlgebraCmd),
    /// Operator matrices, nilpotency and well-definedness reports.
    Spencer(SpencerCmd),
    /// Mirror transformations and intertwining checks.
    Mirror(MirrorCmd),
    /// Spencer complex cohomology, mirror invariance and Künneth comparison.
    Complex(ComplexCmd),
    /// Lattice bundle diagnostics.
    Bundle(BundleCmd),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct AlgebraSource {
    /// Builtin algebra: so3, sl2, sl3, sl(n), su(n), abelian(n).
    #[arg(long)]
    pub builtin: Option<String>,
    /// Algebra JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct LambdaSource {
    /// Coefficients of λ in the dual basis, e.g. `0,0,1` or `1/2,-1,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// JSON array of `"p/q"` strings.
    #[arg(long, conflicts_with = "lambda")]
    pub lambda_file: Option<PathBuf>,
    /// Accept λ = 0.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OperatorOptions {
    /// Truncation degree.
    #[arg(long = "K", default_value_t = 4)]
    pub k: usize,
    /// Leibniz convention: unsigned or paper-signed.
    #[arg(long, default_value = "unsigned")]
    pub convention: String,
    /// How tensors pair with vectors: basis or killing.
    #[arg(long, default_value = "basis")]
    pub pairing: String,
}

#[derive(Args, Debug)]
pub struct AlgebraCmd {
    #[command(flatten)]
    pub source: AlgebraSource,
}

#[derive(Args, Debug)]
pub struct SpencerCmd {
    #[command(flatten)]
    pub source: AlgebraSource,
    #[command(flatten)]
    pub lambda: LambdaSource,
    #[command(flatten)]
    pub op: OperatorOptions,
    /// Exit 1 if δ² ≠ 0.
    #[arg(long)]
    pub assert_nilpotent: bool,
    /// Also audit this many seeded random λ (needs --seed).
    #[arg(long, default_value_t = 0)]
    pub random_lambdas: usize,
}

#[derive(Args, Debug)]
pub struct MirrorCmd {
    #[command(flatten)]
    pub source: AlgebraSource,
    #[command(flatten)]
    pub lambda: LambdaSource,
    #[command(flatten)]
    pub op: OperatorOptions,
    /// sign, identity, negate-transpose, inverse-mirror or weyl:<perm>.
    #[arg(long, default_value = "sign")]
    pub transform: String,
    /// MirrorTransform JSON file (overrides --transform).
    #[arg(long)]
    pub transform_file: Option<PathBuf>,
    #[arg(long)]
    pub assert_involution: bool,
    #[arg(long)]
    pub assert_antisymmetry: bool,
    #[arg(long)]
    pub assert_intertwining: bool,
}

#[derive(Args, Debug)]
pub struct ComplexCmd {
    #[command(flatten)]
    pub source: AlgebraSource,
    #[command(flatten)]
    pub lambda: LambdaSource,
    #[command(flatten)]
    pub op: OperatorOptions,
    /// Flat torus base model of this dimension.
    #[arg(long, default_value_t = 2, conflicts_with = "dga_file")]
    pub torus: usize,
    /// DGAModel JSON file.
    #[arg(long)]
    pub dga_file: Option<PathBuf>,
    /// total or diagonal.
    #[arg(long, default_value = "total")]
    pub grading: String,
    /// Compare against the complex mirrored by this transform.
    #[arg(long)]
    pub mirror: Option<String>,
    /// Exit 1 if the chain map fails to commute or the dims differ.
    #[arg(long, requires = "mirror")]
    pub assert_mirror_invariant: bool,
    /// Include the Künneth dimension comparison.
    #[arg(long)]
    pub kunneth: bool,
    /// Cup products of degree-one base classes, each sampled this many
    /// times for well-definedness (needs --seed).
    #[arg(long, default_value_t = 0)]
    pub cup_samples: usize,
}

#[derive(Args, Debug)]
pub struct BundleCmd {
    /// GridBundle JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Builtin fibre algebra for a constant-field bundle.
    #[arg(long, conflicts_with = "file")]
    pub builtin: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    /// Base torus dimension.
    #[arg(long, default_value_t = 2)]
    pub base_dim: usize,
    /// Constant λ.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Constant ω components, one coefficient list per base direction
    /// separated by `;`. Defaults to ω = 0.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, format!("{text}\n")),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            if let Err(e) = emit(&cli, &text).or_else(|e| if e.kind() == std::io::ErrorKind::BrokenPipe { Ok(()) } else { Err(e) }) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            for line in &outcome.failures {
                eprintln!("check failed: {line}");
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
