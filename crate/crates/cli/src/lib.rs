//! Command-line frontend: argument parsing, exit codes and report printing.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use isocrys::Error;

pub mod certificate;
mod commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// A named property did not hold.
    Verification {
        property: String,
        detail: String,
    },
    Precision(String),
    /// Standard output was closed by the reader, as in `isocrys ... | head`.
    OutputClosed,
}

impl Failure {
    pub fn verification(property: impl Into<String>, detail: impl Into<String>) -> Failure {
        Failure::Verification {
            property: property.into(),
            detail: detail.into(),
        }
    }

    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Verification { .. } => EXIT_VERIFICATION,
            Failure::Precision(_) => EXIT_PRECISION,
            Failure::OutputClosed => EXIT_OK,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Verification { property, detail } if detail.is_empty() => write!(f, "verification failed: {property}"),
            Failure::Verification { property, detail } => write!(f, "verification failed: {property}: {detail}"),
            Failure::Precision(m) => write!(f, "precision or budget exhausted: {m}"),
            Failure::OutputClosed => write!(f, "output closed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match &e {
            Error::Precision(_) | Error::BudgetExhausted { .. } => Failure::Precision(e.to_string()),
            Error::Invalid(_) | Error::Multiplicity { .. } | Error::FieldIncompatibility(_) | Error::NotPrime(_) | Error::NotPGroup(_) => {
                Failure::Usage(e.to_string())
            }
            Error::NotPerturbateur(m) => Failure::verification("perturbateur", m.clone()),
            Error::NoSymplecticEigenbasis(m) => Failure::verification("symplectic eigenbasis", m.clone()),
            Error::CocycleViolation(m) => Failure::verification("cocycle law", m.clone()),
            Error::InternalContradiction(m) => Failure::verification("internal consistency", m.clone()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Failure::OutputClosed;
        }
        Failure::Usage(e.to_string())
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "isocrys", version, about = "Slopes of φ-modules, admissible stable filtrations and Minkowski bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Emit JSON instead of plain text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Newton slopes of a φ-module.
    Slopes {
        #[arg(long)]
        module: PathBuf,
        #[arg(long)]
        precision: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Isoclinic decomposition, or the orthogonal pieces under a group action.
    Decompose {
        #[arg(long)]
        module: PathBuf,
        /// Group action; requires a polarized module.
        #[arg(long)]
        group: Option<PathBuf>,
        #[arg(long)]
        precision: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Admissible, Lagrangian, Galois-stable filtrations.
    #[command(subcommand)]
    Filtration(FiltrationCommand),
    /// Descends a φ-module (and a certified filtration) along the descent datum.
    Descend {
        /// Certificate from `filtration find`; replaces the input flags.
        certificate: Option<PathBuf>,
        #[arg(long, conflicts_with = "certificate", required_unless_present = "certificate")]
        module: Option<PathBuf>,
        #[arg(long, conflicts_with = "certificate", requires = "module")]
        group: Option<PathBuf>,
        #[arg(long, conflicts_with = "certificate")]
        extension: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Group-level and action-level checks.
    #[command(subcommand)]
    Group(GroupCommand),
    /// Minkowski bound M(n), or the table of d_g = M(2g).
    Minkowski {
        #[arg(long, conflicts_with = "table", required_unless_present = "table")]
        n: Option<u64>,
        /// Largest g in the table.
        #[arg(long, value_name = "G_MAX")]
        table: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Q8 ≀ S_g in the symplectic group of the supersingular module.
    WreathDemo {
        #[arg(long)]
        g: u64,
        #[arg(long, default_value_t = 64)]
        precision: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Degree bounds from local data `t:card Φ` per place.
    Degree {
        #[arg(long, value_name = "T1:C1,T2:C2,...")]
        local: String,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand, Debug)]
pub enum FiltrationCommand {
    /// Searches and writes a certificate.
    Find(FindArgs),
    /// Re-verifies a certificate.
    Check {
        certificate: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug, Clone)]
pub struct FindArgs {
    #[arg(long)]
    pub module: PathBuf,
    #[arg(long)]
    pub group: Option<PathBuf>,
    /// Extension L/K; defaults to the group document's field.
    #[arg(long)]
    pub extension: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Sampled)]
    pub mode: Mode,
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    /// Starting precision; the module's precision when absent.
    #[arg(long)]
    pub precision: Option<u32>,
    /// Accept actions that do not commute with φ.
    #[arg(long)]
    pub relaxed: bool,
    /// Certificate path; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GroupCommand {
    /// Validates a group document and its action.
    Check {
        #[arg(long)]
        group: PathBuf,
        /// φ-module the group should act on.
        #[arg(long)]
        module: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

pub(crate) fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) | Err(Failure::OutputClosed) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{f}");
            f.code()
        }
    }
}
