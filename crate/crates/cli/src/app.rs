//! Argument parsing, output routing and exit codes.
//!
//! Exit codes: 0 all checks passed, 1 invalid input or arguments,
//! 2 infeasible probabilities or degenerate design, 3 a verification
//! check failed. Human-readable text goes to stderr; stdout carries the
//! JSON report with `--format json`, and sweep CSV in text mode unless
//! `--csv` names a file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use usd_embed_core::NormKind;

use crate::commands::{
    cmd_atom, cmd_cost, cmd_discriminate, cmd_verify, Instance, Settings, DEFAULT_SAMPLES, DEFAULT_SEED,
    DEFAULT_TRIALS,
};
use crate::error::CliError;
use crate::problem::{ProblemFile, SweepRange};
use crate::report::ReportFile;

/// Scale factor applied to every verification tolerance.
pub const TOLERANCE_ENV: &str = "USD_EMBED_TOL";

#[derive(Parser, Debug)]
#[command(name = "usd-embed", version, about = "Time-energy cost of unitary embeddings for unambiguous state discrimination")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format for the report
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    /// Write the JSON report to this file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Write sweep rows to this CSV file
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,

    /// RNG seed (decimal or 0x-prefixed hex)
    #[arg(long, global = true, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Spectral,
    Hs,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Spectral => NormKind::Spectral,
            NormArg::Hs => NormKind::HilbertSchmidt,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Problem file (JSON); defaults to two real states of overlap 0.6
    #[arg(short, long)]
    pub input: Option<PathBuf>,

    /// Conclusive probabilities, comma separated
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,

    /// Prior probabilities, comma separated
    #[arg(long, value_delimiter = ',')]
    pub priors: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the optimal embedding and simulate the measurement
    Discriminate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Closed-form embedding cost
    Cost {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = NormArg::Spectral)]
        norm: NormArg,
        /// Symmetric two-state cost curve, c_min:c_max:steps
        #[arg(long)]
        sweep: Option<SweepRange>,
    },
    /// Property suite: optimality, lower bound, dilation, ancilla size
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, hide = true)]
        inject_theta_scale: Option<f64>,
    },
    /// Three-level atom pulse design and RWA validation
    Atom {
        /// Problem file whose `scenario` holds the atom configuration
        #[arg(short, long)]
        input: Option<PathBuf>,
        /// Overlap sweep, c_min:c_max:steps
        #[arg(long)]
        sweep: Option<SweepRange>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    }
    .map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// Reads the tolerance scale from `USD_EMBED_TOL`, defaulting to 1.
pub fn tolerance_scale(value: Option<OsString>) -> Result<f64, CliError> {
    let Some(v) = value else { return Ok(1.0) };
    let text = v.to_string_lossy();
    match text.trim().parse::<f64>() {
        Ok(f) if f > 0.0 && f.is_finite() => Ok(f),
        _ => Err(CliError::Validation(format!(
            "{TOLERANCE_ENV}: expected a positive scale factor, got {text:?}"
        ))),
    }
}

fn load(path: Option<&Path>) -> Result<Option<ProblemFile>, CliError> {
    path.map(ProblemFile::load).transpose()
}

fn instance(args: &InstanceArgs) -> Result<Instance, CliError> {
    Ok(Instance {
        problem: load(args.input.as_deref())?,
        probs: args.probs.clone(),
        priors: args.priors.clone(),
    })
}

pub fn execute(cli: &Cli, settings: &Settings) -> Result<ReportFile, CliError> {
    match &cli.command {
        Command::Discriminate { instance: i, trials } => cmd_discriminate(&instance(i)?, *trials, settings),
        Command::Cost { instance: i, norm, sweep } => cmd_cost(&instance(i)?, (*norm).into(), *sweep, settings),
        Command::Verify {
            instance: i,
            samples,
            inject_theta_scale,
        } => cmd_verify(&instance(i)?, *samples, *inject_theta_scale, settings),
        Command::Atom { input, sweep, trials } => {
            let problem = load(input.as_deref())?;
            cmd_atom(problem.as_ref(), *sweep, *trials, settings)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn summary(r: &ReportFile) -> String {
    let mut s = format!("{} (seed {:#x})\n", r.command, r.seed);
    if !r.singular_values.is_empty() {
        let sv: Vec<String> = r.singular_values.iter().map(|v| format!("{v:.6}")).collect();
        s += &format!("singular values: {}\n", sv.join(" "));
    }
    if let Some(c) = &r.costs {
        s += &format!("cost: spectral {:.12}, hs {:.12}\n", c.spectral, c.hilbert_schmidt);
    }
    if let Some(a) = &r.ancilla {
        s += &format!("ancilla levels: {} (reduced {})\n", a.canonical, a.reduced);
    }
    if let Some(m) = &r.measurement {
        s += &format!(
            "trials {}: inconclusive {} ({:.6}, expected {:.6}), errors {}\n",
            m.trials, m.inconclusive, m.inconclusive_frequency, m.expected_inconclusive, m.errors
        );
    }
    for c in &r.checks {
        s += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}

fn emit(cli: &Cli, report: &ReportFile) -> Result<(), CliError> {
    let json = report.to_json()?;
    if let Some(path) = &cli.out {
        write_file(path, &json)?;
    }
    let csv = report.csv()?;
    if let (Some(path), Some(text)) = (&cli.csv, &csv) {
        write_file(path, text)?;
    }
    let mut out = std::io::stdout().lock();
    match cli.format {
        Format::Json => {
            let _ = writeln!(out, "{json}");
        }
        Format::Text => {
            eprint!("{}", summary(report));
            if let (None, Some(text)) = (&cli.csv, &csv) {
                let _ = write!(out, "{text}");
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let scale = match tolerance_scale(std::env::var_os(TOLERANCE_ENV)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let settings = Settings::new(cli.seed, scale);
    let report = match execute(&cli, &settings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if report.passed {
        0
    } else {
        for c in report.failed_checks() {
            eprintln!("verification failed: {}: {}", c.name, c.detail);
        }
        3
    }
}
