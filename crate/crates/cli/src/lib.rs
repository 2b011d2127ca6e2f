//! Command-line front end: argument parsing, config resolution and JSON/CSV
//! output for every solvdyn operation.

mod commands;
mod config;

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use config::{merge_config, CliError};

pub const SCHEMA: &str = "solvdyn/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "solvdyn", version, about = "Partially hyperbolic dynamics on solvmanifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Hyperbolicity and eigen-frame of A
    Eigen,
    /// Generator of the commutant of A, optionally decomposing B
    Commutant,
    /// Check that (B, v, e) defines an automorphism of Z² ⋊_A Z
    AutValidate,
    /// Affine model Φ of an automorphism, verified exactly on generators
    ModelBuild,
    /// Least iterate of the model that is a deck translation times A^m
    ModelNormalize,
    /// Partial hyperbolicity certificate of a 3×3 torus matrix
    CertLinear,
    /// Certificate of the model map composed with a height shift k
    CertSol,
    /// Cone-field certificate of the sampled derivative cocycle
    CertCone,
    /// Entropy obstruction for an absolute center bound
    Obstruction,
    /// Lefschetz number of a torus matrix
    Lefschetz,
    /// Classify a finite quotient of the 3-torus
    QuotientClassify,
    /// Heisenberg group checks and nilmanifold quotient classification
    Heis,
    /// Lyapunov exponents of the perturbed map
    FlowLyapunov,
    /// Invariant cs- or cu-section by the graph transform
    GraphTransform,
    /// Fuller average p_c along a center leaf
    Fuller,
    /// Section return map on a grid, with optional expansivity scan
    SectionMap,
    /// Semiconjugacy of the return map to A
    Semiconjugacy,
    /// Sampled global product structure check
    GpsCheck,
    /// Height gained by iterates of the perturbed map
    HeightProgress,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Commutant => "commutant",
            Command::AutValidate => "aut-validate",
            Command::ModelBuild => "model-build",
            Command::ModelNormalize => "model-normalize",
            Command::CertLinear => "cert-linear",
            Command::CertSol => "cert-sol",
            Command::CertCone => "cert-cone",
            Command::Obstruction => "obstruction",
            Command::Lefschetz => "lefschetz",
            Command::QuotientClassify => "quotient-classify",
            Command::Heis => "heis",
            Command::FlowLyapunov => "flow-lyapunov",
            Command::GraphTransform => "graph-transform",
            Command::Fuller => "fuller",
            Command::SectionMap => "section-map",
            Command::Semiconjugacy => "semiconjugacy",
            Command::GpsCheck => "gps-check",
            Command::HeightProgress => "height-progress",
        }
    }
}

/// Every value flag is read as JSON when it parses as JSON and as a plain
/// string otherwise, then merged into the command's config.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    #[arg(long = "A", global = true)]
    pub a: Option<String>,
    #[arg(long = "B", global = true)]
    pub b: Option<String>,
    #[arg(long = "v", global = true)]
    pub v: Option<String>,
    #[arg(long = "e", global = true, allow_hyphen_values = true)]
    pub e: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<String>,
    #[arg(long, global = true)]
    pub eps: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// nv×nt, e.g. 32x8
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub maxiter: Option<String>,
    /// Fuller averaging window
    #[arg(long = "T", global = true)]
    pub window: Option<String>,
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Paired torus matrix: a preset name or a JSON matrix
    #[arg(long, global = true)]
    pub fstar: Option<String>,
    #[arg(long, global = true)]
    pub generators: Option<String>,
    #[arg(long, global = true)]
    pub flips: Option<String>,
    #[arg(long = "gamma2-log", global = true, allow_hyphen_values = true)]
    pub gamma2_log: Option<String>,
    #[arg(long, global = true)]
    pub opening: Option<String>,
    /// Iterate used by cert-cone
    #[arg(long = "N", global = true)]
    pub iterate: Option<String>,
    #[arg(long, global = true)]
    pub steps: Option<String>,
    #[arg(long, global = true)]
    pub kind: Option<String>,
    /// Point as JSON [x, y, t]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long, global = true)]
    pub length: Option<String>,
    /// Section grid nodes per side
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long = "n-terms", global = true)]
    pub n_terms: Option<String>,
    #[arg(long, global = true)]
    pub samples: Option<String>,
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<String>,
    #[arg(long = "expansivity-eps", global = true)]
    pub expansivity_eps: Option<String>,
    #[arg(long = "expansivity-steps", global = true)]
    pub expansivity_steps: Option<String>,
    #[arg(long = "half-width", global = true)]
    pub half_width: Option<String>,
    #[arg(long, global = true)]
    pub points: Option<String>,
    #[arg(long, global = true)]
    pub pushes: Option<String>,
    /// Config file: a bare config object or a previous JSON output
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

fn emit(flags: &Flags, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &flags.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Core(solvdyn::Error::Io(e.to_string()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Core(solvdyn::Error::Io(e.to_string()))),
    }
}

fn error_object(command: &str, err: &CliError) -> Value {
    let (name, kind) = match err {
        CliError::Usage(_) => ("Usage", "usage"),
        CliError::Core(e) if e.is_validation() => (e.name(), "validation"),
        CliError::Core(e) => (e.name(), "computation"),
    };
    json!({
        "schema": SCHEMA,
        "command": command,
        "error": {"name": name, "kind": kind, "message": err.to_string()},
    })
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(w) = cli.flags.workers {
        // a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    let config = merge_config(cli.command, &cli.flags)?;
    let out = commands::run(cli.command, config)?;
    let text = match cli.flags.format {
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "command": cli.command.name(),
                "config": out.config,
                "result": out.result,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Core(e.into()))?;
            s.push('\n');
            s
        }
        Format::Csv => out
            .csv
            .ok_or_else(|| CliError::Usage(format!("{} has no CSV output", cli.command.name())))?,
    };
    emit(&cli.flags, &text, stdout)
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let obj = error_object(cli.command.name(), &err);
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&obj).unwrap_or_default());
            let _ = writeln!(stderr, "error: {err}");
            match err {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
                CliError::Core(_) => EXIT_COMPUTATION,
            }
        }
    }
}
