use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use woldkit::error::WoldError;
use woldkit::gen::{generate, Params, GENERATOR_KINDS};
use woldkit::model::Config;
use woldkit::report::{analyze, AnalysisInput, Status};
use woldkit::verify::{verify, Suite};

/// Exit code for a completed analysis whose hypotheses fail.
const EXIT_PRECONDITION: u8 = 2;
/// Exit code for a verify run with at least one failing suite.
const EXIT_SUITE_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "woldkit", version, about = "Regularity, growth and Wold-type decompositions of finite covariant representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a representation or shift spec file.
    Analyze {
        file: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative singular-value cutoff.
        #[arg(long)]
        tol_rank: Option<f64>,
        /// Levels for the growth check and the decomposition.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Write a seeded instance file.
    Generate {
        /// One of: random, left-invertible, expansive, gamma-expansive, concave, block, unilateral, bilateral.
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated key=value pairs, e.g. `d=2,m=3`.
        #[arg(long, default_value = "")]
        params: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded property suites.
    Verify {
        /// Suite name or `all`.
        suite: String,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Override the semidefiniteness slack.
        #[arg(long)]
        tol_psd: Option<f64>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    let mut cfg = Config::from_env();
    match command {
        Command::Analyze { file, out, tol_rank, horizon } => {
            if let Some(t) = tol_rank {
                cfg.tol.rank = t;
            }
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let input = AnalysisInput::parse(&text).with_context(|| format!("parsing {}", file.display()))?;
            let report = analyze(&input, file_name(&file).as_deref(), horizon, &cfg)?;
            if let Some(out) = out {
                write(&out, &report.to_json())?;
            }
            print!("{}", report.text());
            Ok(match report.status {
                Status::Ok => 0,
                Status::PreconditionFailed => EXIT_PRECONDITION,
            })
        }
        Command::Generate { kind, seed, params, out } => {
            if !GENERATOR_KINDS.contains(&kind.as_str()) {
                anyhow::bail!(WoldError::InvalidParams(format!(
                    "unknown kind {kind}; expected one of {}",
                    GENERATOR_KINDS.join(", ")
                )));
            }
            let generated = generate(&kind, &Params::parse(&params)?, seed)?;
            match out {
                Some(out) => write(&out, &generated.to_json())?,
                None => print!("{}", generated.to_json()),
            }
            Ok(0)
        }
        Command::Verify { suite, count, seed, tol_psd, out } => {
            if let Some(t) = tol_psd {
                cfg.tol.psd = t;
            }
            let suites = Suite::parse(&suite)?;
            let report = verify(&suites, count, seed, &cfg);
            if let Some(out) = out {
                write(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            }
            print!("{}", report.text());
            Ok(if report.ok() { 0 } else { EXIT_SUITE_FAILED })
        }
    }
}

fn file_name(path: &Path) -> Option<String> {
    path.file_name().map(|n| n.to_string_lossy().into_owned())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
