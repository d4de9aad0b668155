use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slab::config::RunConfig;
use slab::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "slab",
    version,
    about = "Ground-state energy of dilute Bose gases in thin slabs",
    after_help = "Any config field can be overridden as --section.key value or --section.key=value, e.g. --slab.n 1000 --sums.frak_method cesaro."
)]
struct Cli {
    /// TOML config file; fields not given keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (same as --output.dir).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Energy formula: auto, I or III (same as --energy.region).
    #[arg(long, global = true)]
    region: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scattering length, Neumann eigenvalue and ball profile in three dimensions.
    Scattering3d,
    /// Induced planar potential and disk Neumann problem.
    Scattering2d,
    /// Per-mode coefficient table.
    Coeffs,
    /// Lattice sums for the thick-slab correction terms.
    Sums,
    /// Ground-state energy expansion at the configured point.
    Energy,
    /// Region classification along a thickness sweep.
    Regions,
    /// Thin- and thick-slab formulas at points in the overlap region.
    Overlap,
    /// Exact small-system checks in truncated Fock space.
    Oracle,
    /// Numerical checks of the auxiliary scattering estimates.
    VerifyLemmas,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scattering3d => "scattering3d",
            Command::Scattering2d => "scattering2d",
            Command::Coeffs => "coeffs",
            Command::Sums => "sums",
            Command::Energy => "energy",
            Command::Regions => "regions",
            Command::Overlap => "overlap",
            Command::Oracle => "oracle",
            Command::VerifyLemmas => "verify-lemmas",
        }
    }
}

type Overrides = Vec<(String, String)>;

/// Pulls `--section.key value` and `--section.key=value` pairs out of argv before clap sees it.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let dotted = arg.strip_prefix("--").filter(|s| s.split('=').next().is_some_and(|k| k.contains('.')));
        match dotted {
            Some(body) => match body.split_once('=') {
                Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
                None => {
                    let v = it.next().ok_or_else(|| CliError::Config(format!("{body}: missing value")))?;
                    overrides.push((body.to_string(), v));
                }
            },
            None => rest.push(arg),
        }
    }
    Ok((rest, overrides))
}

fn run() -> Result<bool, CliError> {
    let (args, mut overrides) = split_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    if let Some(dir) = cli.out {
        overrides.push(("output.dir".into(), dir));
    }
    if let Some(region) = cli.region {
        overrides.push(("energy.region".into(), region));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let (outcome, written) = slab::run(cli.command.name(), &cfg)?;
    println!("{}", outcome.summary.trim_end());
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("slab: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("slab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
