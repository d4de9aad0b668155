//! Command-line front end for the slab ground-state toolkit: config loading, artifacts, subcommands.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::output::ArtifactWriter;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Numeric(#[from] slab_core::Error),
    #[error("checks failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub const SUBCOMMANDS: [&str; 9] = [
    "scattering3d",
    "scattering2d",
    "coeffs",
    "sums",
    "energy",
    "regions",
    "overlap",
    "oracle",
    "verify-lemmas",
];

/// Runs one subcommand and returns its outcome together with the artifact paths.
pub fn run(subcommand: &str, cfg: &RunConfig) -> Result<(Outcome, Vec<std::path::PathBuf>), CliError> {
    let mut out = ArtifactWriter::new(cfg, subcommand)?;
    let outcome = match subcommand {
        "scattering3d" => commands::scattering3d(cfg, &mut out),
        "scattering2d" => commands::scattering2d(cfg, &mut out),
        "coeffs" => commands::coeffs(cfg, &mut out),
        "sums" => commands::sums(cfg, &mut out),
        "energy" => commands::energy(cfg, &mut out),
        "regions" => commands::regions(cfg, &mut out),
        "overlap" => commands::overlap(cfg, &mut out),
        "oracle" => commands::oracle(cfg, &mut out),
        "verify-lemmas" => commands::verify_lemmas(cfg, &mut out),
        other => Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    }?;
    Ok((outcome, out.written))
}
