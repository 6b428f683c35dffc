//! `gaussprop` command-line front end.
//!
//! Exit codes: 0 success, 1 threshold failure or runtime error, 2 invalid
//! scenario, 3 grid/step combination the propagator cannot resolve.

mod commands;
mod output;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaussprop::propagate::StepMethod;
use gaussprop::Error;

use crate::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "gaussprop", version, about = "Gaussian-kernel propagators: runs, audits and cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory.
    #[arg(long, global = true, env = "GAUSSPROP_OUT", default_value = ".")]
    out: PathBuf,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the scenario stepping method.
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Evolve the scenario packet and record per-step observables.
    Evolve { scenario: PathBuf },
    /// Norm-conservation audit of the configured variants.
    Audit { scenario: PathBuf },
    /// Certify the Fresnel moment identities by regularized quadrature.
    Moments { scenario: PathBuf },
    /// Monte-Carlo walk against its exact or oracle density.
    Walk { scenario: PathBuf },
    /// Convergence of kernel evolution towards Crank-Nicolson.
    Compare { scenario: PathBuf },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Dense,
    Spectral,
}

impl From<MethodArg> for StepMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dense => StepMethod::Dense,
            MethodArg::Spectral => StepMethod::Spectral,
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Evolve { .. } => "evolve",
            Command::Audit { .. } => "audit",
            Command::Moments { .. } => "moments",
            Command::Walk { .. } => "walk",
            Command::Compare { .. } => "compare",
        }
    }

    fn scenario(&self) -> &Path {
        match self {
            Command::Evolve { scenario }
            | Command::Audit { scenario }
            | Command::Moments { scenario }
            | Command::Walk { scenario }
            | Command::Compare { scenario } => scenario,
        }
    }
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDITY: u8 = 3;

/// Maps a failed run onto the exit-code contract.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<commands::ValidityFailure>().is_some() {
        return EXIT_VALIDITY;
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Unresolved { .. } | Error::BoundaryViolation { .. }) => EXIT_VALIDITY,
        Some(
            Error::InvalidArgument(_)
            | Error::InvalidGrid(_)
            | Error::NonPositiveStep(_)
            | Error::Contradictory(_)
            | Error::NonAdmissible(_)
            | Error::Quadrature(_)
            | Error::TooFewParticles(_)
            | Error::NoBracket,
        ) => EXIT_CONFIG,
        _ => EXIT_THRESHOLD,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = cli.command.scenario();
    let mut scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(method) = cli.method {
        scenario.method = method.into();
    }
    let stem = scenario.outputs.stem.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });
    let mut artifacts = output::Artifacts::new(&cli.out, &stem, cli.command.name());

    let result = match &cli.command {
        Command::Evolve { .. } => commands::evolve::run(&scenario, &mut artifacts),
        Command::Audit { .. } => commands::audit::run(&scenario, &mut artifacts),
        Command::Moments { .. } => commands::moments::run(&scenario, &mut artifacts),
        Command::Walk { .. } => commands::walk::run(&scenario, &mut artifacts),
        Command::Compare { .. } => commands::compare::run(&scenario, &mut artifacts),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match artifacts.write() {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_THRESHOLD);
        }
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("threshold failed: {f}");
        }
        ExitCode::from(EXIT_THRESHOLD)
    }
}
