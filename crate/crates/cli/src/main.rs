use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kdv_cli::{cmd_invariants, cmd_run, cmd_study, parse_config_with_env, CliError, RunConfig};
use kdv_cli::output::IoFailure;
use kdv_core::StudyKind;

/// Periodic KdV / generalized Benjamin solver.
///
/// Any config key can be overridden with an environment variable named
/// KDV_<SECTION>_<KEY>, e.g. KDV_GRID_N=128 or KDV_TIME_K=5e-4.
#[derive(Parser)]
#[command(name = "kdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a configuration and write diagnostics, snapshot and spectrum.
    Run { config: PathBuf },
    /// Run a convergence study and write its report.
    Study { kind: Kind, config: PathBuf },
    /// Print the invariants of a snapshot file.
    Invariants { snapshot: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Temporal,
    Spatial,
    Local,
}

impl From<Kind> for StudyKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Temporal => StudyKind::Temporal,
            Kind::Spatial => StudyKind::Spatial,
            Kind::Local => StudyKind::Local,
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoFailure::new(path, e))?;
    Ok(parse_config_with_env(&text, |name| std::env::var(name).ok())?)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let summary = cmd_run(&cfg)?;
            println!(
                "steps={} t={} l2_drift_rel={:.3e}",
                summary.steps, summary.t_final, summary.relative_l2_drift
            );
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Study { kind, config } => {
            let cfg = load(&config)?;
            let (report, verdict) = cmd_study(&cfg, kind.into())?;
            print!("{}", kdv_core::io::study_table(&report));
            verdict?;
        }
        Command::Invariants { snapshot } => println!("{}", cmd_invariants(&snapshot)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are configuration errors; clap's default status 2 is reserved here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
