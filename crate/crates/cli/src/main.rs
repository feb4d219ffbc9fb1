//! `hamfric`: configuration-driven runs of the tracer-particle model.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hamfric_core::acceptance::Suite;

use crate::config::Config;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(
    name = "hamfric",
    version,
    about = "Tracer particle in a condensate: statics, friction and deceleration"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion relation and critical speeds.
    Dispersion,
    /// Static dressed profile, residual and decay classification.
    Static,
    /// Traveling-wave profile and its friction force.
    Twave {
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Friction force against speed.
    FrictionCurve,
    /// Speeds of the forced traveling waves for a constant force.
    Forced {
        #[arg(long)]
        force: Option<f64>,
    },
    /// Time evolution of particle and field.
    Evolve {
        #[arg(long)]
        tmax: Option<f64>,
        /// Initial particle speed along the configured momentum direction.
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Effective one-particle deceleration law.
    Reduced {
        #[arg(long)]
        tmax: Option<f64>,
        /// Initial speed along the configured velocity direction.
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Acceptance criteria with a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::Full)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

/// Rescales `v` to length `speed`, keeping its direction (x if `v = 0`).
fn with_speed(v: [f64; 3], speed: f64) -> [f64; 3] {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        [speed, 0.0, 0.0]
    } else {
        v.map(|c| c * speed / norm)
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli.config.as_ref().context("this subcommand needs --config <path>")?;
    Config::load(path)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Command::Verify { suite } = cli.command {
        let suite = match suite {
            SuiteArg::Fast => Suite::Fast,
            SuiteArg::Full => Suite::Full,
        };
        return Ok(commands::verify(suite));
    }
    let mut cfg = load(&cli)?;
    match &cli.command {
        Command::Twave { speed: Some(s) } => cfg.twave.speed = *s,
        Command::Forced { force: Some(f) } => {
            cfg.forced.force = Some(*f);
            cfg.forced.force_fraction = None;
        }
        Command::Evolve { tmax, speed } => {
            if let Some(t) = tmax {
                cfg.evolve.t_max = *t;
            }
            if let Some(s) = speed {
                cfg.evolve.p0 = with_speed(cfg.evolve.p0, s * cfg.model.particle_mass);
            }
        }
        Command::Reduced { tmax, speed } => {
            if let Some(t) = tmax {
                cfg.reduced.t_end = *t;
            }
            if let Some(s) = speed {
                cfg.reduced.v0 = with_speed(cfg.reduced.v0, *s);
            }
        }
        _ => {}
    }
    cfg.validate()?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let out = OutputDir::create(&dir)?;
    match cli.command {
        Command::Dispersion => commands::dispersion(&cfg, out)?,
        Command::Static => commands::statics(&cfg, out)?,
        Command::Twave { .. } => commands::twave(&cfg, out)?,
        Command::FrictionCurve => commands::friction_curve(&cfg, out)?,
        Command::Forced { .. } => commands::forced(&cfg, out)?,
        Command::Evolve { .. } => commands::evolve(&cfg, out)?,
        Command::Reduced { .. } => commands::reduced(&cfg, out)?,
        Command::Verify { .. } => unreachable!("handled above"),
    }
    log::info!("artifacts written to {}", dir.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
