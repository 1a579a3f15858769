//! `shawkes`: simulate, fit and check Hawkes processes with stochastic
//! excitation levels.
//!
//! Every subcommand reads an optional `key = value` file (`--config`),
//! applies `--set key=value` overrides and then its own flags, and writes a
//! `manifest.txt` beside its outputs.

mod bench;
mod config;
mod diagnose;
mod em_check;
mod error;
mod infer;
mod io;
mod model;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "shawkes", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration entry; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Root seed. Generated and recorded in the manifest when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EventInput {
    /// Event file: CSV with header `t`.
    #[arg(long)]
    events: PathBuf,
    /// Observation window; read from `--manifest` when absent.
    #[arg(long)]
    horizon: Option<f64>,
    /// Manifest of the run that produced the events.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path, or event counts of many.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Independent replicates; more than one writes only their counts.
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Also write the intensity trace.
        #[arg(long)]
        trace: bool,
    },
    /// Fit a model to an event file by MCMC.
    Infer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: EventInput,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        /// Store levels and parents of every retained draw in a sidecar.
        #[arg(long)]
        save_latent: bool,
    },
    /// Time rescaling, Geweke and renewal-curve reports.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Event and level files (`t,y`) for the time-rescaling test.
        #[arg(long, num_args = 2, value_names = ["EVENTS", "CONTAGION"])]
        rescaling: Option<Vec<PathBuf>>,
        #[arg(long)]
        geweke: bool,
        #[arg(long)]
        renewal: bool,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Rounds of the Geweke test.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Compare EM responsibilities with the Gibbs branching conditional.
    EmCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: EventInput,
    },
    /// Time the linear-time simulator against thinning.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Expected event counts, e.g. `1e3,1e4,1e5`.
        #[arg(long = "events")]
        targets: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        /// Largest count at which thinning is timed.
        #[arg(long)]
        thinning_limit: Option<String>,
    },
}

fn load(common: &Common) -> CliResult<Config> {
    Config::from_sources(common.config.as_deref(), &common.set)
}

/// Flag, then config entry, then a fresh random seed; the result is written
/// back so the manifest records it.
fn resolve_seed(config: &mut Config, flag: Option<u64>) -> CliResult<u64> {
    config.set_opt("seed", flag);
    let seed = match config.parsed("seed")? {
        Some(s) => s,
        None => rand::random(),
    };
    config.set("seed", seed);
    Ok(seed)
}

fn read_input(config: &mut Config, input: &EventInput) -> CliResult<stochastic_hawkes::EventSequence> {
    let horizon = match (input.horizon, config.parsed::<f64>("horizon")?) {
        (Some(h), _) => h,
        (None, Some(h)) if input.manifest.is_none() => h,
        _ => io::resolve_horizon(None, input.manifest.as_deref())?,
    };
    config.set("horizon", horizon);
    config.set("events", input.events.display());
    io::read_events(&input.events, horizon)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { common, model, horizon, replicates, trace } => {
            let mut config = load(&common)?;
            config.set_opt("model", model);
            config.set_opt("horizon", horizon);
            if replicates == 0 {
                return Err(CliError::config("replicates", "must be at least 1"));
            }
            let seed = resolve_seed(&mut config, common.seed)?;
            simulate::run(&config, seed, &simulate::SimulateArgs { replicates, trace }, &common.out)
        }
        Command::Infer { common, input, model, iters, burnin, thin, chains, save_latent } => {
            let mut config = load(&common)?;
            config.set_opt("model", model);
            config.set_opt("iters", iters);
            config.set_opt("burnin", burnin);
            config.set_opt("thin", thin);
            config.set_opt("chains", chains);
            if save_latent {
                config.set("save_latent", true);
            }
            let events = read_input(&mut config, &input)?;
            let seed = resolve_seed(&mut config, common.seed)?;
            infer::run(&config, seed, &events, &common.out)
        }
        Command::Diagnose { common, rescaling, geweke, renewal, model, horizon, rounds } => {
            let mut config = load(&common)?;
            config.set_opt("model", model);
            config.set_opt("horizon", horizon);
            config.set_opt("geweke.rounds", rounds);
            let seed = resolve_seed(&mut config, common.seed)?;
            let args = diagnose::DiagnoseArgs {
                rescaling: rescaling.map(|p| (p[0].clone(), p[1].clone())),
                geweke,
                renewal,
            };
            diagnose::run(&config, seed, &args, &common.out)
        }
        Command::EmCheck { common, input } => {
            let mut config = load(&common)?;
            let events = read_input(&mut config, &input)?;
            em_check::run(&config, &events, &common.out)
        }
        Command::Bench { common, targets, runs, thinning_limit } => {
            let mut config = load(&common)?;
            config.set_opt("events", targets);
            config.set_opt("runs", runs);
            config.set_opt("thinning_limit", thinning_limit);
            let seed = resolve_seed(&mut config, common.seed)?;
            bench::run(&config, seed, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shawkes: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
