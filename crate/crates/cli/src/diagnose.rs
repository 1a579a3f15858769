use std::path::{Path, PathBuf};

use stochastic_hawkes::diagnostics::{
    expected_intensity_curve, geweke_hyperparams, geweke_joint_test,
    monte_carlo_mean_intensity, time_rescaling_test, uniform_grid, GewekeConfig,
};
use stochastic_hawkes::ContagionPath;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt, read_columns, read_events, write_csv, Manifest};
use crate::model;

#[derive(Debug, Default)]
pub struct DiagnoseArgs {
    /// Time-rescaling test of an event file against its level path.
    pub rescaling: Option<(PathBuf, PathBuf)>,
    pub geweke: bool,
    pub renewal: bool,
}

fn rescaling(config: &Config, events: &Path, levels: &Path, out: &Path) -> CliResult<PathBuf> {
    let horizon: f64 = config.require("horizon")?;
    let events = read_events(events, horizon)?;
    let mut cols = read_columns(levels, &["t", "y"])?;
    let y = cols.remove(1);
    if cols[0].as_slice() != events.times() {
        return Err(CliError::Data(format!(
            "{}: times do not match the event file",
            levels.display()
        )));
    }
    let params = model::params(config)?;
    let ks = time_rescaling_test(&events, &ContagionPath::new(y)?, &params)?;
    println!(
        "time rescaling: KS statistic {:.5}, p-value {:.4} over {} events",
        ks.statistic,
        ks.p_value,
        events.len()
    );
    let path = out.join("rescaling.csv");
    write_csv(
        &path,
        &["events", "statistic", "p_value"],
        [vec![events.len().to_string(), fmt(ks.statistic), fmt(ks.p_value)]],
    )?;
    Ok(path)
}

fn geweke(config: &Config, seed: u64, out: &Path) -> CliResult<PathBuf> {
    let kind = model::kind(config)?;
    let d = GewekeConfig::default();
    let setting = GewekeConfig {
        horizon: config.or("geweke.horizon", d.horizon)?,
        rounds: config.or("geweke.rounds", 2000)?,
        seed,
        ..d
    };
    let scores = geweke_joint_test(kind, &geweke_hyperparams(), &setting)?;
    println!("Geweke test, {kind} model, {} rounds", setting.rounds);
    println!("{:<10} {:>6} {:>8}", "parameter", "moment", "z");
    for s in &scores {
        println!("{:<10} {:>6} {:>8.3}", s.parameter, s.moment, s.z);
    }
    let path = out.join("geweke.csv");
    write_csv(
        &path,
        &["parameter", "moment", "z"],
        scores
            .iter()
            .map(|s| vec![s.parameter.to_string(), s.moment.to_string(), fmt(s.z)]),
    )?;
    Ok(path)
}

/// Renewal-equation mean intensity, with a Monte Carlo column when
/// `renewal.paths` is set.
fn renewal(config: &Config, seed: u64, out: &Path) -> CliResult<PathBuf> {
    let params = model::params(config)?;
    let spec = model::spec(config)?;
    let t_max = config.or("renewal.t_max", 10.0 / params.delta)?;
    let points = config.or("renewal.points", 50)?;
    let paths: usize = config.or("renewal.paths", 0)?;
    let grid = uniform_grid(t_max, points);
    let curve = expected_intensity_curve(&params, |t| spec.mean_level(t), &grid)?;
    let path = out.join("renewal.csv");
    if paths > 0 {
        let mc = monte_carlo_mean_intensity(&params, &spec, &grid, paths, seed)?;
        write_csv(
            &path,
            &["t", "mean_intensity", "mc_mean", "mc_se"],
            grid.iter()
                .zip(&curve)
                .zip(&mc)
                .map(|((&t, &m), &(mean, se))| vec![fmt(t), fmt(m), fmt(mean), fmt(se)]),
        )?;
    } else {
        write_csv(
            &path,
            &["t", "mean_intensity"],
            grid.iter().zip(&curve).map(|(&t, &m)| vec![fmt(t), fmt(m)]),
        )?;
    }
    println!("renewal curve on {points} points of [0, {t_max}]");
    Ok(path)
}

pub fn run(config: &Config, seed: u64, args: &DiagnoseArgs, out: &Path) -> CliResult<()> {
    if args.rescaling.is_none() && !args.geweke && !args.renewal {
        return Err(CliError::config(
            "diagnose",
            "needs at least one of --rescaling, --geweke, --renewal",
        ));
    }
    ensure_dir(out)?;
    let mut outputs = Vec::new();
    if let Some((events, levels)) = &args.rescaling {
        outputs.push(rescaling(config, events, levels, out)?);
    }
    if args.geweke {
        outputs.push(geweke(config, seed, out)?);
    }
    if args.renewal {
        outputs.push(renewal(config, seed, out)?);
    }
    Manifest {
        command: "diagnose",
        seed,
        config,
        entries: Vec::new(),
        outputs,
    }
    .write(out)
}
