use std::path::{Path, PathBuf};

use stochastic_hawkes::diagnostics::summarize_chains;
use stochastic_hawkes::infer::{run_chains, Chain};
use stochastic_hawkes::{EventSequence, Parent};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt, write_csv, Manifest};
use crate::model;

fn numbered(out: &Path, stem: &str, chain: usize, chains: usize) -> PathBuf {
    if chains == 1 {
        out.join(format!("{stem}.csv"))
    } else {
        out.join(format!("{stem}_{chain}.csv"))
    }
}

fn write_chain(path: &Path, chain: &Chain) -> CliResult<()> {
    let mut header = vec!["iter"];
    header.extend(chain.parameter_names());
    header.push("loglik");
    write_csv(
        path,
        &header,
        chain.draws.iter().map(|d| {
            let mut row = vec![d.iteration.to_string()];
            row.extend(d.values().into_iter().map(fmt));
            row.push(fmt(d.log_likelihood));
            row
        }),
    )
}

/// Sidecar with one row per event per retained draw; `parent` is the index
/// of the triggering event, or -1 for an immigrant.
fn write_latent(path: &Path, chain: &Chain) -> CliResult<()> {
    let rows = chain.draws.iter().flat_map(|d| {
        let (y, z) = d.latent.as_ref().expect("latent state requested");
        y.levels()
            .iter()
            .zip(z.parents())
            .enumerate()
            .map(|(i, (&level, parent))| {
                let parent = match parent {
                    Parent::Immigrant => "-1".to_string(),
                    Parent::Event(j) => j.to_string(),
                };
                vec![d.iteration.to_string(), i.to_string(), fmt(level), parent]
            })
            .collect::<Vec<_>>()
    });
    write_csv(path, &["iter", "event", "y", "parent"], rows)
}

pub fn run(config: &Config, seed: u64, events: &EventSequence, out: &Path) -> CliResult<()> {
    if events.is_empty() {
        return Err(CliError::Data("no events: the event file has no rows".into()));
    }
    let kind = model::kind(config)?;
    let hyper = model::hyperparams(config)?;
    let mcmc = model::mcmc(config, seed)?;
    let chains: usize = config.or("chains", 1)?;
    if chains == 0 {
        return Err(CliError::config("chains", "must be at least 1"));
    }
    let level: f64 = config.or("level", 0.9)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::config("level", "must lie in (0, 1)"));
    }
    ensure_dir(out)?;

    let fitted = run_chains(events, kind, &hyper, &mcmc, chains)?;
    let mut outputs = Vec::new();
    for (c, chain) in fitted.iter().enumerate() {
        let path = numbered(out, "chain", c, chains);
        write_chain(&path, chain)?;
        outputs.push(path);
        if mcmc.save_latent {
            let path = numbered(out, "latent", c, chains);
            write_latent(&path, chain)?;
            outputs.push(path);
        }
    }

    let summary = summarize_chains(&fitted, level)?;
    let path = out.join("summary.csv");
    write_csv(
        &path,
        &["parameter", "mean", "median", "lower", "upper", "ess", "rhat"],
        summary.iter().map(|s| {
            vec![
                s.name.to_string(),
                fmt(s.mean),
                fmt(s.median),
                fmt(s.lower),
                fmt(s.upper),
                fmt(s.ess),
                fmt(s.rhat),
            ]
        }),
    )?;
    outputs.push(path);

    let path = out.join("acceptance.csv");
    write_csv(
        &path,
        &["chain", "block", "accepted", "proposed", "rate"],
        fitted.iter().enumerate().flat_map(|(c, chain)| {
            chain.acceptance.iter().map(move |b| {
                vec![
                    c.to_string(),
                    b.block.to_string(),
                    b.accepted.to_string(),
                    b.proposed.to_string(),
                    fmt(b.rate()),
                ]
            })
        }),
    )?;
    outputs.push(path);

    // Posterior mean level path, averaged over chains.
    let path = out.join("y_mean.csv");
    let n = events.len();
    let y_mean: Vec<f64> = (0..n)
        .map(|i| fitted.iter().map(|c| c.y_mean[i]).sum::<f64>() / chains as f64)
        .collect();
    write_csv(
        &path,
        &["t", "y"],
        events
            .times()
            .iter()
            .zip(&y_mean)
            .map(|(&t, &y)| vec![fmt(t), fmt(y)]),
    )?;
    outputs.push(path);

    println!(
        "{kind} model, {n} events, {chains} chain(s) of {} retained draws",
        fitted[0].draws.len()
    );
    println!(
        "{:<10} {:>12} {:>12} {:>12} {:>12} {:>8} {:>6}",
        "parameter", "mean", "median", "lower", "upper", "ess", "rhat"
    );
    for s in &summary {
        println!(
            "{:<10} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>8.0} {:>6.3}",
            s.name, s.mean, s.median, s.lower, s.upper, s.ess, s.rhat
        );
    }
    println!("{:<12} {:>6} {:>8}", "block", "chain", "rate");
    for (c, chain) in fitted.iter().enumerate() {
        for b in &chain.acceptance {
            println!("{:<12} {:>6} {:>8.3}", b.block, c, b.rate());
        }
    }

    Manifest {
        command: "infer",
        seed,
        config,
        entries: vec![
            ("horizon", fmt(events.horizon())),
            ("chains", chains.to_string()),
        ],
        outputs,
    }
    .write(out)
}
