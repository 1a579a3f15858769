use std::path::Path;

use stochastic_hawkes::par::map_indexed;
use stochastic_hawkes::rng::stream;
use stochastic_hawkes::{simulate, SeedTree};

use crate::config::Config;
use crate::error::CliResult;
use crate::io::{ensure_dir, fmt, write_csv, Manifest};
use crate::model;

pub struct SimulateArgs {
    pub replicates: usize,
    pub trace: bool,
}

/// One path: `events.csv`, `contagion.csv` and optionally `trace.csv`.
/// With replicates, only `replicates.csv` with the event count of each.
pub fn run(config: &Config, seed: u64, args: &SimulateArgs, out: &Path) -> CliResult<()> {
    let params = model::params(config)?;
    let spec = model::spec(config)?;
    let horizon: f64 = config.require("horizon")?;
    ensure_dir(out)?;
    let tree = SeedTree::new(seed);
    let mut outputs = Vec::new();

    if args.replicates > 1 {
        let counts = map_indexed(args.replicates, |r| {
            let mut rng = tree.child(r as u64).stream(stream::SIMULATE);
            simulate(&params, &spec, horizon, &mut rng).map(|run| run.events.len())
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let path = out.join("replicates.csv");
        write_csv(
            &path,
            &["replicate", "events"],
            counts
                .iter()
                .enumerate()
                .map(|(r, c)| vec![r.to_string(), c.to_string()]),
        )?;
        outputs.push(path);
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / n;
        let var = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        println!(
            "{} replicates: mean events {mean:.4} (standard error {:.4})",
            args.replicates,
            (var / n).sqrt()
        );
    } else {
        let mut rng = tree.stream(stream::SIMULATE);
        let mut run = simulate(&params, &spec, horizon, &mut rng)?;
        if args.trace {
            run = run.with_trace(&params);
        }
        let times = run.events.times();
        let path = out.join("events.csv");
        write_csv(&path, &["t"], times.iter().map(|&t| vec![fmt(t)]))?;
        outputs.push(path);
        let path = out.join("contagion.csv");
        write_csv(
            &path,
            &["t", "y"],
            times
                .iter()
                .zip(run.contagion.levels())
                .map(|(&t, &y)| vec![fmt(t), fmt(y)]),
        )?;
        outputs.push(path);
        if let Some(trace) = &run.intensity_trace {
            let path = out.join("trace.csv");
            write_csv(
                &path,
                &["t", "lambda"],
                trace.iter().map(|p| vec![fmt(p.t), fmt(p.lambda)]),
            )?;
            outputs.push(path);
        }
        println!("{} events on [0, {horizon}]", times.len());
    }

    Manifest {
        command: "simulate",
        seed,
        config,
        entries: vec![
            ("horizon", fmt(horizon)),
            ("replicates", args.replicates.to_string()),
        ],
        outputs,
    }
    .write(out)
}
