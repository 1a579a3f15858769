use std::path::Path;

use stochastic_hawkes::bench::{bench_model, time_simulators};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt, write_csv, Manifest};

/// Accepts `1e3,1e4` as well as `1000,10000`.
pub fn parse_targets(raw: &str) -> CliResult<Vec<usize>> {
    raw.split(',')
        .map(|s| {
            let v: f64 = s.trim().parse().map_err(|_| {
                CliError::config("events", format!("bad event count {s:?}"))
            })?;
            if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
                Ok(v as usize)
            } else {
                Err(CliError::config("events", format!("bad event count {s:?}")))
            }
        })
        .collect()
}

/// Timing only; the output varies from run to run by nature.
pub fn run(config: &Config, seed: u64, out: &Path) -> CliResult<()> {
    let targets = parse_targets(config.get("events").unwrap_or("1e3,1e4,1e5"))?;
    let runs: usize = config.or("runs", 5)?;
    let limit = parse_targets(config.get("thinning_limit").unwrap_or("1e4"))?;
    let limit = *limit.first().unwrap_or(&10_000);
    ensure_dir(out)?;
    let (params, spec) = bench_model();
    let rows = time_simulators(&params, &spec, &targets, limit, runs.max(1), seed)?;

    println!(
        "{:>10} {:>12} {:>14} {:>8} {:>14} {:>8}",
        "events", "horizon", "simulate_s", "ratio", "thinning_s", "ratio"
    );
    let ratio = |now: Option<f64>, before: Option<f64>| match (now, before) {
        (Some(a), Some(b)) if b > 0.0 => format!("{:.2}", a / b),
        _ => "-".into(),
    };
    for (i, r) in rows.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &rows[j]);
        println!(
            "{:>10} {:>12.2} {:>14.3e} {:>8} {:>14} {:>8}",
            r.events,
            r.horizon,
            r.simulate_secs,
            ratio(Some(r.simulate_secs), prev.map(|p| p.simulate_secs)),
            r.thinning_secs.map_or("-".into(), |s| format!("{s:.3e}")),
            ratio(r.thinning_secs, prev.and_then(|p| p.thinning_secs)),
        );
    }
    let path = out.join("bench.csv");
    write_csv(
        &path,
        &["events", "horizon", "simulate_secs", "thinning_secs"],
        rows.iter().map(|r| {
            vec![
                r.events.to_string(),
                fmt(r.horizon),
                fmt(r.simulate_secs),
                r.thinning_secs.map(fmt).unwrap_or_default(),
            ]
        }),
    )?;
    Manifest {
        command: "bench",
        seed,
        config,
        entries: vec![("runs", runs.to_string())],
        outputs: vec![path],
    }
    .write(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets() {
        assert_eq!(parse_targets("1e3, 1e4,100").unwrap(), vec![1000, 10_000, 100]);
        assert!(parse_targets("1.5").is_err());
        assert!(parse_targets("x").is_err());
        assert!(parse_targets("0").is_err());
    }
}
