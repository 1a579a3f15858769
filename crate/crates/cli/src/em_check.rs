use std::path::Path;

use stochastic_hawkes::em::{em_responsibilities, em_update_psi, max_gibbs_discrepancy};
use stochastic_hawkes::{marginal_log_likelihood, ContagionPath, EventSequence};

use crate::config::Config;
use crate::error::CliResult;
use crate::io::{ensure_dir, fmt, write_csv, Manifest};
use crate::model;

/// Compares EM responsibilities with the Gibbs branching probabilities at
/// constant level `psi`, then runs `em.iterations` EM updates of `psi` with
/// the base parameters held fixed.
pub fn run(config: &Config, events: &EventSequence, out: &Path) -> CliResult<()> {
    let params = model::params(config)?;
    let psi0: f64 = config.require("psi")?;
    let iterations: usize = config.or("em.iterations", 50)?;
    ensure_dir(out)?;

    let worst = max_gibbs_discrepancy(events, &params, psi0)?;
    println!("max |EM responsibility - Gibbs probability| = {worst:.3e}");

    let mut psi = psi0;
    let mut rows = Vec::with_capacity(iterations + 1);
    for it in 0..=iterations {
        let y = ContagionPath::constant(psi, events.len())?;
        let ll = marginal_log_likelihood(events, &y, &params)?;
        rows.push(vec![it.to_string(), fmt(psi), fmt(ll)]);
        if it < iterations {
            let resp = em_responsibilities(events, &params, psi)?;
            psi = em_update_psi(events, &resp, params.delta);
        }
    }
    println!("psi after {iterations} EM iterations: {psi:.6}");

    let report = out.join("em_check.csv");
    write_csv(
        &report,
        &["events", "max_abs_difference"],
        [vec![events.len().to_string(), fmt(worst)]],
    )?;
    let trace = out.join("em_psi.csv");
    write_csv(&trace, &["iteration", "psi", "loglik"], rows)?;
    Manifest {
        command: "em-check",
        seed: 0,
        config,
        entries: vec![("horizon", fmt(events.horizon()))],
        outputs: vec![report, trace],
    }
    .write(out)
}
