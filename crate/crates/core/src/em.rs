//! EM quantities for the classical (constant-level) Hawkes model.
//!
//! With every level fixed at `psi`, the E-step responsibilities are the
//! same numbers as the Gibbs conditional of the branching structure. This
//! module computes them on their own, without going through the sampler, so
//! the two can be compared.

use crate::error::{HawkesError, Result};
use crate::infer::branching_probabilities;
use crate::model::{kernel_mass, ContagionPath, EventSequence, HawkesParams};

/// Row `i` has `i + 1` entries: entry `j < i` is the probability that event
/// `j` triggered event `i`, and entry `i` is the immigrant probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    rows: Vec<Vec<f64>>,
}

impl Responsibilities {
    /// Validates shape and that every row is a probability vector (to 1e−12).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(HawkesError::Misaligned {
                    expected: i + 1,
                    got: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|r| !(*r >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(HawkesError::InvalidEvents(format!(
                    "responsibility row {i} is not a probability vector"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Expected number of offspring events.
    pub fn expected_offspring(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row[..row.len() - 1].iter().sum::<f64>())
            .sum()
    }
}

fn check_psi(psi: f64) -> Result<()> {
    if psi.is_finite() && psi >= 0.0 {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter {
            name: "psi",
            value: psi,
            reason: "must be finite and >= 0",
        })
    }
}

/// E-step for kernel `psi·e^{−δt}`.
pub fn em_responsibilities(
    events: &EventSequence,
    params: &HawkesParams,
    psi: f64,
) -> Result<Responsibilities> {
    check_psi(psi)?;
    let times = events.times();
    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &ti)| {
            let mut row: Vec<f64> = times[..i]
                .iter()
                .map(|&tj| psi * (-params.delta * (ti - tj)).exp())
                .collect();
            row.push(params.base_at(ti));
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|r| *r /= total);
            row
        })
        .collect();
    Ok(Responsibilities { rows })
}

/// Expected complete-data log-likelihood at `(params, psi)` under the given
/// responsibilities. Includes the base-intensity compensator, so for 0/1
/// responsibilities it equals the branching-structure log-likelihood.
pub fn em_q_value(
    events: &EventSequence,
    resp: &Responsibilities,
    params: &HawkesParams,
    psi: f64,
) -> Result<f64> {
    check_psi(psi)?;
    if resp.len() != events.len() {
        return Err(HawkesError::Misaligned {
            expected: events.len(),
            got: resp.len(),
        });
    }
    let times = events.times();
    let horizon = events.horizon();
    let mut q = -params.base_integral(horizon);
    for (i, row) in resp.rows().iter().enumerate() {
        let ti = times[i];
        let immigrant = row[i];
        if immigrant > 0.0 {
            q += immigrant * params.base_at(ti).ln();
        }
        for (j, &r) in row[..i].iter().enumerate() {
            if r > 0.0 {
                q += r * (psi.ln() - params.delta * (ti - times[j]));
            }
        }
        q -= psi * kernel_mass(params.delta, horizon - ti);
    }
    Ok(q)
}

/// M-step for `psi` alone: expected offspring over total exposure.
pub fn em_update_psi(events: &EventSequence, resp: &Responsibilities, delta: f64) -> f64 {
    let exposure: f64 = events
        .times()
        .iter()
        .map(|&t| kernel_mass(delta, events.horizon() - t))
        .sum();
    if exposure > 0.0 {
        resp.expected_offspring() / exposure
    } else {
        0.0
    }
}

/// Largest absolute difference between the EM responsibilities and the Gibbs
/// branching probabilities at constant level `psi`, with the immigrant slot
/// moved from the end of each EM row to the front.
pub fn max_gibbs_discrepancy(
    events: &EventSequence,
    params: &HawkesParams,
    psi: f64,
) -> Result<f64> {
    let resp = em_responsibilities(events, params, psi)?;
    let y = ContagionPath::constant(psi, events.len())?;
    let mut worst: f64 = 0.0;
    for (i, row) in resp.rows().iter().enumerate() {
        let gibbs = branching_probabilities(i, events, &y, params)?;
        worst = worst.max((row[i] - gibbs[0]).abs());
        for j in 0..i {
            worst = worst.max((row[j] - gibbs[j + 1]).abs());
        }
    }
    Ok(worst)
}
