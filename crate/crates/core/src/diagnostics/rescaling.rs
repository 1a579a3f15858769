use super::ks::{ks_one_sample, KsResult};
use crate::error::{HawkesError, Result};
use crate::model::{compensator_at_events, ContagionPath, EventSequence, HawkesParams};

/// Fewest events [`time_rescaling_test`] accepts.
pub const MIN_RESCALING_EVENTS: usize = 50;

/// Compensator increments `Λ(Tᵢ) − Λ(Tᵢ₋₁)`, which are iid `Exp(1)` when
/// the model is right.
pub fn rescaled_gaps(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<Vec<f64>> {
    let comp = compensator_at_events(events, y, params)?;
    let mut prev = 0.0;
    Ok(comp
        .into_iter()
        .map(|c| {
            let g = c - prev;
            prev = c;
            g
        })
        .collect())
}

/// KS test of the rescaled gaps against the unit exponential.
pub fn time_rescaling_test(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<KsResult> {
    if events.len() < MIN_RESCALING_EVENTS {
        return Err(HawkesError::InsufficientData {
            needed: MIN_RESCALING_EVENTS,
            got: events.len(),
        });
    }
    let gaps = rescaled_gaps(events, y, params)?;
    Ok(ks_one_sample(&gaps, |x| -(-x).exp_m1()))
}
