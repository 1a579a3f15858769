//! Timing harness comparing the linear-time simulator with thinning.

use std::time::Instant;

use crate::error::{HawkesError, Result};
use crate::model::{HawkesParams, SdeKind, SdeSpec};
use crate::rng::SeedTree;
use crate::simulate::{expected_count_constant, simulate, simulate_ogata};

/// Each timed sample repeats the call until at least this much wall time
/// has passed, so that short runs are not dominated by timer noise.
pub const MIN_SAMPLE_SECS: f64 = 0.05;

/// Parameters used by the benchmark: `a = λ₀ = δ = 1` with iid `Gamma(2, 4)`
/// levels, a stationary process with two events per unit time.
pub fn bench_model() -> (HawkesParams, SdeSpec) {
    (
        HawkesParams { a: 1.0, lambda0: 1.0, delta: 1.0 },
        SdeSpec {
            kind: SdeKind::IidGamma { shape: 2.0, rate: 4.0 },
            y0: 1.0,
        },
    )
}

/// Window length with `target` expected events. Only the level mean
/// matters, so the model is treated as having constant level `mean_level`.
pub fn horizon_for_events(params: &HawkesParams, mean_level: f64, target: f64) -> Result<f64> {
    if !(mean_level < params.delta) {
        return Err(HawkesError::InvalidParameter {
            name: "mean_level",
            value: mean_level,
            reason: "must be below delta for a stationary benchmark",
        });
    }
    let count = |t: f64| expected_count_constant(params, mean_level, t);
    let mut hi = 1.0;
    while count(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Seconds per call of `f`, averaged over one timed sample.
pub fn sample_runtime(mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    let mut calls = 0u32;
    loop {
        f();
        calls += 1;
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= MIN_SAMPLE_SECS {
            return elapsed / calls as f64;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    /// Expected number of events.
    pub events: usize,
    pub horizon: f64,
    /// Fastest seconds per linear-time simulation.
    pub simulate_secs: f64,
    /// Fastest seconds per thinning simulation, when it was run.
    pub thinning_secs: Option<f64>,
}

/// Time both simulators at each expected event count and keep the fastest
/// of `runs` samples. Sizes are interleaved round by round, so a slow spell
/// on a busy machine lands on every size rather than on one; interference
/// only ever adds time, so the minimum is the steadiest estimate. Thinning is
/// quadratic and only timed up to `thinning_limit` events.
pub fn time_simulators(
    params: &HawkesParams,
    spec: &SdeSpec,
    targets: &[usize],
    thinning_limit: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let mean_level = spec.mean_level(0.0);
    let tree = SeedTree::new(seed);
    let mut rows = Vec::with_capacity(targets.len());
    let mut rngs = Vec::with_capacity(targets.len());
    for &target in targets {
        rows.push(TimingRow {
            events: target,
            horizon: horizon_for_events(params, mean_level, target as f64)?,
            simulate_secs: f64::INFINITY,
            thinning_secs: (target <= thinning_limit).then_some(f64::INFINITY),
        });
        rngs.push(tree.stream(target as u64));
    }
    let mut failure = None;
    for _ in 0..runs.max(1) {
        for (row, rng) in rows.iter_mut().zip(&mut rngs) {
            let horizon = row.horizon;
            let secs = sample_runtime(|| {
                if let Err(e) = simulate(params, spec, horizon, rng) {
                    failure = Some(e);
                }
            });
            row.simulate_secs = row.simulate_secs.min(secs);
            if let Some(best) = row.thinning_secs.as_mut() {
                let secs = sample_runtime(|| {
                    if let Err(e) = simulate_ogata(params, spec, horizon, rng) {
                        failure = Some(e);
                    }
                });
                *best = best.min(secs);
            }
        }
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_hits_the_target_count() {
        let (p, s) = bench_model();
        let t = horizon_for_events(&p, s.mean_level(0.0), 1e4).unwrap();
        assert!((expected_count_constant(&p, 0.5, t) - 1e4).abs() < 1e-6);
        assert!(horizon_for_events(&p, 1.5, 10.0).is_err());
    }
}
