//! Mean intensity `E[λ_t]` from its renewal equation.
//!
//! Treating the level and the intensity as uncorrelated turns the renewal
//! equation into the linear ODE
//!
//! ```text
//! m′(t) = δa + (E[Y_t] − δ)·m(t),   m(0) = λ₀
//! ```
//!
//! which is exact for constant or independent levels and an approximation
//! for the Markov laws, where a large level raises the intensity that later
//! samples it.

use crate::error::{HawkesError, Result};
use crate::model::{intensity_at, HawkesParams, SdeSpec};
use crate::rng::SeedTree;
use crate::simulate::simulate;

/// Substep doubling stops once successive solutions agree to this, relative
/// to `max(1, |m|)`.
pub const RENEWAL_TOLERANCE: f64 = 1e-8;
/// Cap on the total number of RK4 steps.
pub const MAX_RENEWAL_STEPS: usize = 1 << 20;

fn check_grid(grid: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        if !t.is_finite() || t < prev || (i > 0 && t == prev) {
            return Err(HawkesError::InvalidGrid(format!(
                "point #{i} = {t} breaks a strictly increasing grid starting at or after 0"
            )));
        }
        prev = t;
    }
    Ok(())
}

fn integrate(
    params: &HawkesParams,
    mean_level: &impl Fn(f64) -> f64,
    grid: &[f64],
    substeps: usize,
) -> Vec<f64> {
    let HawkesParams { a, lambda0, delta } = *params;
    let rhs = |t: f64, m: f64| delta * a + (mean_level(t) - delta) * m;
    let mut out = Vec::with_capacity(grid.len());
    let (mut t, mut m) = (0.0, lambda0);
    for &target in grid {
        let h = (target - t) / substeps as f64;
        if h > 0.0 {
            for s in 0..substeps {
                let t0 = t + s as f64 * h;
                let k1 = rhs(t0, m);
                let k2 = rhs(t0 + 0.5 * h, m + 0.5 * h * k1);
                let k3 = rhs(t0 + 0.5 * h, m + 0.5 * h * k2);
                let k4 = rhs(t0 + h, m + h * k3);
                m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        t = target;
        out.push(m);
    }
    out
}

/// `E[λ_t]` at each grid point, for a level mean `t ↦ E[Y_t]`.
///
/// The grid must be strictly increasing and start at or after zero. Each
/// interval is split into the same number of RK4 steps, doubled until the
/// solution stops moving or [`MAX_RENEWAL_STEPS`] is reached.
pub fn expected_intensity_curve(
    params: &HawkesParams,
    mean_level: impl Fn(f64) -> f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    params.validate()?;
    check_grid(grid)?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let intervals = grid.len();
    let mut substeps = 4;
    let mut current = integrate(params, &mean_level, grid, substeps);
    while 2 * substeps * intervals <= MAX_RENEWAL_STEPS {
        substeps *= 2;
        let next = integrate(params, &mean_level, grid, substeps);
        let converged = current
            .iter()
            .zip(&next)
            .all(|(a, b)| (a - b).abs() <= RENEWAL_TOLERANCE * b.abs().max(1.0));
        current = next;
        if converged {
            break;
        }
    }
    Ok(current)
}

/// Closed-form mean intensity when every level equals `c`:
/// `m∞ + (λ₀ − m∞)e^{−(δ−c)t}` with `m∞ = aδ/(δ−c)`.
pub fn classical_mean_intensity(params: &HawkesParams, c: f64, t: f64) -> f64 {
    let HawkesParams { a, lambda0, delta } = *params;
    let r = delta - c;
    if r == 0.0 {
        return lambda0 + delta * a * t;
    }
    let m_inf = a * delta / r;
    m_inf + (lambda0 - m_inf) * (-r * t).exp()
}

/// Monte Carlo estimate of `E[λ_t]` at each grid point: mean and standard
/// error over `paths` simulated sequences on `[0, max(grid)]`.
pub fn monte_carlo_mean_intensity(
    params: &HawkesParams,
    spec: &SdeSpec,
    grid: &[f64],
    paths: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    check_grid(grid)?;
    if paths < 2 {
        return Err(HawkesError::InsufficientData {
            needed: 2,
            got: paths,
        });
    }
    let horizon = grid.last().copied().unwrap_or(0.0);
    let tree = SeedTree::new(seed);
    let per_path = crate::par::map_indexed(paths, |p| -> Result<Vec<f64>> {
        let mut rng = tree.child(p as u64).stream(0);
        let run = simulate(params, spec, horizon, &mut rng)?;
        // Right-continuous version: an event exactly on a grid point counts.
        grid.iter()
            .map(|&t| {
                let left = intensity_at(t, &run.events, &run.contagion, params)?;
                let jump: f64 = run
                    .events
                    .times()
                    .iter()
                    .zip(run.contagion.levels())
                    .filter(|(ti, _)| **ti == t)
                    .map(|(_, y)| y)
                    .sum();
                Ok(left + jump)
            })
            .collect()
    });
    let mut sums = vec![(0.0, 0.0); grid.len()];
    for path in per_path {
        for (acc, v) in sums.iter_mut().zip(path?) {
            acc.0 += v;
            acc.1 += v * v;
        }
    }
    let n = paths as f64;
    Ok(sums
        .into_iter()
        .map(|(s, ss)| {
            let mean = s / n;
            let var = ((ss - n * mean * mean) / (n - 1.0)).max(0.0);
            (mean, (var / n).sqrt())
        })
        .collect())
}

/// `n` evenly spaced points on `(0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t_max * k as f64 / n as f64).collect()
}
