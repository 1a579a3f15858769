//! Posterior summaries and chain-quality measures.

use crate::error::{HawkesError, Result};
use crate::infer::Chain;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Effective sample size by Geyer's initial monotone positive sequence.
/// A constant chain counts as a single draw.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(x);
    let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
    let autocov = |lag: usize| -> f64 {
        centred[..n - lag]
            .iter()
            .zip(&centred[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    n as f64 / tau.max(1.0 / n as f64)
}

/// Split-R̂ over one or more chains of equal length. Each chain is cut in
/// half so that drift within a chain also shows up.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        return f64::NAN;
    }
    let pieces: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[c.len() - half..]])
        .collect();
    let n = half as f64;
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let within = mean(&pieces.iter().map(|p| sample_variance(p)).collect::<Vec<_>>());
    let between = n * sample_variance(&means);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let pooled = (n - 1.0) / n * within + between / n;
    (pooled / within).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: &'static str,
    pub mean: f64,
    pub median: f64,
    /// Central credible interval.
    pub lower: f64,
    pub upper: f64,
    pub ess: f64,
    pub rhat: f64,
}

impl ParameterSummary {
    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Summary of every parameter over one or more chains fitted to the same
/// data with the same model. ESS is summed over chains.
pub fn summarize_chains(chains: &[Chain], level: f64) -> Result<Vec<ParameterSummary>> {
    let Some(first) = chains.first() else {
        return Err(HawkesError::InsufficientData { needed: 1, got: 0 });
    };
    if !(level > 0.0 && level < 1.0) {
        return Err(HawkesError::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie in (0, 1)",
        });
    }
    let draws = chains.iter().map(|c| c.draws.len()).min().unwrap_or(0);
    if draws < 4 {
        return Err(HawkesError::InsufficientData {
            needed: 4,
            got: draws,
        });
    }
    let tail = (1.0 - level) / 2.0;
    first
        .parameter_names()
        .into_iter()
        .map(|name| {
            let columns: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| {
                    c.column(name).ok_or(HawkesError::InvalidParameter {
                        name: "chains",
                        value: f64::NAN,
                        reason: "chains fit different models",
                    })
                })
                .collect::<Result<_>>()?;
            let mut pooled: Vec<f64> = columns.concat();
            if pooled.iter().any(|v| !v.is_finite()) {
                return Err(HawkesError::NonFinitePosterior { block: name });
            }
            let m = mean(&pooled);
            pooled.sort_by(f64::total_cmp);
            let slices: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
            Ok(ParameterSummary {
                name,
                mean: m,
                median: quantile(&pooled, 0.5),
                lower: quantile(&pooled, tail),
                upper: quantile(&pooled, 1.0 - tail),
                ess: columns.iter().map(|c| effective_sample_size(c)).sum(),
                rhat: split_rhat(&slices),
            })
        })
        .collect()
}

/// [`summarize_chains`] for a single chain.
pub fn chain_summary(chain: &Chain, level: f64) -> Result<Vec<ParameterSummary>> {
    summarize_chains(std::slice::from_ref(chain), level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_chain_is_one_draw() {
        assert_eq!(effective_sample_size(&[2.0; 500]), 1.0);
    }

    #[test]
    fn white_noise_ess_is_about_n() {
        let mut rng = SeedTree::new(3).stream(0);
        let x: Vec<f64> = (0..4000).map(|_| rng.sample(StandardNormal)).collect();
        let ess = effective_sample_size(&x);
        assert!((ess / 4000.0 - 1.0).abs() < 0.2, "ess = {ess}");
    }

    #[test]
    fn ar1_ess_matches_theory() {
        // ESS/n = (1 − ρ)/(1 + ρ) for an AR(1) chain.
        let rho = 0.8;
        let mut rng = SeedTree::new(5).stream(0);
        let mut v = 0.0;
        let x: Vec<f64> = (0..100_000)
            .map(|_| {
                v = rho * v + rng.sample::<f64, _>(StandardNormal);
                v
            })
            .collect();
        let ratio = effective_sample_size(&x) / x.len() as f64;
        assert!((ratio / ((1.0 - rho) / (1.0 + rho)) - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn identical_chains_have_unit_rhat() {
        let mut rng = SeedTree::new(4).stream(0);
        let x: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        assert!((split_rhat(&[&x, &x]) - 1.0).abs() < 0.01);
        let drifting: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        assert!(split_rhat(&[&drifting]) > 1.5);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.125), 1.5);
        assert_eq!(quantile(&v, 1.0), 5.0);
    }
}
