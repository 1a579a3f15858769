//! Joint-distribution test of the sampler.
//!
//! Parameters drawn straight from the prior (marginal-conditional) are
//! compared with those visited by a chain that alternates one sampler sweep
//! with a fresh simulation of the data (successive-conditional). Both have
//! the prior as their marginal when every update targets the right
//! conditional, so the first two moments must agree.

use super::summary::effective_sample_size;
use crate::error::{HawkesError, Result};
use crate::infer::{
    sample_prior, ChainState, GammaPrior, Hyperparams, InvGammaPrior, KUpdate, McmcConfig,
    Mutation, NormalPrior, ProposalScales, Sampler,
};
use crate::model::{BranchingStructure, EventSequence, HawkesParams, ModelKind, SdeSpec};
use crate::rng::{stream, SeedTree};
use crate::simulate::simulate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeConfig {
    /// Observation window of every simulated data set.
    pub horizon: f64,
    pub rounds: usize,
    pub seed: u64,
    pub k_update: KUpdate,
    #[doc(hidden)]
    pub mutation: Mutation,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        Self {
            horizon: 7.0,
            rounds: 20_000,
            seed: 1,
            k_update: KUpdate::ExactMh,
            mutation: Mutation::None,
        }
    }
}

/// Priors tight enough that a window of length 7 holds about ten events and
/// never explodes, with fixed proposal scales of roughly one prior standard
/// deviation. The drift and volatility priors are the binding ones: a GBM
/// level that wanders far above `δ` inside the window makes the simulated
/// data set run away.
pub fn geweke_hyperparams() -> Hyperparams {
    Hyperparams {
        a: GammaPrior { shape: 20.0, rate: 20.0 },
        lambda0: GammaPrior { shape: 20.0, rate: 20.0 },
        delta: GammaPrior { shape: 40.0, rate: 20.0 },
        tau: GammaPrior { shape: 20.0, rate: 10.0 },
        omega: GammaPrior { shape: 40.0, rate: 10.0 },
        psi: GammaPrior { shape: 10.0, rate: 20.0 },
        mu: NormalPrior { mean: 0.0, var: 4e-4 },
        sigma2: InvGammaPrior { shape: 10.0, scale: 0.09 },
        k: NormalPrior { mean: 1.0, var: 0.04 },
        y0: 0.5,
        proposals: ProposalScales {
            a: Some(0.2),
            lambda0: Some(0.2),
            delta: Some(0.3),
            tau: Some(0.4),
            k: Some(0.2),
            y: Some(0.15),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeScore {
    pub parameter: &'static str,
    /// 1 for the mean, 2 for the raw second moment.
    pub moment: u8,
    pub z: f64,
}

fn values(params: &HawkesParams, spec: &SdeSpec) -> Vec<f64> {
    let mut v = vec![params.a, params.lambda0, params.delta];
    v.extend(spec.parameter_values());
    v
}

fn simulated_state(
    params: HawkesParams,
    spec: SdeSpec,
    horizon: f64,
    rng: &mut crate::rng::HawkesRng,
) -> Result<(EventSequence, ChainState)> {
    let run = simulate(&params, &spec, horizon, rng)?;
    let n = run.events.len();
    Ok((
        run.events,
        ChainState {
            params,
            spec,
            y: run.contagion,
            z: BranchingStructure::all_immigrants(n),
        },
    ))
}

/// z-scores for the first two moments of every parameter of `kind`.
pub fn geweke_joint_test(
    kind: ModelKind,
    hyper: &Hyperparams,
    config: &GewekeConfig,
) -> Result<Vec<GewekeScore>> {
    if config.rounds < 4 {
        return Err(HawkesError::InsufficientData {
            needed: 4,
            got: config.rounds,
        });
    }
    let tree = SeedTree::new(config.seed);
    let mut prior_rng = tree.stream(stream::GEWEKE_PRIOR);
    let mut data_rng = tree.stream(stream::GEWEKE_DATA);

    let mut marginal = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let (p, s) = sample_prior(kind, hyper, &mut prior_rng)?;
        marginal.push(values(&p, &s));
    }

    let (p, s) = sample_prior(kind, hyper, &mut prior_rng)?;
    let (events, state) = simulated_state(p, s, config.horizon, &mut data_rng)?;
    let mcmc = McmcConfig {
        iterations: 1,
        burn_in: 0,
        seed: tree.child(1).seed(),
        adapt: false,
        k_update: config.k_update,
        mutation: config.mutation,
        ..McmcConfig::default()
    };
    let mut sampler = Sampler::with_state(events, state, *hyper, mcmc)?;
    let mut successive = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        sampler.sweep(false)?;
        let current = sampler.state();
        successive.push(values(&current.params, &current.spec));
        let (events, state) =
            simulated_state(current.params, current.spec, config.horizon, &mut data_rng)?;
        sampler.reset(events, state)?;
    }

    let mut names = vec!["a", "lambda0", "delta"];
    names.extend_from_slice(kind.parameter_names());
    let mut scores = Vec::with_capacity(2 * names.len());
    for (idx, name) in names.into_iter().enumerate() {
        for moment in [1u8, 2] {
            let pick = |rows: &[Vec<f64>]| -> Vec<f64> {
                rows.iter().map(|r| r[idx].powi(moment as i32)).collect()
            };
            let (m, s) = (pick(&marginal), pick(&successive));
            let z = z_score(&m, &s);
            if !z.is_finite() {
                return Err(HawkesError::NonFinitePosterior { block: name });
            }
            scores.push(GewekeScore {
                parameter: name,
                moment,
                z,
            });
        }
    }
    Ok(scores)
}

/// Difference of means over its standard error; the second sample's error
/// accounts for autocorrelation through its effective size.
fn z_score(independent: &[f64], correlated: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    };
    let (m1, v1) = stats(independent);
    let (m2, v2) = stats(correlated);
    let se2 = v1 / independent.len() as f64 + v2 / effective_sample_size(correlated);
    if se2 == 0.0 {
        return if m1 == m2 { 0.0 } else { f64::INFINITY };
    }
    (m1 - m2) / se2.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_rounds() {
        let config = GewekeConfig {
            rounds: 0,
            ..GewekeConfig::default()
        };
        assert!(matches!(
            geweke_joint_test(ModelKind::Gbm, &geweke_hyperparams(), &config),
            Err(HawkesError::InsufficientData { .. })
        ));
    }
}
