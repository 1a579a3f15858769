//! Exact (and one linearised) conditional distributions used as Gibbs steps.

use rand::Rng;

use super::{sample_gamma, sample_normal, GammaPrior, InvGammaPrior, NormalPrior};
use crate::error::{HawkesError, Result};
use crate::model::{
    excitation_at_events, kernel_mass, BranchingStructure, ContagionPath, EventSequence,
    HawkesParams, Parent,
};
use crate::sde::GapSeries;

/// Parameters of a normal full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPosterior {
    pub mean: f64,
    pub var: f64,
}

/// Parameters of a Gamma full conditional (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPosterior {
    pub shape: f64,
    pub rate: f64,
}

/// Parameters of an inverse-gamma full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaPosterior {
    pub shape: f64,
    pub scale: f64,
}

fn check_aligned(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(HawkesError::Misaligned { expected, got })
    }
}

/// Conditional parent probabilities of event `i` (zero-based).
///
/// Entry 0 is the immigrant probability `(a + (λ₀−a)e^{−δTᵢ})/Wᵢ`; entry
/// `j + 1` is the probability that event `j` is the parent,
/// `Yⱼe^{−δ(Tᵢ−Tⱼ)}/Wᵢ`, with `Wᵢ` the sum of all numerators.
pub fn branching_probabilities(
    i: usize,
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<Vec<f64>> {
    check_aligned(events.len(), y.len())?;
    if i >= events.len() {
        return Err(HawkesError::IndexOutOfRange {
            index: i,
            len: events.len(),
        });
    }
    let times = events.times();
    let ti = times[i];
    let mut weights = Vec::with_capacity(i + 1);
    weights.push(params.base_at(ti));
    for j in 0..i {
        weights.push(y.levels()[j] * (-params.delta * (ti - times[j])).exp());
    }
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "normaliser must be positive when a > 0");
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Draw every parent independently from its conditional.
///
/// The normaliser `Wᵢ = λ(Tᵢ⁻)` is obtained by recursion in O(1); the parent is
/// then found by walking back from the most recent event until the cumulative
/// weight passes the uniform target, which touches only a few events when
/// excitations decay quickly.
pub fn gibbs_sample_z<R: Rng + ?Sized>(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
    rng: &mut R,
) -> Result<BranchingStructure> {
    check_aligned(events.len(), y.len())?;
    let times = events.times();
    let levels = y.levels();
    let excitation = excitation_at_events(times, levels, params.delta);
    let mut parents = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let base = params.base_at(times[i]);
        let target = rng.random::<f64>() * (base + excitation[i]);
        if i == 0 || target < base {
            parents.push(Parent::Immigrant);
            continue;
        }
        let mut acc = base;
        let mut parent = 0;
        for j in (0..i).rev() {
            acc += levels[j] * (-params.delta * (times[i] - times[j])).exp();
            if target < acc {
                parent = j;
                break;
            }
        }
        parents.push(Parent::Event(parent));
    }
    BranchingStructure::new(parents)
}

/// `Xᵢ = log(Yᵢ / Yᵢ₋₁)` with `Y₀ = y0`.
pub fn log_increments(y: &ContagionPath, y0: f64) -> Vec<f64> {
    let mut prev = y0.ln();
    y.levels()
        .iter()
        .map(|&yi| {
            let l = yi.ln();
            let x = l - prev;
            prev = l;
            x
        })
        .collect()
}

/// Conditional of the GBM drift given log-increments and the variance rate.
pub fn gbm_mu_posterior(
    x: &[f64],
    gaps: &GapSeries,
    sigma2: f64,
    prior: &NormalPrior,
) -> Result<NormalPosterior> {
    check_aligned(gaps.len(), x.len())?;
    let sum_x: f64 = x.iter().sum();
    let sum_dt = gaps.total();
    let s0 = prior.var;
    Ok(NormalPosterior {
        mean: (s0 * sum_x + prior.mean * sigma2) / (s0 * sum_dt + sigma2),
        var: 1.0 / (sum_dt / sigma2 + 1.0 / s0),
    })
}

pub fn gibbs_gbm_mu<R: Rng + ?Sized>(
    x: &[f64],
    gaps: &GapSeries,
    sigma2: f64,
    prior: &NormalPrior,
    rng: &mut R,
) -> Result<f64> {
    let post = gbm_mu_posterior(x, gaps, sigma2, prior)?;
    Ok(sample_normal(post.mean, post.var, rng))
}

/// Conditional of the GBM variance rate given log-increments and the drift.
pub fn gbm_sigma2_posterior(
    x: &[f64],
    gaps: &GapSeries,
    mu: f64,
    prior: &InvGammaPrior,
) -> Result<InvGammaPosterior> {
    check_aligned(gaps.len(), x.len())?;
    let ss: f64 = x
        .iter()
        .zip(gaps.gaps())
        .map(|(&xi, &dt)| {
            let r = xi - mu * dt;
            r * r / dt
        })
        .sum();
    Ok(InvGammaPosterior {
        shape: prior.shape + x.len() as f64 / 2.0,
        scale: prior.scale + 0.5 * ss,
    })
}

pub fn gibbs_gbm_sigma2<R: Rng + ?Sized>(
    x: &[f64],
    gaps: &GapSeries,
    mu: f64,
    prior: &InvGammaPrior,
    rng: &mut R,
) -> Result<f64> {
    let post = gbm_sigma2_posterior(x, gaps, mu, prior)?;
    Ok(1.0 / sample_gamma(post.shape, post.scale, rng))
}

/// Per-transition quantities of the Langevin law: `(φ⁻ᵢ, φ⁺ᵢ, rᵢ)` where
/// `rᵢ = log Yᵢ − φᵢ log Yᵢ₋₁`.
fn langevin_terms<'a>(
    y: &'a ContagionPath,
    y0: f64,
    gaps: &'a GapSeries,
    k: f64,
) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
    let mut prev = y0.ln();
    y.levels().iter().zip(gaps.gaps()).map(move |(&yi, &dt)| {
        let phi = (-k * dt).exp();
        let phi_minus = -(-k * dt).exp_m1();
        let l = yi.ln();
        let r = l - phi * prev;
        prev = l;
        (phi_minus, 1.0 + phi, r)
    })
}

/// Conditional of the Langevin mean level `μ`.
pub fn langevin_mu_posterior(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    k: f64,
    sigma2: f64,
    prior: &NormalPrior,
) -> Result<NormalPosterior> {
    check_aligned(gaps.len(), y.len())?;
    let (mut num, mut den) = (0.0, 0.0);
    for (phi_minus, phi_plus, r) in langevin_terms(y, y0, gaps, k) {
        let xi = 2.0 * k / phi_plus;
        num += r * xi;
        den += xi * phi_minus;
    }
    let s0 = prior.var;
    Ok(NormalPosterior {
        mean: (s0 * num + prior.mean * sigma2) / (s0 * den + sigma2),
        var: 1.0 / (den / sigma2 + 1.0 / s0),
    })
}

pub fn gibbs_langevin_mu<R: Rng + ?Sized>(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    k: f64,
    sigma2: f64,
    prior: &NormalPrior,
    rng: &mut R,
) -> Result<f64> {
    let post = langevin_mu_posterior(y, y0, gaps, k, sigma2, prior)?;
    Ok(sample_normal(post.mean, post.var, rng))
}

/// Conditional of the Langevin variance `σ²`: shape `α₀ + n/2`, scale
/// `β₀ + Σ k(rᵢ − μφ⁻ᵢ)²/(φ⁻ᵢφ⁺ᵢ)`, i.e. half the sum of squared residuals
/// over the per-step variance factor `φ⁻ᵢφ⁺ᵢ/(2k)`.
pub fn langevin_sigma2_posterior(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    k: f64,
    mu: f64,
    prior: &InvGammaPrior,
) -> Result<InvGammaPosterior> {
    check_aligned(gaps.len(), y.len())?;
    let ss: f64 = langevin_terms(y, y0, gaps, k)
        .map(|(phi_minus, phi_plus, r)| {
            let res = r - mu * phi_minus;
            k * res * res / (phi_minus * phi_plus)
        })
        .sum();
    Ok(InvGammaPosterior {
        shape: prior.shape + y.len() as f64 / 2.0,
        scale: prior.scale + ss,
    })
}

pub fn gibbs_langevin_sigma2<R: Rng + ?Sized>(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    k: f64,
    mu: f64,
    prior: &InvGammaPrior,
    rng: &mut R,
) -> Result<f64> {
    let post = langevin_sigma2_posterior(y, y0, gaps, k, mu, prior)?;
    Ok(1.0 / sample_gamma(post.shape, post.scale, rng))
}

/// First-order (linearised) approximation to the conditional of the
/// reversion rate `k`. This is not the exact conditional; the sampler offers
/// an exact MH update as well.
///
/// The variance can come out non-positive for some paths, in which case
/// `None` is returned.
pub fn langevin_k_linearized(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    mu: f64,
    sigma2: f64,
    prior: &NormalPrior,
) -> Result<Option<NormalPosterior>> {
    check_aligned(gaps.len(), y.len())?;
    let mut prev = y0.ln();
    let (mut sum_prev, mut sum_sq, mut sum_lin) = (0.0, 0.0, 0.0);
    for (&yi, &dt) in y.levels().iter().zip(gaps.gaps()) {
        let l = yi.ln();
        sum_prev += prev - mu;
        sum_sq += dt * (l - mu) * (l - mu);
        sum_lin += dt * (l - mu);
        prev = l;
    }
    let sk = prior.var;
    let mean = (sk * sum_prev + sigma2 * prior.mean) / (sk * sum_sq + sigma2);
    let precision = sum_lin / sigma2 + 1.0 / sk;
    if !(precision.is_finite() && precision > 0.0 && mean.is_finite()) {
        return Ok(None);
    }
    Ok(Some(NormalPosterior {
        mean,
        var: 1.0 / precision,
    }))
}

/// Draws from [`langevin_k_linearized`], rejecting non-positive values; after
/// `MAX_K_RETRIES` failures (or an unusable conditional) `current` is kept.
pub fn gibbs_langevin_k<R: Rng + ?Sized>(
    y: &ContagionPath,
    y0: f64,
    gaps: &GapSeries,
    mu: f64,
    sigma2: f64,
    prior: &NormalPrior,
    current: f64,
    rng: &mut R,
) -> Result<f64> {
    let Some(post) = langevin_k_linearized(y, y0, gaps, mu, sigma2, prior)? else {
        return Ok(current);
    };
    for _ in 0..MAX_K_RETRIES {
        let k = sample_normal(post.mean, post.var, rng);
        if k > 0.0 {
            return Ok(k);
        }
    }
    Ok(current)
}

pub const MAX_K_RETRIES: usize = 100;

/// Conditional of an iid-Gamma level: shape `τ + #offspring`, rate
/// `ω + (1 − e^{−δ(T−Tᵢ)})/δ`.
pub fn gamma_y_posterior(
    i: usize,
    events: &EventSequence,
    offspring: usize,
    delta: f64,
    tau: f64,
    omega: f64,
) -> Result<GammaPosterior> {
    let ti = *events.times().get(i).ok_or(HawkesError::IndexOutOfRange {
        index: i,
        len: events.len(),
    })?;
    Ok(GammaPosterior {
        shape: tau + offspring as f64,
        rate: omega + kernel_mass(delta, events.horizon() - ti),
    })
}

pub fn gibbs_gamma_y<R: Rng + ?Sized>(
    i: usize,
    events: &EventSequence,
    offspring: usize,
    delta: f64,
    tau: f64,
    omega: f64,
    rng: &mut R,
) -> Result<f64> {
    let post = gamma_y_posterior(i, events, offspring, delta, tau, omega)?;
    Ok(sample_gamma(post.shape, post.rate, rng).max(f64::MIN_POSITIVE))
}

/// Conditional of the Gamma rate `ω`: `Γ(α_ω + τn, β_ω + ΣYᵢ)`.
pub fn gamma_omega_posterior(y: &ContagionPath, tau: f64, prior: &GammaPrior) -> GammaPosterior {
    GammaPosterior {
        shape: prior.shape + tau * y.len() as f64,
        rate: prior.rate + y.levels().iter().sum::<f64>(),
    }
}

pub fn gibbs_gamma_omega<R: Rng + ?Sized>(
    y: &ContagionPath,
    tau: f64,
    prior: &GammaPrior,
    rng: &mut R,
) -> f64 {
    let post = gamma_omega_posterior(y, tau, prior);
    sample_gamma(post.shape, post.rate, rng)
}

/// Conditional of the constant level `ψ` of the classical model:
/// `Γ(α_ψ + #offspring, β_ψ + Σᵢ(1 − e^{−δ(T−Tᵢ)})/δ)`.
pub fn constant_psi_posterior(
    events: &EventSequence,
    z: &BranchingStructure,
    delta: f64,
    prior: &GammaPrior,
) -> Result<GammaPosterior> {
    check_aligned(events.len(), z.len())?;
    let offspring = z.len() - z.immigrant_count();
    let exposure: f64 = events
        .times()
        .iter()
        .map(|&t| kernel_mass(delta, events.horizon() - t))
        .sum();
    Ok(GammaPosterior {
        shape: prior.shape + offspring as f64,
        rate: prior.rate + exposure,
    })
}

pub fn gibbs_constant_psi<R: Rng + ?Sized>(
    events: &EventSequence,
    z: &BranchingStructure,
    delta: f64,
    prior: &GammaPrior,
    rng: &mut R,
) -> Result<f64> {
    let post = constant_psi_posterior(events, z, delta, prior)?;
    Ok(sample_gamma(post.shape, post.rate, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn first_event_is_always_an_immigrant() {
        let p = HawkesParams::new(0.5, 2.0, 1.0).unwrap();
        let ev = EventSequence::new(vec![0.4, 0.5], 2.0).unwrap();
        let y = ContagionPath::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(branching_probabilities(0, &ev, &y, &p).unwrap(), vec![1.0]);
        assert!(branching_probabilities(2, &ev, &y, &p).is_err());
        let mut rng = SeedTree::new(1).stream(0);
        for _ in 0..100 {
            let z = gibbs_sample_z(&ev, &y, &p, &mut rng).unwrap();
            assert_eq!(z.parents()[0], Parent::Immigrant);
        }
    }

    #[test]
    fn constructed_equal_split() {
        let p = HawkesParams::new(1.0, 1.0, 1.0).unwrap();
        let ev = EventSequence::new(vec![1.0, 2.0], 3.0).unwrap();
        let y = ContagionPath::new(vec![std::f64::consts::E, 1.0]).unwrap();
        let probs = branching_probabilities(1, &ev, &y, &p).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-15);
        assert!((probs[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vanishing_levels_make_everyone_an_immigrant() {
        let p = HawkesParams::new(1.0, 1.0, 1.0).unwrap();
        let ev = EventSequence::new(vec![1.0, 1.1, 1.2, 1.3], 3.0).unwrap();
        let y = ContagionPath::constant(1e-300, 4).unwrap();
        let mut rng = SeedTree::new(2).stream(0);
        for _ in 0..200 {
            let z = gibbs_sample_z(&ev, &y, &p, &mut rng).unwrap();
            assert_eq!(z.immigrant_count(), 4);
        }
    }

    #[test]
    fn gbm_mu_worked_example() {
        let gaps = GapSeries::new(vec![1.0, 2.0]).unwrap();
        let prior = NormalPrior { mean: 0.0, var: 1.0 };
        let post = gbm_mu_posterior(&[0.2, -0.1], &gaps, 1.0, &prior).unwrap();
        assert!((post.mean - 0.025).abs() < 1e-15);
        assert!((post.var - 0.25).abs() < 1e-15);

        let flat = NormalPrior { mean: 3.0, var: 1e12 };
        let post = gbm_mu_posterior(&[0.2, -0.1], &gaps, 1.0, &flat).unwrap();
        assert!((post.mean - 0.1 / 3.0).abs() < 1e-10);

        let empty = GapSeries::new(vec![]).unwrap();
        let post = gbm_mu_posterior(&[], &empty, 0.7, &prior).unwrap();
        assert_eq!(post, NormalPosterior { mean: 0.0, var: 1.0 });
    }

    #[test]
    fn gbm_sigma2_zero_residuals_keep_prior_scale() {
        let gaps = GapSeries::new(vec![0.5, 1.5, 2.0]).unwrap();
        let mu = 0.3;
        let x: Vec<f64> = gaps.gaps().iter().map(|d| mu * d).collect();
        let prior = InvGammaPrior { shape: 2.0, scale: 0.7 };
        let post = gbm_sigma2_posterior(&x, &gaps, mu, &prior).unwrap();
        assert!((post.scale - 0.7).abs() < 1e-15);
        assert_eq!(post.shape, 3.5);
    }

    #[test]
    fn langevin_mu_recovers_constant_level() {
        // Fast reversion (φ → 0) with a constant log-level c and a flat prior.
        let c = 0.8f64;
        let y = ContagionPath::constant(c.exp(), 5).unwrap();
        let gaps = GapSeries::new(vec![50.0; 5]).unwrap();
        let prior = NormalPrior { mean: 0.0, var: 1e12 };
        let post = langevin_mu_posterior(&y, c.exp(), &gaps, 2.0, 0.3, &prior).unwrap();
        assert!((post.mean - c).abs() < 1e-9);
    }

    #[test]
    fn k_concentrates_on_prior_mean_when_prior_is_tight() {
        let y = ContagionPath::new(vec![0.5, 0.9, 1.3]).unwrap();
        let gaps = GapSeries::new(vec![0.4, 0.2, 1.0]).unwrap();
        let prior = NormalPrior { mean: 1.7, var: 1e-14 };
        let post = langevin_k_linearized(&y, 1.0, &gaps, 0.1, 0.5, &prior)
            .unwrap()
            .unwrap();
        assert!((post.mean - 1.7).abs() < 1e-9);
        assert!(post.var < 1e-13);
    }

    #[test]
    fn k_draw_falls_back_to_current() {
        // A prior far below zero leaves no positive draws.
        let y = ContagionPath::new(vec![0.5]).unwrap();
        let gaps = GapSeries::new(vec![0.4]).unwrap();
        let prior = NormalPrior { mean: -50.0, var: 1e-6 };
        let mut rng = SeedTree::new(4).stream(0);
        let k = gibbs_langevin_k(&y, 1.0, &gaps, 0.0, 0.5, &prior, 0.9, &mut rng).unwrap();
        assert_eq!(k, 0.9);
    }

    #[test]
    fn gamma_y_limits() {
        let ev = EventSequence::new(vec![1.0, 5.0 - 1e-12], 5.0).unwrap();
        let post = gamma_y_posterior(1, &ev, 3, 0.5, 2.0, 1.5).unwrap();
        assert!((post.shape - 5.0).abs() < 1e-15);
        assert!((post.rate - 1.5).abs() < 1e-10);

        let ev = EventSequence::new(vec![1.0], 1e4).unwrap();
        let post = gamma_y_posterior(0, &ev, 0, 0.5, 2.0, 1.5).unwrap();
        assert!((post.rate - 3.5).abs() < 1e-12);
    }

    #[test]
    fn omega_posterior_formula() {
        let y = ContagionPath::new(vec![0.5, 1.5, 2.0]).unwrap();
        let prior = GammaPrior { shape: 2.0, rate: 3.0 };
        let post = gamma_omega_posterior(&y, 1.5, &prior);
        assert_eq!(post.shape, 2.0 + 4.5);
        assert_eq!(post.rate, 3.0 + 4.0);
        let tiny = gamma_omega_posterior(&y, 1e-300, &prior);
        assert_eq!(tiny.shape, 2.0);
        let empty = gamma_omega_posterior(&ContagionPath::new(vec![]).unwrap(), 1.5, &prior);
        assert_eq!((empty.shape, empty.rate), (2.0, 3.0));
    }
}
