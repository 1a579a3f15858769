//! Metropolis–Hastings log acceptance ratios.
//!
//! Every ratio assumes a symmetric random-walk proposal, so it is simply the
//! change in log-posterior. The closed forms below are cheap, local versions
//! of [`mh_log_accept_generic`], which recomputes the full posterior.

use statrs::function::gamma::ln_gamma;

use super::{ChainState, GammaPrior, Hyperparams};
use crate::error::{HawkesError, Result};
use crate::model::{
    kernel_mass, log_likelihood, ContagionPath, EventSequence, HawkesParams, Parent, SdeKind,
    SdeSpec,
};

/// Sum of the prior log-densities of `a`, `λ₀`, `δ` and the level-law
/// parameters. The reversion rate's normal prior is truncated to `k > 0`.
pub fn log_prior(params: &HawkesParams, spec: &SdeSpec, hyper: &Hyperparams) -> f64 {
    let base = hyper.a.logpdf(params.a)
        + hyper.lambda0.logpdf(params.lambda0)
        + hyper.delta.logpdf(params.delta);
    let law = match spec.kind {
        SdeKind::Constant { psi } => hyper.psi.logpdf(psi),
        SdeKind::IidGamma { shape, rate } => hyper.tau.logpdf(shape) + hyper.omega.logpdf(rate),
        SdeKind::Gbm { mu, sigma2 } => hyper.mu.logpdf(mu) + hyper.sigma2.logpdf(sigma2),
        SdeKind::ExpLangevin { k, mu, sigma2 } => {
            if k <= 0.0 {
                return f64::NEG_INFINITY;
            }
            hyper.k.logpdf(k) + hyper.mu.logpdf(mu) + hyper.sigma2.logpdf(sigma2)
        }
    };
    base + law
}

/// Unnormalised joint log-posterior of parameters and latent variables:
/// branching likelihood, level-path density and priors.
pub fn log_posterior(events: &EventSequence, state: &ChainState, hyper: &Hyperparams) -> Result<f64> {
    let ll = log_likelihood(events, &state.z, &state.y, &state.params)?;
    let path = state.spec.path_logpdf(&state.y, &events.gaps())?;
    Ok(ll + path + log_prior(&state.params, &state.spec, hyper))
}

/// Log acceptance ratio for the Gamma shape `τ → τ′` given the rate `ω`.
pub fn mh_log_accept_tau(
    tau_new: f64,
    tau: f64,
    omega: f64,
    y: &ContagionPath,
    prior: &GammaPrior,
) -> f64 {
    if tau_new <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if tau_new == tau {
        return 0.0;
    }
    let n = y.len() as f64;
    let sum_log_y: f64 = y.levels().iter().map(|v| v.ln()).sum();
    (tau_new - tau) * (n * omega.ln() + sum_log_y) + (prior.shape - 1.0) * (tau_new / tau).ln()
        - n * (ln_gamma(tau_new) - ln_gamma(tau))
        - (tau_new - tau) * prior.rate
}

/// Everything a single-level move needs to know about its neighbourhood.
pub(crate) struct LevelMove<'a> {
    pub i: usize,
    pub proposed: f64,
    pub levels: &'a [f64],
    /// Inter-event gaps, the first measured from time zero.
    pub gaps: &'a [f64],
    /// `(1 − e^{−δ(T−Tᵢ)})/δ`.
    pub exposure: f64,
    pub offspring: usize,
}

impl LevelMove<'_> {
    fn likelihood_part(&self) -> f64 {
        let current = self.levels[self.i];
        -(self.proposed - current) * self.exposure
            + self.offspring as f64 * (self.proposed / current).ln()
    }

    fn previous(&self, y0: f64) -> f64 {
        if self.i == 0 {
            y0
        } else {
            self.levels[self.i - 1]
        }
    }

    /// Closed form for geometric Brownian levels.
    pub fn gbm(&self, mu: f64, sigma2: f64, y0: f64) -> f64 {
        if self.proposed <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let current = self.levels[self.i];
        if self.proposed == current {
            return 0.0;
        }
        let (ln_new, ln_old) = (self.proposed.ln(), current.ln());
        let ln_prev = self.previous(y0).ln();
        let dt = self.gaps[self.i];
        let back = |l: f64| {
            let r = l - ln_prev - mu * dt;
            r * r
        };
        let mut ratio = self.exposure * (current - self.proposed)
            - (back(ln_new) - back(ln_old)) / (2.0 * sigma2 * dt)
            + (self.offspring as f64 - 1.0) * (ln_new - ln_old);
        if let Some(&next) = self.levels.get(self.i + 1) {
            let dt_next = self.gaps[self.i + 1];
            let ln_next = next.ln();
            let fwd = |l: f64| {
                let r = ln_next - l - mu * dt_next;
                r * r
            };
            ratio -= (fwd(ln_new) - fwd(ln_old)) / (2.0 * sigma2 * dt_next);
        }
        ratio
    }

    /// Same move for any Markov level law, scored with its transition density.
    pub fn markov(&self, spec: &SdeSpec) -> f64 {
        if self.proposed <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let current = self.levels[self.i];
        if self.proposed == current {
            return 0.0;
        }
        let prev = self.previous(spec.y0);
        let dt = self.gaps[self.i];
        let mut ratio = self.likelihood_part() + spec.transition_logpdf(prev, self.proposed, dt)
            - spec.transition_logpdf(prev, current, dt);
        if let Some(&next) = self.levels.get(self.i + 1) {
            let dt_next = self.gaps[self.i + 1];
            ratio += spec.transition_logpdf(self.proposed, next, dt_next)
                - spec.transition_logpdf(current, next, dt_next);
        }
        ratio
    }
}

/// Multiplies the levels `start..end` by `e^{log_factor}` at once. Single-site
/// moves barely change the shape of a smooth path; shifting a whole stretch
/// moves it at the cost of only the transitions at its edges (for GBM).
pub(crate) struct BlockShift<'a> {
    pub start: usize,
    pub end: usize,
    pub log_factor: f64,
    pub levels: &'a [f64],
    pub gaps: &'a [f64],
    pub exposure: &'a [f64],
    pub offspring: &'a [usize],
}

impl BlockShift<'_> {
    /// Log acceptance ratio under a Markov level law, including the
    /// `e^{log_factor·len}` Jacobian of the multiplicative move.
    pub fn markov(&self, spec: &SdeSpec) -> f64 {
        let factor = self.log_factor.exp();
        let shifted = |i: usize| {
            if (self.start..self.end).contains(&i) {
                self.levels[i] * factor
            } else {
                self.levels[i]
            }
        };
        let mut ratio = self.log_factor * (self.end - self.start) as f64;
        for i in self.start..self.end {
            ratio += -(shifted(i) - self.levels[i]) * self.exposure[i]
                + self.offspring[i] as f64 * self.log_factor;
        }
        let last = self.end.min(self.levels.len() - 1);
        for i in self.start..=last {
            let (prev, prev_new) = if i == 0 {
                (spec.y0, spec.y0)
            } else {
                (self.levels[i - 1], shifted(i - 1))
            };
            let dt = self.gaps[i];
            ratio += spec.transition_logpdf(prev_new, shifted(i), dt)
                - spec.transition_logpdf(prev, self.levels[i], dt);
        }
        ratio
    }
}

/// Joint moves of a GBM law parameter and the whole level path. Given the
/// path, the drift and variance rate are pinned down tightly, and vice versa,
/// so updating either alone crawls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GbmJoint {
    /// `μ → μ + η` while adding `η·Tᵢ` to every `log Yᵢ`: the drift-adjusted
    /// increments are unchanged.
    Tilt,
    /// `σ² → e^{2η}σ²` while scaling every drift-adjusted increment by `e^η`.
    Roughen,
}

/// Proposed law, proposed levels and the log-Jacobian of the move in the
/// `(Y, law)` coordinates. `None` when the kind is not GBM or a level leaves
/// the representable range.
pub(crate) fn gbm_joint_proposal(
    which: GbmJoint,
    eta: f64,
    spec: &SdeSpec,
    levels: &[f64],
    gaps: &[f64],
) -> Option<(SdeSpec, Vec<f64>, f64)> {
    let SdeKind::Gbm { mu, sigma2 } = spec.kind else {
        return None;
    };
    let mut proposed = Vec::with_capacity(levels.len());
    let mut log_jacobian = 0.0;
    let (mut prev_old, mut prev_new) = (spec.y0.ln(), spec.y0.ln());
    let mut t = 0.0;
    for (&y, &dt) in levels.iter().zip(gaps) {
        t += dt;
        let l = y.ln();
        let l_new = match which {
            GbmJoint::Tilt => l + eta * t,
            GbmJoint::Roughen => prev_new + mu * dt + eta.exp() * (l - prev_old - mu * dt),
        };
        let y_new = l_new.exp();
        if !(y_new > 0.0 && y_new.is_finite()) {
            return None;
        }
        log_jacobian += l_new - l;
        proposed.push(y_new);
        prev_old = l;
        prev_new = l_new;
    }
    let kind = match which {
        GbmJoint::Tilt => SdeKind::Gbm { mu: mu + eta, sigma2 },
        GbmJoint::Roughen => {
            // Increments scale by e^η and σ² by e^{2η}.
            log_jacobian += (levels.len() as f64 + 2.0) * eta;
            SdeKind::Gbm { mu, sigma2: sigma2 * (2.0 * eta).exp() }
        }
    };
    Some((SdeSpec { kind, y0: spec.y0 }, proposed, log_jacobian))
}

/// Change in log-posterior when the levels and the law move together with
/// the branching structure held fixed.
pub(crate) fn path_move_log_ratio(
    params: &HawkesParams,
    (spec, spec_new): (&SdeSpec, &SdeSpec),
    (levels, proposed): (&[f64], &[f64]),
    gaps: &[f64],
    exposure: &[f64],
    offspring: &[usize],
    hyper: &Hyperparams,
) -> f64 {
    let mut ratio = log_prior(params, spec_new, hyper) - log_prior(params, spec, hyper);
    let (mut prev, mut prev_new) = (spec.y0, spec_new.y0);
    for i in 0..levels.len() {
        let (y, y_new) = (levels[i], proposed[i]);
        ratio += -(y_new - y) * exposure[i] + offspring[i] as f64 * (y_new / y).ln();
        ratio += spec_new.transition_logpdf(prev_new, y_new, gaps[i])
            - spec.transition_logpdf(prev, y, gaps[i]);
        prev = y;
        prev_new = y_new;
    }
    ratio
}

fn offspring_of(state: &ChainState, i: usize) -> usize {
    state
        .z
        .parents()
        .iter()
        .filter(|p| **p == Parent::Event(i))
        .count()
}

fn check_index(events: &EventSequence, i: usize) -> Result<()> {
    if i < events.len() {
        Ok(())
    } else {
        Err(HawkesError::IndexOutOfRange {
            index: i,
            len: events.len(),
        })
    }
}

/// Log acceptance ratio for moving the GBM level of event `i` to `y_new`.
pub fn mh_log_accept_y_gbm(
    i: usize,
    y_new: f64,
    events: &EventSequence,
    state: &ChainState,
) -> Result<f64> {
    check_index(events, i)?;
    let SdeKind::Gbm { mu, sigma2 } = state.spec.kind else {
        return Err(HawkesError::InvalidParameter {
            name: "spec",
            value: f64::NAN,
            reason: "GBM level ratio needs a GBM law",
        });
    };
    let gaps = events.gaps();
    let mv = LevelMove {
        i,
        proposed: y_new,
        levels: state.y.levels(),
        gaps: gaps.gaps(),
        exposure: kernel_mass(state.params.delta, events.horizon() - events.times()[i]),
        offspring: offspring_of(state, i),
    };
    Ok(mv.gbm(mu, sigma2, state.spec.y0))
}

/// Log acceptance ratio for the long-run base rate `a → a′`.
pub fn mh_log_accept_a(
    a_new: f64,
    events: &EventSequence,
    state: &ChainState,
    prior: &GammaPrior,
) -> Result<f64> {
    a_log_ratio(a_new, events, state, prior, 1.0)
}

/// `exposure_sign = −1` deliberately breaks the ratio; the Geweke test uses
/// it to show that it can detect a wrong sampler.
pub(crate) fn a_log_ratio(
    a_new: f64,
    events: &EventSequence,
    state: &ChainState,
    prior: &GammaPrior,
    exposure_sign: f64,
) -> Result<f64> {
    if events.len() != state.z.len() {
        return Err(HawkesError::Misaligned {
            expected: events.len(),
            got: state.z.len(),
        });
    }
    if !(a_new > 0.0 && a_new.is_finite()) {
        return Ok(f64::NEG_INFINITY);
    }
    let p = &state.params;
    if a_new == p.a {
        return Ok(0.0);
    }
    let proposed = HawkesParams { a: a_new, ..*p };
    let mut ratio = 0.0;
    for (&t, parent) in events.times().iter().zip(state.z.parents()) {
        if *parent == Parent::Immigrant {
            let new_base = proposed.base_at(t);
            if new_base <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            ratio += (new_base / p.base_at(t)).ln();
        }
    }
    let horizon = events.horizon();
    ratio += (prior.shape - 1.0) * (a_new / p.a).ln();
    ratio += exposure_sign * (a_new - p.a) * (kernel_mass(p.delta, horizon) - horizon)
        - (a_new - p.a) * prior.rate;
    Ok(ratio)
}

/// Blocks updated through the generic full-posterior ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Lambda0,
    Delta,
    /// Level of event `i` under the Langevin (or any Markov) law.
    Level(usize),
    /// Reversion rate of the Langevin law.
    Reversion,
}

/// `log π(proposed) − log π(current)` with the block set to `proposed`,
/// evaluated from scratch. `−∞` outside the block's domain.
pub fn mh_log_accept_generic(
    block: Block,
    proposed: f64,
    events: &EventSequence,
    state: &ChainState,
    hyper: &Hyperparams,
) -> Result<f64> {
    if !(proposed.is_finite() && proposed > 0.0) {
        if let Block::Level(i) = block {
            check_index(events, i)?;
        }
        return Ok(f64::NEG_INFINITY);
    }
    let mut next = state.clone();
    match block {
        Block::Lambda0 => next.params.lambda0 = proposed,
        Block::Delta => next.params.delta = proposed,
        Block::Level(i) => {
            check_index(events, i)?;
            next.y.levels_mut()[i] = proposed;
        }
        Block::Reversion => match &mut next.spec.kind {
            SdeKind::ExpLangevin { k, .. } => *k = proposed,
            _ => {
                return Err(HawkesError::InvalidParameter {
                    name: "spec",
                    value: f64::NAN,
                    reason: "reversion block needs a Langevin law",
                })
            }
        },
    }
    let new = log_posterior(events, &next, hyper)?;
    if new == f64::NEG_INFINITY {
        return Ok(new);
    }
    Ok(new - log_posterior(events, state, hyper)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BranchingStructure;

    fn gbm_state() -> (EventSequence, ChainState) {
        let events = EventSequence::new(vec![0.3, 0.9, 1.4, 2.2], 3.0).unwrap();
        let state = ChainState {
            params: HawkesParams::new(0.7, 1.3, 1.1).unwrap(),
            spec: SdeSpec::new(SdeKind::Gbm { mu: 0.1, sigma2: 0.4 }, 1.0).unwrap(),
            y: ContagionPath::new(vec![0.8, 1.2, 0.6, 1.5]).unwrap(),
            z: BranchingStructure::new(vec![
                Parent::Immigrant,
                Parent::Event(0),
                Parent::Event(0),
                Parent::Immigrant,
            ])
            .unwrap(),
        };
        (events, state)
    }

    #[test]
    fn identity_proposals_score_zero() {
        let (events, state) = gbm_state();
        let hyper = Hyperparams::default();
        assert_eq!(mh_log_accept_y_gbm(2, 0.6, &events, &state).unwrap(), 0.0);
        assert_eq!(mh_log_accept_a(0.7, &events, &state, &hyper.a).unwrap(), 0.0);
        assert_eq!(
            mh_log_accept_tau(2.0, 2.0, 1.0, &state.y, &hyper.tau),
            0.0
        );
        assert_eq!(
            mh_log_accept_generic(Block::Delta, 1.1, &events, &state, &hyper).unwrap(),
            0.0
        );
    }

    #[test]
    fn domain_guards() {
        let (events, state) = gbm_state();
        let hyper = Hyperparams::default();
        assert_eq!(
            mh_log_accept_y_gbm(1, -0.2, &events, &state).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            mh_log_accept_a(0.0, &events, &state, &hyper.a).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            mh_log_accept_generic(Block::Lambda0, -1.0, &events, &state, &hyper).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(mh_log_accept_y_gbm(4, 1.0, &events, &state).is_err());
        assert!(mh_log_accept_generic(Block::Reversion, 1.0, &events, &state, &hyper).is_err());
    }

    #[test]
    fn gbm_ratio_matches_full_posterior() {
        let (events, state) = gbm_state();
        let hyper = Hyperparams::default();
        for i in 0..4 {
            for y_new in [0.2, 0.95, 3.0] {
                let closed = mh_log_accept_y_gbm(i, y_new, &events, &state).unwrap();
                let generic =
                    mh_log_accept_generic(Block::Level(i), y_new, &events, &state, &hyper).unwrap();
                assert!((closed - generic).abs() < 1e-10, "i={i} {closed} vs {generic}");
            }
        }
    }

    #[test]
    fn a_ratio_with_a_single_immigrant() {
        let (events, mut state) = gbm_state();
        state.z = BranchingStructure::new(vec![
            Parent::Immigrant,
            Parent::Event(0),
            Parent::Event(1),
            Parent::Event(2),
        ])
        .unwrap();
        // Only the first event, which is always an immigrant, contributes a
        // base-intensity factor.
        let flat = GammaPrior { shape: 1.0, rate: 1e-300 };
        let r = mh_log_accept_a(0.9, &events, &state, &flat).unwrap();
        let t0 = events.times()[0];
        let p = state.params;
        let immigrant = ((0.9 + (p.lambda0 - 0.9) * (-p.delta * t0).exp())
            / p.base_at(t0))
        .ln();
        let exposure = 0.2 * (kernel_mass(p.delta, 3.0) - 3.0);
        assert!((r - immigrant - exposure).abs() < 1e-12);
    }

    #[test]
    fn tau_ratio_prefers_smaller_shape_under_heavy_rate_prior() {
        let y = ContagionPath::new(vec![1.0, 2.0]).unwrap();
        let prior = GammaPrior { shape: 2.0, rate: 1e9 };
        assert!(mh_log_accept_tau(1.5, 1.0, 1.0, &y, &prior) < -1e8);
    }

    #[test]
    fn block_shift_matches_posterior_difference() {
        let (events, mut state) = gbm_state();
        let hyper = Hyperparams::default();
        let gaps = events.gaps();
        let exposure: Vec<f64> = events
            .times()
            .iter()
            .map(|&t| kernel_mass(state.params.delta, events.horizon() - t))
            .collect();
        let offspring = state.z.offspring_counts();
        for spec in [
            state.spec,
            SdeSpec::new(SdeKind::ExpLangevin { k: 0.7, mu: -0.2, sigma2: 0.3 }, 0.9).unwrap(),
        ] {
            state.spec = spec;
            for (start, end, eps) in [(0, 4, 0.3), (1, 3, -0.25), (3, 4, 0.1), (0, 1, -0.4)] {
                let shift = BlockShift {
                    start,
                    end,
                    log_factor: eps,
                    levels: state.y.levels(),
                    gaps: gaps.gaps(),
                    exposure: &exposure,
                    offspring: &offspring,
                };
                let fast = shift.markov(&spec);
                let mut moved = state.clone();
                for v in &mut moved.y.levels_mut()[start..end] {
                    *v *= f64::exp(eps);
                }
                let brute = log_posterior(&events, &moved, &hyper).unwrap()
                    - log_posterior(&events, &state, &hyper).unwrap()
                    + eps * (end - start) as f64;
                assert!((fast - brute).abs() < 1e-10, "{start}..{end}: {fast} vs {brute}");
            }
        }
    }

    #[test]
    fn gbm_joint_moves_invert_and_match_posterior() {
        let (events, state) = gbm_state();
        let hyper = Hyperparams::default();
        let gaps = events.gaps();
        let exposure: Vec<f64> = events
            .times()
            .iter()
            .map(|&t| kernel_mass(state.params.delta, events.horizon() - t))
            .collect();
        let offspring = state.z.offspring_counts();
        let levels = state.y.levels();
        for which in [GbmJoint::Tilt, GbmJoint::Roughen] {
            let (spec_new, proposed, _) =
                gbm_joint_proposal(which, 0.3, &state.spec, levels, gaps.gaps()).unwrap();
            let (back, restored, _) =
                gbm_joint_proposal(which, -0.3, &spec_new, &proposed, gaps.gaps()).unwrap();
            assert_eq!(back.model_kind(), state.spec.model_kind());
            for (a, b) in back.parameter_values().iter().zip(state.spec.parameter_values()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in restored.iter().zip(levels) {
                assert!((a - b).abs() < 1e-12);
            }
            let fast = path_move_log_ratio(
                &state.params,
                (&state.spec, &spec_new),
                (levels, &proposed),
                gaps.gaps(),
                &exposure,
                &offspring,
                &hyper,
            );
            let moved = ChainState {
                spec: spec_new,
                y: ContagionPath::new(proposed.clone()).unwrap(),
                ..state.clone()
            };
            let brute = log_posterior(&events, &moved, &hyper).unwrap()
                - log_posterior(&events, &state, &hyper).unwrap();
            assert!((fast - brute).abs() < 1e-10, "{which:?}: {fast} vs {brute}");
        }
        let constant = SdeSpec::constant(0.5).unwrap();
        assert!(gbm_joint_proposal(GbmJoint::Tilt, 0.1, &constant, levels, gaps.gaps()).is_none());
    }
}
