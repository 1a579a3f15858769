use rand::Rng;
use rand_distr::StandardNormal;

use super::conditionals::{
    gibbs_gbm_mu, gibbs_gbm_sigma2, gibbs_langevin_k, gibbs_langevin_mu, gibbs_langevin_sigma2,
    gibbs_sample_z, log_increments,
};
use super::ratios::{
    a_log_ratio, gbm_joint_proposal, log_prior, mh_log_accept_tau, path_move_log_ratio,
    BlockShift, GbmJoint, LevelMove,
};
use super::{sample_gamma, ChainState, Hyperparams};
use crate::error::{HawkesError, Result};
use crate::model::{
    kernel_mass, log_likelihood, marginal_log_likelihood, BranchingStructure, ContagionPath,
    EventSequence, HawkesParams, ModelKind, SdeKind, SdeSpec,
};
use crate::rng::{stream, HawkesRng, SeedTree};
use crate::sde::{sample_path, GapSeries};

/// Acceptance rate the burn-in adaptation steers towards.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
/// Sweeps per adaptation batch.
pub const ADAPT_BATCH: usize = 50;
const MAX_PRIOR_REDRAWS: usize = 1000;
/// Starting standard deviation of the log-scale block shifts.
const INITIAL_SHIFT_SCALE: f64 = 0.1;

/// Lengths of the stretches moved together by block shifts: powers of two
/// from 4 below `n`, then the whole path.
fn shift_sizes(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let mut sizes: Vec<usize> = std::iter::successors(Some(4usize), |l| Some(l * 2))
        .take_while(|&l| l < n)
        .collect();
    sizes.push(n);
    sizes
}

/// Where the chain starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Parameters drawn from their priors, levels from the level law.
    #[default]
    Prior,
    /// `a = λ₀ = n/T`, `δ = 1`, law parameters at their prior means and
    /// levels at a typical value. Useful when prior draws start far out.
    Deterministic,
}

/// How the Langevin reversion rate is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KUpdate {
    /// Draw from the linearised normal conditional (approximate).
    Linearized,
    /// Random-walk MH on the exact conditional.
    #[default]
    ExactMh,
    /// Keep `k` at its initial value.
    Fixed,
}

/// Deliberate sampler defects, used only to check that the Geweke test has
/// power. Never set this outside tests.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of the exposure term in the `a` acceptance ratio.
    FlipExposureSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: usize,
    pub seed: u64,
    pub init: Init,
    /// Tune proposal scales during burn-in.
    pub adapt: bool,
    pub k_update: KUpdate,
    /// Store the levels and branching structure with every retained draw.
    pub save_latent: bool,
    #[doc(hidden)]
    pub mutation: Mutation,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 1000,
            thin: 1,
            seed: 0,
            init: Init::Prior,
            adapt: true,
            k_update: KUpdate::ExactMh,
            save_latent: false,
            mutation: Mutation::None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(HawkesError::InvalidParameter {
                name: "iterations",
                value: self.iterations as f64,
                reason: "must exceed burn_in",
            });
        }
        if self.thin == 0 {
            return Err(HawkesError::InvalidParameter {
                name: "thin",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// One retained sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub iteration: usize,
    pub params: HawkesParams,
    pub spec: SdeSpec,
    pub log_likelihood: f64,
    pub latent: Option<(ContagionPath, BranchingStructure)>,
}

impl Draw {
    /// `a, λ₀, δ` followed by the law parameters, matching
    /// [`Chain::parameter_names`].
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.params.a, self.params.lambda0, self.params.delta];
        v.extend(self.spec.parameter_values());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Tally {
    accepted: u64,
    proposed: u64,
}

impl Tally {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Post-burn-in acceptance counts of one MH block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockAcceptance {
    pub block: &'static str,
    pub accepted: u64,
    pub proposed: u64,
}

impl BlockAcceptance {
    pub fn rate(&self) -> f64 {
        Tally {
            accepted: self.accepted,
            proposed: self.proposed,
        }
        .rate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub kind: ModelKind,
    pub draws: Vec<Draw>,
    pub acceptance: Vec<BlockAcceptance>,
    pub seed: u64,
    /// Posterior mean of each level over the retained draws.
    pub y_mean: Vec<f64>,
}

impl Chain {
    pub fn parameter_names(&self) -> Vec<&'static str> {
        let mut names = vec!["a", "lambda0", "delta"];
        names.extend_from_slice(self.kind.parameter_names());
        names
    }

    /// Trace of one named parameter.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.parameter_names().iter().position(|n| *n == name)?;
        Some(self.draws.iter().map(|d| d.values()[idx]).collect())
    }
}

/// Proposal standard deviations.
#[derive(Debug, Clone, PartialEq)]
struct Scales {
    a: f64,
    lambda0: f64,
    delta: f64,
    tau: f64,
    k: f64,
    y: Vec<f64>,
    /// One per entry of [`shift_sizes`].
    shift: Vec<f64>,
    tilt: f64,
    roughen: f64,
    /// Moves scored with the branching structure summed out.
    marginal_delta: f64,
    marginal_tilt: f64,
}

#[derive(Debug, Clone, Default)]
struct Tallies {
    a: Tally,
    lambda0: Tally,
    delta: Tally,
    tau: Tally,
    k: Tally,
    y: Vec<Tally>,
    shift: Vec<Tally>,
    tilt: Tally,
    roughen: Tally,
    marginal_delta: Tally,
    marginal_tilt: Tally,
}

struct Streams {
    z: HawkesRng,
    y: HawkesRng,
    base: HawkesRng,
    law: HawkesRng,
}

/// A running hybrid Gibbs/MH chain on a fixed event sequence.
pub struct Sampler {
    events: EventSequence,
    gaps: GapSeries,
    hyper: Hyperparams,
    config: McmcConfig,
    state: ChainState,
    streams: Streams,
    scales: Scales,
    /// Counts since the last adaptation.
    batch: Tallies,
    /// Counts after burn-in.
    total: Tallies,
    /// `(1 − e^{−δ(T−Tᵢ)})/δ` at the current `δ`.
    exposure: Vec<f64>,
    offspring: Vec<usize>,
    log_likelihood: f64,
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn finite(block: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(HawkesError::NonFinitePosterior { block })
    }
}

fn draw_k<R: Rng + ?Sized>(hyper: &Hyperparams, rng: &mut R) -> f64 {
    (0..MAX_PRIOR_REDRAWS)
        .map(|_| hyper.k.sample(rng))
        .find(|&k| k > 0.0)
        .unwrap_or_else(|| hyper.k.mean.abs().max(1.0))
}

fn typical_levels(spec: &SdeSpec, n: usize) -> Result<ContagionPath> {
    let value = match spec.kind {
        SdeKind::Constant { psi } => psi,
        SdeKind::IidGamma { shape, rate } => shape / rate,
        SdeKind::Gbm { .. } | SdeKind::ExpLangevin { .. } => spec.y0,
    };
    ContagionPath::constant(value, n)
}

/// Draw `a, λ₀, δ` and the law parameters from their priors.
pub fn sample_prior<R: Rng + ?Sized>(
    kind: ModelKind,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<(HawkesParams, SdeSpec)> {
    let params = HawkesParams::new(
        hyper.a.sample(rng),
        hyper.lambda0.sample(rng),
        hyper.delta.sample(rng),
    )?;
    let law = match kind {
        ModelKind::Constant => SdeKind::Constant {
            psi: hyper.psi.sample(rng),
        },
        ModelKind::IidGamma => SdeKind::IidGamma {
            shape: hyper.tau.sample(rng),
            rate: hyper.omega.sample(rng),
        },
        ModelKind::Gbm => SdeKind::Gbm {
            mu: hyper.mu.sample(rng),
            sigma2: hyper.sigma2.sample(rng),
        },
        ModelKind::ExpLangevin => SdeKind::ExpLangevin {
            k: draw_k(hyper, rng),
            mu: hyper.mu.sample(rng),
            sigma2: hyper.sigma2.sample(rng),
        },
    };
    Ok((params, SdeSpec::new(law, hyper.y0)?))
}

/// Starting state for `kind` on `events`.
pub fn initial_state<R: Rng + ?Sized>(
    events: &EventSequence,
    kind: ModelKind,
    hyper: &Hyperparams,
    init: Init,
    rng: &mut R,
) -> Result<ChainState> {
    let n = events.len();
    let y0 = hyper.y0;
    let (params, law) = match init {
        Init::Prior => {
            let (params, spec) = sample_prior(kind, hyper, rng)?;
            (params, spec.kind)
        }
        Init::Deterministic => {
            let rate = if n > 0 && events.horizon() > 0.0 {
                n as f64 / events.horizon()
            } else {
                hyper.a.mean()
            };
            let params = HawkesParams::new(rate, rate, 1.0)?;
            let law = match kind {
                ModelKind::Constant => SdeKind::Constant {
                    psi: hyper.psi.mean(),
                },
                ModelKind::IidGamma => SdeKind::IidGamma {
                    shape: hyper.tau.mean(),
                    rate: hyper.omega.mean(),
                },
                ModelKind::Gbm => SdeKind::Gbm {
                    mu: hyper.mu.mean,
                    sigma2: hyper.sigma2.center(),
                },
                ModelKind::ExpLangevin => SdeKind::ExpLangevin {
                    k: if hyper.k.mean > 0.0 { hyper.k.mean } else { 1.0 },
                    mu: hyper.mu.mean,
                    sigma2: hyper.sigma2.center(),
                },
            };
            (params, law)
        }
    };
    let spec = SdeSpec::new(law, y0)?;
    let y = match (init, kind) {
        (Init::Deterministic, _) | (_, ModelKind::Constant) => typical_levels(&spec, n)?,
        // A path drawn from a diffuse prior can overflow or underflow over a
        // long window; fall back to a typical level when it does.
        (Init::Prior, _) => match sample_path(&spec, &events.gaps(), rng) {
            Ok(path) if path.levels().iter().all(|&v| v > 0.0 && v < 1e300) => path,
            _ => typical_levels(&spec, n)?,
        },
    };
    Ok(ChainState {
        params,
        spec,
        y,
        z: BranchingStructure::all_immigrants(n),
    })
}

impl Sampler {
    /// Initialise according to `config.init`.
    pub fn new(
        events: EventSequence,
        kind: ModelKind,
        hyper: Hyperparams,
        config: McmcConfig,
    ) -> Result<Self> {
        hyper.validate()?;
        let mut rng = SeedTree::new(config.seed).stream(stream::INIT);
        let state = initial_state(&events, kind, &hyper, config.init, &mut rng)?;
        Self::with_state(events, state, hyper, config)
    }

    /// Start from a given state.
    pub fn with_state(
        events: EventSequence,
        state: ChainState,
        hyper: Hyperparams,
        config: McmcConfig,
    ) -> Result<Self> {
        hyper.validate()?;
        config.validate()?;
        check_state(&events, &state)?;
        let seeds = SeedTree::new(config.seed);
        let p = hyper.proposals;
        let tenth = |v: f64| (0.1 * v.abs()).max(f64::MIN_POSITIVE);
        let (tau, k) = match state.spec.kind {
            SdeKind::IidGamma { shape, .. } => (shape, 1.0),
            SdeKind::ExpLangevin { k, .. } => (1.0, k),
            _ => (1.0, 1.0),
        };
        let tilt = match state.spec.kind {
            SdeKind::Gbm { sigma2, .. } if events.horizon() > 0.0 => {
                (sigma2 / events.horizon()).sqrt().max(1e-6)
            }
            _ => INITIAL_SHIFT_SCALE,
        };
        let scales = Scales {
            a: p.a.unwrap_or_else(|| tenth(state.params.a)),
            lambda0: p.lambda0.unwrap_or_else(|| tenth(state.params.lambda0)),
            delta: p.delta.unwrap_or_else(|| tenth(state.params.delta)),
            tau: p.tau.unwrap_or_else(|| tenth(tau)),
            k: p.k.unwrap_or_else(|| tenth(k)),
            y: state
                .y
                .levels()
                .iter()
                .map(|&v| p.y.unwrap_or_else(|| tenth(v)))
                .collect(),
            shift: vec![INITIAL_SHIFT_SCALE; shift_sizes(events.len()).len()],
            // Rough posterior spreads of μ and of ½·log σ².
            tilt,
            roughen: 0.5 / ((events.len() + 1) as f64).sqrt(),
            marginal_delta: p.delta.unwrap_or_else(|| tenth(state.params.delta)),
            marginal_tilt: tilt,
        };
        let n = events.len();
        let classes = shift_sizes(n).len();
        let mut sampler = Self {
            gaps: events.gaps(),
            events,
            hyper,
            config,
            state,
            streams: Streams {
                z: seeds.stream(stream::BRANCHING),
                y: seeds.stream(stream::LEVELS),
                base: seeds.stream(stream::BASE),
                law: seeds.stream(stream::CONTAGION),
            },
            scales,
            batch: Tallies {
                y: vec![Tally::default(); n],
                shift: vec![Tally::default(); classes],
                ..Tallies::default()
            },
            total: Tallies {
                y: vec![Tally::default(); n],
                shift: vec![Tally::default(); classes],
                ..Tallies::default()
            },
            exposure: Vec::new(),
            offspring: Vec::new(),
            log_likelihood: f64::NAN,
        };
        sampler.refresh();
        sampler.log_likelihood = sampler.current_log_likelihood()?;
        Ok(sampler)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn events(&self) -> &EventSequence {
        &self.events
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Swap in a new data set and state, keeping the random streams and the
    /// proposal scales. Levels without a fixed proposal scale get 10% of
    /// their new value.
    pub fn reset(&mut self, events: EventSequence, state: ChainState) -> Result<()> {
        check_state(&events, &state)?;
        let fixed = self.hyper.proposals.y;
        self.scales.y = state
            .y
            .levels()
            .iter()
            .map(|&v| fixed.unwrap_or((0.1 * v).max(f64::MIN_POSITIVE)))
            .collect();
        let n = events.len();
        self.batch.y = vec![Tally::default(); n];
        self.total.y = vec![Tally::default(); n];
        let classes = shift_sizes(n).len();
        self.scales.shift.resize(classes, INITIAL_SHIFT_SCALE);
        self.batch.shift = vec![Tally::default(); classes];
        self.total.shift = vec![Tally::default(); classes];
        self.gaps = events.gaps();
        self.events = events;
        self.state = state;
        self.refresh();
        self.log_likelihood = self.current_log_likelihood()?;
        Ok(())
    }

    fn refresh(&mut self) {
        self.refresh_exposure();
        self.offspring = self.state.z.offspring_counts();
    }

    fn refresh_exposure(&mut self) {
        let (delta, horizon) = (self.state.params.delta, self.events.horizon());
        self.exposure = self
            .events
            .times()
            .iter()
            .map(|&t| kernel_mass(delta, horizon - t))
            .collect();
    }

    fn current_log_likelihood(&self) -> Result<f64> {
        log_likelihood(&self.events, &self.state.z, &self.state.y, &self.state.params)
    }

    /// One full systematic-scan sweep. `record` adds the MH outcomes to the
    /// reported acceptance counts.
    pub fn sweep(&mut self, record: bool) -> Result<()> {
        if !self.events.is_empty() {
            self.update_branching()?;
            self.update_levels(record)?;
        }
        self.update_base(record)?;
        self.update_law(record)?;
        if !self.events.is_empty() {
            self.update_marginal(record)?;
        }
        let ll = self.current_log_likelihood()?;
        self.log_likelihood = finite("likelihood", ll)?;
        Ok(())
    }

    fn update_branching(&mut self) -> Result<()> {
        self.state.z = gibbs_sample_z(
            &self.events,
            &self.state.y,
            &self.state.params,
            &mut self.streams.z,
        )?;
        self.offspring = self.state.z.offspring_counts();
        Ok(())
    }

    fn update_levels(&mut self, record: bool) -> Result<()> {
        let spec = self.state.spec;
        match spec.kind {
            SdeKind::Constant { .. } => Ok(()),
            SdeKind::IidGamma { shape, rate } => {
                let rng = &mut self.streams.y;
                for (i, level) in self.state.y.levels_mut().iter_mut().enumerate() {
                    let v = sample_gamma(
                        shape + self.offspring[i] as f64,
                        rate + self.exposure[i],
                        rng,
                    );
                    *level = finite("levels", v)?.max(f64::MIN_POSITIVE);
                }
                Ok(())
            }
            SdeKind::Gbm { mu, sigma2 } => {
                self.walk_levels(record, |mv| mv.gbm(mu, sigma2, spec.y0));
                self.shift_blocks(record, &spec);
                Ok(())
            }
            SdeKind::ExpLangevin { .. } => {
                self.walk_levels(record, |mv| mv.markov(&spec));
                self.shift_blocks(record, &spec);
                Ok(())
            }
        }
    }

    fn walk_levels(&mut self, record: bool, ratio: impl Fn(&LevelMove) -> f64) {
        for i in 0..self.events.len() {
            let rng = &mut self.streams.y;
            let proposed = self.state.y.levels()[i] + self.scales.y[i] * normal(rng);
            let log_ratio = ratio(&LevelMove {
                i,
                proposed,
                levels: self.state.y.levels(),
                gaps: self.gaps.gaps(),
                exposure: self.exposure[i],
                offspring: self.offspring[i],
            });
            let ok = accept(log_ratio, rng);
            if ok {
                self.state.y.levels_mut()[i] = proposed;
            }
            self.batch.y[i].record(ok);
            if record {
                self.total.y[i].record(ok);
            }
        }
    }

    /// For each block length, about `n / len` shifts at random offsets, so
    /// every class costs O(n).
    fn shift_blocks(&mut self, record: bool, spec: &SdeSpec) {
        let n = self.events.len();
        for (class, len) in shift_sizes(n).into_iter().enumerate() {
            for _ in 0..n.div_ceil(len) {
                let rng = &mut self.streams.y;
                let start = rng.random_range(0..=n - len);
                let log_factor = self.scales.shift[class] * normal(rng);
                let log_ratio = BlockShift {
                    start,
                    end: start + len,
                    log_factor,
                    levels: self.state.y.levels(),
                    gaps: self.gaps.gaps(),
                    exposure: &self.exposure,
                    offspring: &self.offspring,
                }
                .markov(spec);
                let ok = log_ratio.is_finite() && accept(log_ratio, rng);
                if ok {
                    let factor = log_factor.exp();
                    for v in &mut self.state.y.levels_mut()[start..start + len] {
                        *v *= factor;
                    }
                }
                self.batch.shift[class].record(ok);
                if record {
                    self.total.shift[class].record(ok);
                }
            }
        }
    }

    fn update_base(&mut self, record: bool) -> Result<()> {
        let sign = match self.config.mutation {
            Mutation::None => 1.0,
            Mutation::FlipExposureSign => -1.0,
        };
        let rng = &mut self.streams.base;

        let proposed = self.state.params.a + self.scales.a * normal(rng);
        let log_ratio = a_log_ratio(proposed, &self.events, &self.state, &self.hyper.a, sign)?;
        let ok = accept(log_ratio, rng);
        if ok {
            self.state.params.a = proposed;
        }
        self.batch.a.record(ok);
        if record {
            self.total.a.record(ok);
        }

        let mut current = self.current_log_likelihood()?;
        for block in [BaseBlock::Lambda0, BaseBlock::Delta] {
            let rng = &mut self.streams.base;
            let old = self.state.params;
            let mut next = old;
            let (value, prior, scale) = match block {
                BaseBlock::Lambda0 => (&mut next.lambda0, self.hyper.lambda0, self.scales.lambda0),
                BaseBlock::Delta => (&mut next.delta, self.hyper.delta, self.scales.delta),
            };
            let from = *value;
            *value += scale * normal(rng);
            let to = *value;
            let mut ok = false;
            let mut proposed_ll = f64::NEG_INFINITY;
            if to > 0.0 {
                proposed_ll =
                    log_likelihood(&self.events, &self.state.z, &self.state.y, &next)?;
                let log_ratio = proposed_ll - current + prior.logpdf(to) - prior.logpdf(from);
                ok = accept(log_ratio, rng);
            }
            if ok {
                self.state.params = next;
                current = proposed_ll;
                if block == BaseBlock::Delta {
                    self.refresh_exposure();
                }
            }
            let tally = match block {
                BaseBlock::Lambda0 => (&mut self.batch.lambda0, &mut self.total.lambda0),
                BaseBlock::Delta => (&mut self.batch.delta, &mut self.total.delta),
            };
            tally.0.record(ok);
            if record {
                tally.1.record(ok);
            }
        }
        Ok(())
    }

    fn update_law(&mut self, record: bool) -> Result<()> {
        let hyper = self.hyper;
        let y0 = self.state.spec.y0;
        let rng = &mut self.streams.law;
        match self.state.spec.kind {
            SdeKind::Constant { .. } => {
                let offspring = (self.events.len() - self.state.z.immigrant_count()) as f64;
                let exposure: f64 = self.exposure.iter().sum();
                let psi = sample_gamma(hyper.psi.shape + offspring, hyper.psi.rate + exposure, rng);
                let psi = finite("psi", psi)?;
                self.state.spec.kind = SdeKind::Constant { psi };
                self.state.y = ContagionPath::constant(psi, self.events.len())?;
            }
            SdeKind::IidGamma { shape, .. } => {
                let proposed = shape + self.scales.tau * normal(rng);
                let SdeKind::IidGamma { rate, .. } = self.state.spec.kind else {
                    unreachable!()
                };
                let log_ratio = mh_log_accept_tau(proposed, shape, rate, &self.state.y, &hyper.tau);
                let ok = accept(log_ratio, rng);
                let shape = if ok { proposed } else { shape };
                self.batch.tau.record(ok);
                if record {
                    self.total.tau.record(ok);
                }
                let rate = super::gibbs_gamma_omega(&self.state.y, shape, &hyper.omega, rng);
                let rate = finite("omega", rate)?;
                self.state.spec.kind = SdeKind::IidGamma { shape, rate };
            }
            SdeKind::Gbm { sigma2, .. } => {
                let x = log_increments(&self.state.y, y0);
                let mu = finite("mu", gibbs_gbm_mu(&x, &self.gaps, sigma2, &hyper.mu, rng)?)?;
                let sigma2 = finite(
                    "sigma2",
                    gibbs_gbm_sigma2(&x, &self.gaps, mu, &hyper.sigma2, rng)?,
                )?;
                self.state.spec.kind = SdeKind::Gbm { mu, sigma2 };
                if !self.events.is_empty() {
                    self.gbm_joint(GbmJoint::Tilt, record);
                    self.gbm_joint(GbmJoint::Roughen, record);
                }
            }
            SdeKind::ExpLangevin { k, sigma2, .. } => {
                let y = &self.state.y;
                let mu = finite(
                    "mu",
                    gibbs_langevin_mu(y, y0, &self.gaps, k, sigma2, &hyper.mu, rng)?,
                )?;
                let sigma2 = finite(
                    "sigma2",
                    gibbs_langevin_sigma2(y, y0, &self.gaps, k, mu, &hyper.sigma2, rng)?,
                )?;
                let k = match self.config.k_update {
                    KUpdate::Fixed => k,
                    KUpdate::Linearized => finite(
                        "k",
                        gibbs_langevin_k(y, y0, &self.gaps, mu, sigma2, &hyper.k, k, rng)?,
                    )?,
                    KUpdate::ExactMh => {
                        let proposed = k + self.scales.k * normal(rng);
                        let mut ok = false;
                        if proposed > 0.0 {
                            let at = |k: f64| {
                                SdeSpec {
                                    kind: SdeKind::ExpLangevin { k, mu, sigma2 },
                                    y0,
                                }
                                .path_logpdf(y, &self.gaps)
                                .map(|lp| lp + hyper.k.logpdf(k))
                            };
                            let log_ratio = at(proposed)? - at(k)?;
                            ok = accept(log_ratio, rng);
                        }
                        self.batch.k.record(ok);
                        if record {
                            self.total.k.record(ok);
                        }
                        if ok {
                            proposed
                        } else {
                            k
                        }
                    }
                };
                self.state.spec.kind = SdeKind::ExpLangevin { k, mu, sigma2 };
            }
        }
        Ok(())
    }

    /// Moves scored with the branching structure summed out, followed by a
    /// fresh draw of the branching structure. Given the parents, `δ` and the
    /// level path are pinned by the parent-child lags and offspring counts;
    /// these moves let them travel without waiting for the parents to follow.
    fn update_marginal(&mut self, record: bool) -> Result<()> {
        let rng = &mut self.streams.base;
        let mut current =
            marginal_log_likelihood(&self.events, &self.state.y, &self.state.params)?;
        let old = self.state.params;
        let proposed = HawkesParams {
            delta: old.delta + self.scales.marginal_delta * normal(rng),
            ..old
        };
        let mut ok = false;
        if proposed.delta > 0.0 {
            let ll = marginal_log_likelihood(&self.events, &self.state.y, &proposed)?;
            let prior = self.hyper.delta;
            let log_ratio =
                ll - current + prior.logpdf(proposed.delta) - prior.logpdf(old.delta);
            ok = accept(log_ratio, rng);
            if ok {
                self.state.params = proposed;
                self.refresh_exposure();
                current = ll;
            }
        }
        self.batch.marginal_delta.record(ok);
        if record {
            self.total.marginal_delta.record(ok);
        }

        if matches!(self.state.spec.kind, SdeKind::Gbm { .. }) {
            let rng = &mut self.streams.law;
            let eta = self.scales.marginal_tilt * normal(rng);
            let levels = self.state.y.levels();
            let mut ok = false;
            if let Some((spec, proposed, log_jacobian)) =
                gbm_joint_proposal(GbmJoint::Tilt, eta, &self.state.spec, levels, self.gaps.gaps())
            {
                let path = ContagionPath::new(proposed)?;
                let ll = marginal_log_likelihood(&self.events, &path, &self.state.params)?;
                let params = &self.state.params;
                let log_ratio = ll - current
                    + spec.path_logpdf(&path, &self.gaps)?
                    - self.state.spec.path_logpdf(&self.state.y, &self.gaps)?
                    + log_prior(params, &spec, &self.hyper)
                    - log_prior(params, &self.state.spec, &self.hyper)
                    + log_jacobian;
                ok = log_ratio.is_finite() && accept(log_ratio, rng);
                if ok {
                    self.state.spec = spec;
                    self.state.y = path;
                }
            }
            self.batch.marginal_tilt.record(ok);
            if record {
                self.total.marginal_tilt.record(ok);
            }
        }
        self.update_branching()
    }

    fn gbm_joint(&mut self, which: GbmJoint, record: bool) {
        let rng = &mut self.streams.law;
        let scale = match which {
            GbmJoint::Tilt => self.scales.tilt,
            GbmJoint::Roughen => self.scales.roughen,
        };
        let eta = scale * normal(rng);
        let levels = self.state.y.levels();
        let mut ok = false;
        if let Some((spec, proposed, log_jacobian)) =
            gbm_joint_proposal(which, eta, &self.state.spec, levels, self.gaps.gaps())
        {
            let log_ratio = path_move_log_ratio(
                &self.state.params,
                (&self.state.spec, &spec),
                (levels, &proposed),
                self.gaps.gaps(),
                &self.exposure,
                &self.offspring,
                &self.hyper,
            ) + log_jacobian;
            ok = log_ratio.is_finite() && accept(log_ratio, rng);
            if ok {
                self.state.spec = spec;
                self.state.y.levels_mut().copy_from_slice(&proposed);
            }
        }
        let (batch, total) = match which {
            GbmJoint::Tilt => (&mut self.batch.tilt, &mut self.total.tilt),
            GbmJoint::Roughen => (&mut self.batch.roughen, &mut self.total.roughen),
        };
        batch.record(ok);
        if record {
            total.record(ok);
        }
    }

    fn uses_level_walk(&self) -> bool {
        matches!(
            self.state.spec.kind,
            SdeKind::Gbm { .. } | SdeKind::ExpLangevin { .. }
        )
    }

    fn uses_k_walk(&self) -> bool {
        matches!(self.state.spec.kind, SdeKind::ExpLangevin { .. })
            && self.config.k_update == KUpdate::ExactMh
    }

    /// Rescale every proposal towards [`TARGET_ACCEPTANCE`] using the
    /// current batch, then clear it.
    fn adapt(&mut self) {
        fn tune(scale: &mut f64, tally: &mut Tally) {
            if tally.proposed > 0 {
                *scale *= (2.0 * (tally.rate() - TARGET_ACCEPTANCE)).exp();
                *scale = scale.max(f64::MIN_POSITIVE);
            }
            *tally = Tally::default();
        }
        tune(&mut self.scales.a, &mut self.batch.a);
        tune(&mut self.scales.lambda0, &mut self.batch.lambda0);
        tune(&mut self.scales.delta, &mut self.batch.delta);
        tune(&mut self.scales.tau, &mut self.batch.tau);
        tune(&mut self.scales.k, &mut self.batch.k);
        tune(&mut self.scales.tilt, &mut self.batch.tilt);
        tune(&mut self.scales.roughen, &mut self.batch.roughen);
        tune(&mut self.scales.marginal_delta, &mut self.batch.marginal_delta);
        tune(&mut self.scales.marginal_tilt, &mut self.batch.marginal_tilt);
        for (scale, tally) in self.scales.y.iter_mut().zip(&mut self.batch.y) {
            tune(scale, tally);
        }
        for (scale, tally) in self.scales.shift.iter_mut().zip(&mut self.batch.shift) {
            tune(scale, tally);
        }
    }

    fn acceptance(&self) -> Vec<BlockAcceptance> {
        let entry = |block, t: &Tally| BlockAcceptance {
            block,
            accepted: t.accepted,
            proposed: t.proposed,
        };
        let mut out = Vec::new();
        if self.uses_level_walk() {
            let y = self.total.y.iter().fold(Tally::default(), |acc, t| Tally {
                accepted: acc.accepted + t.accepted,
                proposed: acc.proposed + t.proposed,
            });
            out.push(entry("y", &y));
            let shift = self.total.shift.iter().fold(Tally::default(), |acc, t| Tally {
                accepted: acc.accepted + t.accepted,
                proposed: acc.proposed + t.proposed,
            });
            out.push(entry("y_shift", &shift));
        }
        out.push(entry("a", &self.total.a));
        out.push(entry("lambda0", &self.total.lambda0));
        out.push(entry("delta", &self.total.delta));
        out.push(entry("delta_marginal", &self.total.marginal_delta));
        if matches!(self.state.spec.kind, SdeKind::IidGamma { .. }) {
            out.push(entry("tau", &self.total.tau));
        }
        if self.uses_k_walk() {
            out.push(entry("k", &self.total.k));
        }
        if matches!(self.state.spec.kind, SdeKind::Gbm { .. }) {
            out.push(entry("mu_tilt", &self.total.tilt));
            out.push(entry("sigma2_scale", &self.total.roughen));
            out.push(entry("mu_tilt_marginal", &self.total.marginal_tilt));
        }
        out
    }

    fn draw(&self, iteration: usize) -> Draw {
        Draw {
            iteration,
            params: self.state.params,
            spec: self.state.spec,
            log_likelihood: self.log_likelihood,
            latent: self
                .config
                .save_latent
                .then(|| (self.state.y.clone(), self.state.z.clone())),
        }
    }

    /// Run `config.iterations` sweeps and collect the thinned post-burn-in
    /// draws.
    pub fn run(mut self) -> Result<Chain> {
        let McmcConfig {
            iterations,
            burn_in,
            thin,
            adapt,
            ..
        } = self.config;
        let mut draws = Vec::with_capacity((iterations - burn_in).div_ceil(thin));
        let mut y_sum = vec![0.0; self.events.len()];
        for iter in 0..iterations {
            let after_burn_in = iter >= burn_in;
            self.sweep(after_burn_in)?;
            if !after_burn_in {
                if adapt && (iter + 1) % ADAPT_BATCH == 0 {
                    self.adapt();
                }
                continue;
            }
            if (iter - burn_in) % thin == 0 {
                for (s, v) in y_sum.iter_mut().zip(self.state.y.levels()) {
                    *s += v;
                }
                draws.push(self.draw(iter));
            }
        }
        let kept = draws.len() as f64;
        Ok(Chain {
            kind: self.state.spec.model_kind(),
            acceptance: self.acceptance(),
            draws,
            seed: self.config.seed,
            y_mean: y_sum.into_iter().map(|s| s / kept).collect(),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BaseBlock {
    Lambda0,
    Delta,
}

fn check_state(events: &EventSequence, state: &ChainState) -> Result<()> {
    state.params.validate()?;
    state.spec.validate()?;
    for got in [state.y.len(), state.z.len()] {
        if got != events.len() {
            return Err(HawkesError::Misaligned {
                expected: events.len(),
                got,
            });
        }
    }
    Ok(())
}

/// Fit `kind` to `events`.
pub fn run_mcmc(
    events: &EventSequence,
    kind: ModelKind,
    hyper: &Hyperparams,
    config: &McmcConfig,
) -> Result<Chain> {
    Sampler::new(events.clone(), kind, *hyper, *config)?.run()
}

/// Independent chains on the same data, seeded from children of
/// `config.seed`; run in parallel when the `parallel` feature is on.
pub fn run_chains(
    events: &EventSequence,
    kind: ModelKind,
    hyper: &Hyperparams,
    config: &McmcConfig,
    chains: usize,
) -> Result<Vec<Chain>> {
    let tree = SeedTree::new(config.seed);
    crate::par::map_indexed(chains, |c| {
        let config = McmcConfig {
            seed: tree.child(c as u64).seed(),
            ..*config
        };
        run_mcmc(events, kind, hyper, &config)
    })
    .into_iter()
    .collect()
}
