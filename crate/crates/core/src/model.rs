//! Model types, the conditional intensity and the branching-structure
//! likelihood.
//!
//! The intensity is
//!
//! ```text
//! λ(t) = a + (λ₀ − a)·e^{−δt} + Σ_{i: Tᵢ < t} Yᵢ·e^{−δ(t − Tᵢ)}
//! ```
//!
//! where the deterministic part `a + (λ₀ − a)·e^{−δt}` is the base
//! (immigrant) intensity and each event `i` adds a jump of size `Yᵢ` that
//! decays at the same rate `δ`. At an event time the intensity is taken as its
//! left limit, so event `i` never excites itself.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_finite, check_positive, HawkesError, Result};
use crate::sde::GapSeries;

/// `(1 − e^{−δx}) / δ`, the mass of a unit exponential kernel on `[0, x]`.
#[inline]
pub fn kernel_mass(delta: f64, x: f64) -> f64 {
    -(-delta * x).exp_m1() / delta
}

/// Ordered event times on the observation window `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    times: Vec<f64>,
    horizon: f64,
}

impl EventSequence {
    /// Times must be finite, strictly increasing and lie in `(0, horizon]`.
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(HawkesError::InvalidEvents(format!(
                "horizon must be finite and >= 0, got {horizon}"
            )));
        }
        let mut prev = 0.0;
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t <= prev || t > horizon {
                return Err(HawkesError::InvalidEvents(format!(
                    "time #{i} = {t} breaks 0 < t1 < t2 < ... <= {horizon}"
                )));
            }
            prev = t;
        }
        Ok(Self { times, horizon })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Inter-event gaps with `T₀ = 0`.
    pub fn gaps(&self) -> GapSeries {
        GapSeries::from_times(&self.times)
    }

    /// Number of events at or before `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&ti| ti <= t)
    }

    /// Same events shifted by `offset` and observed on `[0, horizon + offset]`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.times.iter().map(|t| t + offset).collect(),
            self.horizon + offset,
        )
    }
}

/// Base-intensity and decay parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    /// Asymptotic base rate.
    pub a: f64,
    /// Base intensity at `t = 0`.
    pub lambda0: f64,
    /// Decay rate shared by the base intensity and the kernel.
    pub delta: f64,
}

impl HawkesParams {
    pub fn new(a: f64, lambda0: f64, delta: f64) -> Result<Self> {
        let params = Self { a, lambda0, delta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("a", self.a)?;
        check_positive("lambda0", self.lambda0)?;
        check_positive("delta", self.delta)
    }

    /// `a + (λ₀ − a)e^{−δt}` without the domain check.
    #[inline]
    pub fn base_at(&self, t: f64) -> f64 {
        self.a + (self.lambda0 - self.a) * (-self.delta * t).exp()
    }

    /// `∫₀ᵗ` of the base intensity.
    #[inline]
    pub fn base_integral(&self, t: f64) -> f64 {
        self.a * t + (self.lambda0 - self.a) * kernel_mass(self.delta, t)
    }
}

/// Law of the excitation levels `Yᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdeKind {
    /// Classical Hawkes: every level equals `psi`.
    Constant { psi: f64 },
    /// Independent Gamma levels, shape–rate parameterisation.
    IidGamma { shape: f64, rate: f64 },
    /// Geometric Brownian motion; `log Y` has drift `mu` and variance rate `sigma2`.
    Gbm { mu: f64, sigma2: f64 },
    /// Exponentiated Ornstein–Uhlenbeck process for `log Y` with reversion
    /// rate `k` towards `mu`.
    ExpLangevin { k: f64, mu: f64, sigma2: f64 },
}

/// Which family of excitation law to fit; [`SdeKind`] without the values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Constant,
    IidGamma,
    Gbm,
    ExpLangevin,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Constant,
        ModelKind::IidGamma,
        ModelKind::Gbm,
        ModelKind::ExpLangevin,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Constant => "constant",
            ModelKind::IidGamma => "gamma",
            ModelKind::Gbm => "gbm",
            ModelKind::ExpLangevin => "langevin",
        }
    }

    /// Names of the excitation-law parameters, in the order they are reported.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Constant => &["psi"],
            ModelKind::IidGamma => &["tau", "omega"],
            ModelKind::Gbm => &["mu", "sigma2"],
            ModelKind::ExpLangevin => &["k", "mu", "sigma2"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "classical" => Ok(ModelKind::Constant),
            "gamma" | "iid-gamma" | "iid_gamma" => Ok(ModelKind::IidGamma),
            "gbm" => Ok(ModelKind::Gbm),
            "langevin" | "exp-langevin" | "exp_langevin" => Ok(ModelKind::ExpLangevin),
            other => Err(format!(
                "unknown model `{other}` (expected constant, gamma, gbm or langevin)"
            )),
        }
    }
}

/// Excitation law plus the known initial level `Y₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeSpec {
    pub kind: SdeKind,
    /// Level at `t = 0`; only the Markov kinds use it.
    pub y0: f64,
}

impl SdeSpec {
    pub fn new(kind: SdeKind, y0: f64) -> Result<Self> {
        let spec = Self { kind, y0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(psi: f64) -> Result<Self> {
        Self::new(SdeKind::Constant { psi }, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("y0", self.y0)?;
        match self.kind {
            SdeKind::Constant { psi } => {
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
            SdeKind::IidGamma { shape, rate } => {
                check_positive("tau", shape)?;
                check_positive("omega", rate)
            }
            SdeKind::Gbm { mu, sigma2 } => {
                check_finite("mu", mu)?;
                check_positive("sigma2", sigma2)
            }
            SdeKind::ExpLangevin { k, mu, sigma2 } => {
                check_positive("k", k)?;
                check_finite("mu", mu)?;
                check_positive("sigma2", sigma2)
            }
        }
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.kind {
            SdeKind::Constant { .. } => ModelKind::Constant,
            SdeKind::IidGamma { .. } => ModelKind::IidGamma,
            SdeKind::Gbm { .. } => ModelKind::Gbm,
            SdeKind::ExpLangevin { .. } => ModelKind::ExpLangevin,
        }
    }

    /// Parameter values in the order of [`ModelKind::parameter_names`].
    pub fn parameter_values(&self) -> Vec<f64> {
        match self.kind {
            SdeKind::Constant { psi } => vec![psi],
            SdeKind::IidGamma { shape, rate } => vec![shape, rate],
            SdeKind::Gbm { mu, sigma2 } => vec![mu, sigma2],
            SdeKind::ExpLangevin { k, mu, sigma2 } => vec![k, mu, sigma2],
        }
    }
}

/// Excitation levels `Y₁…Y_n`, aligned with the event times.
#[derive(Debug, Clone, PartialEq)]
pub struct ContagionPath(Vec<f64>);

impl ContagionPath {
    /// Levels must be finite and non-negative. Zero is admitted so that the
    /// constant law with `psi = 0` (a Poisson process) is representable;
    /// the stochastic laws only ever produce strictly positive levels.
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if let Some((i, &y)) = levels
            .iter()
            .enumerate()
            .find(|(_, y)| !(y.is_finite() && **y >= 0.0))
        {
            return Err(HawkesError::InvalidEvents(format!(
                "level #{i} = {y} is not a finite non-negative number"
            )));
        }
        Ok(Self(levels))
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn levels_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Parent of one event in the branching structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parent {
    /// Generated by the base intensity.
    Immigrant,
    /// Offspring of the event with this (zero-based) index.
    Event(usize),
}

/// Latent parent assignment, one entry per event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchingStructure(Vec<Parent>);

impl BranchingStructure {
    /// Every `Parent::Event(j)` at position `i` must satisfy `j < i`.
    pub fn new(parents: Vec<Parent>) -> Result<Self> {
        for (i, p) in parents.iter().enumerate() {
            if let Parent::Event(j) = *p {
                if j >= i {
                    return Err(HawkesError::InvalidEvents(format!(
                        "event {i} cannot descend from event {j}"
                    )));
                }
            }
        }
        Ok(Self(parents))
    }

    pub fn all_immigrants(len: usize) -> Self {
        Self(vec![Parent::Immigrant; len])
    }

    pub fn parents(&self) -> &[Parent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of direct offspring of each event.
    pub fn offspring_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.0.len()];
        for p in &self.0 {
            if let Parent::Event(j) = *p {
                counts[j] += 1;
            }
        }
        counts
    }

    pub fn immigrant_count(&self) -> usize {
        self.0.iter().filter(|p| **p == Parent::Immigrant).count()
    }
}

fn check_aligned(events: &EventSequence, len: usize) -> Result<()> {
    if events.len() == len {
        Ok(())
    } else {
        Err(HawkesError::Misaligned {
            expected: events.len(),
            got: len,
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(HawkesError::InvalidParameter {
            name: "t",
            value: t,
            reason: "time must be >= 0",
        })
    } else {
        Ok(())
    }
}

/// `a + (λ₀ − a)e^{−δt}`.
pub fn base_intensity(t: f64, params: &HawkesParams) -> Result<f64> {
    check_time(t)?;
    Ok(params.base_at(t))
}

/// Conditional intensity at `t`, counting only events strictly before `t`.
pub fn intensity_at(
    t: f64,
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<f64> {
    check_time(t)?;
    check_aligned(events, y.len())?;
    let excitation: f64 = events
        .times()
        .iter()
        .zip(y.levels())
        .take_while(|(ti, _)| **ti < t)
        .map(|(ti, yi)| yi * (-params.delta * (t - ti)).exp())
        .sum();
    Ok(params.base_at(t) + excitation)
}

/// Compensator `Λ_t = ∫₀ᵗ λ(v) dv` in closed form.
pub fn integrated_intensity(
    t: f64,
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<f64> {
    check_time(t)?;
    check_aligned(events, y.len())?;
    let excitation: f64 = events
        .times()
        .iter()
        .zip(y.levels())
        .take_while(|(ti, _)| **ti <= t)
        .map(|(ti, yi)| yi * kernel_mass(params.delta, t - ti))
        .sum();
    Ok(params.base_integral(t) + excitation)
}

/// Excitation part of the intensity at each event time (left limits), in
/// one O(n) pass: `Sᵢ = Σ_{j<i} Yⱼ e^{−δ(Tᵢ−Tⱼ)}`.
pub fn excitation_at_events(times: &[f64], levels: &[f64], delta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut s = 0.0;
    let mut prev_t = 0.0;
    let mut prev_y = 0.0;
    for (&t, &y) in times.iter().zip(levels) {
        s = (s + prev_y) * (-delta * (t - prev_t)).exp();
        out.push(s);
        prev_t = t;
        prev_y = y;
    }
    out
}

/// Left-limit intensities `λ(Tᵢ⁻)` at every event.
pub fn intensities_at_events(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<Vec<f64>> {
    check_aligned(events, y.len())?;
    let excitation = excitation_at_events(events.times(), y.levels(), params.delta);
    Ok(events
        .times()
        .iter()
        .zip(excitation)
        .map(|(&t, s)| params.base_at(t) + s)
        .collect())
}

/// `Λ(Tᵢ)` at every event, in one O(n) pass.
pub fn compensator_at_events(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<Vec<f64>> {
    check_aligned(events, y.len())?;
    let delta = params.delta;
    let mut out = Vec::with_capacity(events.len());
    let mut excitation_integral = 0.0;
    // Excitation just after the previous event.
    let mut s_plus = 0.0;
    let mut prev_t = 0.0;
    for (&t, &yi) in events.times().iter().zip(y.levels()) {
        let dt = t - prev_t;
        excitation_integral += s_plus * kernel_mass(delta, dt);
        out.push(params.base_integral(t) + excitation_integral);
        s_plus = s_plus * (-delta * dt).exp() + yi;
        prev_t = t;
    }
    Ok(out)
}

/// Log-likelihood of the event times given the branching structure and the
/// excitation levels:
///
/// ```text
/// −Λ_T + Σᵢ [ Z_{i0}·log(a + (λ₀−a)e^{−δTᵢ}) + Σ_{j<i} Z_{ij}·(log Yⱼ − δ(Tᵢ − Tⱼ)) ]
/// ```
///
/// Returns `−∞` when an event is attributed to a parent with `Yⱼ ≤ 0`.
pub fn log_likelihood(
    events: &EventSequence,
    z: &BranchingStructure,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<f64> {
    check_aligned(events, y.len())?;
    check_aligned(events, z.len())?;
    let times = events.times();
    let levels = y.levels();
    let mut ll = -integrated_intensity(events.horizon(), events, y, params)?;
    for (i, parent) in z.parents().iter().enumerate() {
        match *parent {
            Parent::Immigrant => ll += params.base_at(times[i]).ln(),
            Parent::Event(j) => {
                if levels[j] <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                ll += levels[j].ln() - params.delta * (times[i] - times[j]);
            }
        }
    }
    Ok(ll)
}

/// Point-process log-likelihood with the branching structure summed out:
/// `Σᵢ log λ(Tᵢ⁻) − Λ_T`.
pub fn marginal_log_likelihood(
    events: &EventSequence,
    y: &ContagionPath,
    params: &HawkesParams,
) -> Result<f64> {
    let lambdas = intensities_at_events(events, y, params)?;
    let compensator = integrated_intensity(events.horizon(), events, y, params)?;
    Ok(lambdas.iter().map(|l| l.ln()).sum::<f64>() - compensator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, lambda0: f64, delta: f64) -> HawkesParams {
        HawkesParams::new(a, lambda0, delta).unwrap()
    }

    #[test]
    fn base_intensity_examples() {
        let p = params(1.0, 3.0, 1.0);
        assert_eq!(base_intensity(0.0, &p).unwrap(), 3.0);
        assert!((base_intensity(2f64.ln(), &p).unwrap() - 2.0).abs() < 1e-15);
        assert!((base_intensity(1e3, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(base_intensity(-1e-9, &p).is_err());
    }

    #[test]
    fn intensity_examples() {
        let p = params(1.0, 1.0, 1.0);
        let empty = EventSequence::empty(5.0).unwrap();
        let none = ContagionPath::new(vec![]).unwrap();
        assert_eq!(intensity_at(0.7, &empty, &none, &p).unwrap(), 1.0);

        let ev = EventSequence::new(vec![1.0], 5.0).unwrap();
        let y = ContagionPath::new(vec![2.0]).unwrap();
        // Left limit at the event excludes its own jump.
        assert_eq!(intensity_at(1.0, &ev, &y, &p).unwrap(), 1.0);
        assert!((intensity_at(1.0 + 1e-12, &ev, &y, &p).unwrap() - 3.0).abs() < 1e-9);
        assert!((intensity_at(1.0 + 2f64.ln(), &ev, &y, &p).unwrap() - 2.0).abs() < 1e-14);

        let bad = ContagionPath::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            intensity_at(1.0, &ev, &bad, &p),
            Err(HawkesError::Misaligned { .. })
        ));
    }

    #[test]
    fn integrated_intensity_examples() {
        let p = params(2.0, 2.0, 0.7);
        let ev = EventSequence::new(vec![1.0, 3.0], 5.0).unwrap();
        let zero = ContagionPath::new(vec![0.0, 0.0]).unwrap();
        assert!((integrated_intensity(5.0, &ev, &zero, &p).unwrap() - 10.0).abs() < 1e-12);
        let y = ContagionPath::new(vec![1.0, 0.4]).unwrap();
        assert_eq!(integrated_intensity(0.0, &ev, &y, &p).unwrap(), 0.0);
        assert!(integrated_intensity(-1.0, &ev, &y, &p).is_err());
    }

    #[test]
    fn event_sequence_validation() {
        assert!(EventSequence::new(vec![0.0, 1.0], 2.0).is_err());
        assert!(EventSequence::new(vec![1.0, 1.0], 2.0).is_err());
        assert!(EventSequence::new(vec![1.0, 2.5], 2.0).is_err());
        assert!(EventSequence::new(vec![1.0, 2.0], 2.0).is_ok());
        assert!(EventSequence::new(vec![], f64::INFINITY).is_err());
    }

    #[test]
    fn branching_structure_rejects_future_parents() {
        assert!(BranchingStructure::new(vec![Parent::Event(0)]).is_err());
        assert!(BranchingStructure::new(vec![Parent::Immigrant, Parent::Event(1)]).is_err());
        let z = BranchingStructure::new(vec![
            Parent::Immigrant,
            Parent::Event(0),
            Parent::Event(0),
            Parent::Event(2),
        ])
        .unwrap();
        assert_eq!(z.offspring_counts(), vec![2, 0, 1, 0]);
        assert_eq!(z.immigrant_count(), 1);
    }

    #[test]
    fn single_event_likelihood() {
        let p = params(1.2, 2.0, 0.5);
        let ev = EventSequence::new(vec![0.8], 3.0).unwrap();
        let y = ContagionPath::new(vec![0.9]).unwrap();
        let z = BranchingStructure::all_immigrants(1);
        let ll = log_likelihood(&ev, &z, &y, &p).unwrap();
        let expected = p.base_at(0.8).ln() - integrated_intensity(3.0, &ev, &y, &p).unwrap();
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_parent_level_gives_negative_infinity() {
        let p = params(1.0, 1.0, 1.0);
        let ev = EventSequence::new(vec![0.5, 1.0], 3.0).unwrap();
        let y = ContagionPath::new(vec![0.0, 1.0]).unwrap();
        let z = BranchingStructure::new(vec![Parent::Immigrant, Parent::Event(0)]).unwrap();
        assert_eq!(log_likelihood(&ev, &z, &y, &p).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn constant_zero_reduces_to_homogeneous_poisson() {
        let p = params(1.7, 1.7, 0.3);
        let ev = EventSequence::new(vec![0.2, 0.9, 2.4, 4.0], 6.0).unwrap();
        let y = ContagionPath::constant(0.0, 4).unwrap();
        let z = BranchingStructure::all_immigrants(4);
        let ll = log_likelihood(&ev, &z, &y, &p).unwrap();
        let poisson = 4.0 * 1.7f64.ln() - 1.7 * 6.0;
        assert!((ll - poisson).abs() < 1e-12);
    }

    #[test]
    fn recursions_match_direct_sums() {
        let p = params(0.8, 1.9, 1.3);
        let ev = EventSequence::new(vec![0.3, 0.5, 1.7, 1.71, 3.2], 4.0).unwrap();
        let y = ContagionPath::new(vec![0.4, 1.1, 0.2, 0.9, 0.6]).unwrap();
        let lambdas = intensities_at_events(&ev, &y, &p).unwrap();
        let comp = compensator_at_events(&ev, &y, &p).unwrap();
        for (i, &t) in ev.times().iter().enumerate() {
            let direct = intensity_at(t, &ev, &y, &p).unwrap();
            assert!((lambdas[i] - direct).abs() < 1e-13);
            let direct = integrated_intensity(t, &ev, &y, &p).unwrap();
            assert!((comp[i] - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn model_kind_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("sqrt".parse::<ModelKind>().is_err());
    }
}
