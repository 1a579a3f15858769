//! Exact transition laws for the excitation levels over irregular gaps.
//!
//! Both stochastic laws have closed-form transitions, so levels are sampled
//! and scored exactly over any gap `Δᵢ = Tᵢ − Tᵢ₋₁`; no sub-stepping is used.
//!
//! * GBM: `log Yᵢ | Yᵢ₋₁ ~ N(log Yᵢ₋₁ + μΔᵢ, σ²Δᵢ)`.
//! * Exponential Langevin: with `φᵢ = e^{−kΔᵢ}`,
//!   `log Yᵢ | Yᵢ₋₁ ~ N(φᵢ log Yᵢ₋₁ + μ(1−φᵢ), σ²(1−φᵢ²)/(2k))`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_positive, HawkesError, Result};
use crate::model::{ContagionPath, SdeKind, SdeSpec};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Inter-event gaps `Δ₁…Δ_n` with `T₀ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries(Vec<f64>);

impl GapSeries {
    pub fn new(gaps: Vec<f64>) -> Result<Self> {
        for (i, &g) in gaps.iter().enumerate() {
            if !(g.is_finite() && g > 0.0) {
                return Err(HawkesError::InvalidEvents(format!(
                    "gap #{i} = {g} must be finite and > 0"
                )));
            }
        }
        Ok(Self(gaps))
    }

    /// Differences of strictly increasing positive times.
    pub(crate) fn from_times(times: &[f64]) -> Self {
        let mut prev = 0.0;
        Self(
            times
                .iter()
                .map(|&t| {
                    let g = t - prev;
                    prev = t;
                    g
                })
                .collect(),
        )
    }

    pub fn gaps(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -HALF_LN_2PI - 0.5 * var.ln() - d * d / (2.0 * var)
}

/// Log-density of `Gamma(shape, rate)` at `y`.
pub fn gamma_logpdf(y: f64, shape: f64, rate: f64) -> f64 {
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * y.ln() - rate * y
}

fn check_step_inputs(y_prev: f64, dt: f64, sigma2: f64) -> Result<()> {
    check_positive("y_prev", y_prev)?;
    check_positive("dt", dt)?;
    check_positive("sigma2", sigma2)
}

/// One exact GBM transition driven by the standard normal draw `eps`.
pub fn gbm_step(y_prev: f64, dt: f64, mu: f64, sigma2: f64, eps: f64) -> Result<f64> {
    check_step_inputs(y_prev, dt, sigma2)?;
    Ok(y_prev * (mu * dt + (sigma2 * dt).sqrt() * eps).exp())
}

/// Lognormal transition log-density of the GBM, with respect to `y_next`.
pub fn gbm_transition_logpdf(y_prev: f64, y_next: f64, dt: f64, mu: f64, sigma2: f64) -> f64 {
    if y_prev <= 0.0 || y_next <= 0.0 || dt <= 0.0 || sigma2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    normal_logpdf((y_next / y_prev).ln(), mu * dt, sigma2 * dt) - y_next.ln()
}

/// Conditional mean and variance of `log Yᵢ` given `log Yᵢ₋₁` under the
/// exponential Langevin law.
pub fn langevin_log_moments(log_prev: f64, dt: f64, k: f64, mu: f64, sigma2: f64) -> (f64, f64) {
    let phi = (-k * dt).exp();
    let one_minus_phi = -(-k * dt).exp_m1();
    let mean = phi * log_prev + mu * one_minus_phi;
    let var = sigma2 * one_minus_phi * (1.0 + phi) / (2.0 * k);
    (mean, var)
}

/// One exact exponential-Langevin transition driven by `eps`.
pub fn exp_langevin_step(
    y_prev: f64,
    dt: f64,
    k: f64,
    mu: f64,
    sigma2: f64,
    eps: f64,
) -> Result<f64> {
    check_step_inputs(y_prev, dt, sigma2)?;
    check_positive("k", k)?;
    let (mean, var) = langevin_log_moments(y_prev.ln(), dt, k, mu, sigma2);
    Ok((mean + var.sqrt() * eps).exp())
}

/// Log-normal transition log-density of the exponential Langevin law.
pub fn exp_langevin_transition_logpdf(
    y_prev: f64,
    y_next: f64,
    dt: f64,
    k: f64,
    mu: f64,
    sigma2: f64,
) -> f64 {
    if y_prev <= 0.0 || y_next <= 0.0 || dt <= 0.0 || sigma2 <= 0.0 || k <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let (mean, var) = langevin_log_moments(y_prev.ln(), dt, k, mu, sigma2);
    normal_logpdf(y_next.ln(), mean, var) - y_next.ln()
}

impl SdeSpec {
    /// Draw the level at the next event, `dt` after the previous one.
    pub fn sample_next<R: Rng + ?Sized>(&self, y_prev: f64, dt: f64, rng: &mut R) -> Result<f64> {
        match self.kind {
            SdeKind::Constant { psi } => Ok(psi),
            SdeKind::IidGamma { shape, rate } => {
                let dist = Gamma::new(shape, 1.0 / rate).map_err(|_| HawkesError::InvalidParameter {
                    name: "tau",
                    value: shape,
                    reason: "invalid Gamma law",
                })?;
                // Tiny shapes can underflow to exactly zero.
                Ok(dist.sample(rng).max(f64::MIN_POSITIVE))
            }
            SdeKind::Gbm { mu, sigma2 } => {
                gbm_step(y_prev, dt, mu, sigma2, rng.sample(StandardNormal))
            }
            SdeKind::ExpLangevin { k, mu, sigma2 } => {
                exp_langevin_step(y_prev, dt, k, mu, sigma2, rng.sample(StandardNormal))
            }
        }
    }

    /// Log-density of `y_next` given `y_prev` a gap `dt` earlier. The constant
    /// law is a point mass and scores 0 at `psi`, `−∞` elsewhere.
    pub fn transition_logpdf(&self, y_prev: f64, y_next: f64, dt: f64) -> f64 {
        match self.kind {
            SdeKind::Constant { psi } => {
                if y_next == psi {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            SdeKind::IidGamma { shape, rate } => gamma_logpdf(y_next, shape, rate),
            SdeKind::Gbm { mu, sigma2 } => gbm_transition_logpdf(y_prev, y_next, dt, mu, sigma2),
            SdeKind::ExpLangevin { k, mu, sigma2 } => {
                exp_langevin_transition_logpdf(y_prev, y_next, dt, k, mu, sigma2)
            }
        }
    }

    /// Joint log-density of a whole path started from `y0`.
    pub fn path_logpdf(&self, y: &ContagionPath, gaps: &GapSeries) -> Result<f64> {
        if y.len() != gaps.len() {
            return Err(HawkesError::Misaligned {
                expected: gaps.len(),
                got: y.len(),
            });
        }
        let mut prev = self.y0;
        let mut total = 0.0;
        for (&yi, &dt) in y.levels().iter().zip(gaps.gaps()) {
            total += self.transition_logpdf(prev, yi, dt);
            prev = yi;
        }
        Ok(total)
    }

    /// `E[Y_t]` for a level process started at `y0` at time zero.
    pub fn mean_level(&self, t: f64) -> f64 {
        match self.kind {
            SdeKind::Constant { psi } => psi,
            SdeKind::IidGamma { shape, rate } => shape / rate,
            SdeKind::Gbm { mu, sigma2 } => self.y0 * ((mu + 0.5 * sigma2) * t).exp(),
            SdeKind::ExpLangevin { k, mu, sigma2 } => {
                let (mean, var) = if t > 0.0 {
                    langevin_log_moments(self.y0.ln(), t, k, mu, sigma2)
                } else {
                    (self.y0.ln(), 0.0)
                };
                (mean + 0.5 * var).exp()
            }
        }
    }
}

/// Sample `Y₁…Y_n` along the given gaps.
pub fn sample_path<R: Rng + ?Sized>(
    spec: &SdeSpec,
    gaps: &GapSeries,
    rng: &mut R,
) -> Result<ContagionPath> {
    spec.validate()?;
    let mut levels = Vec::with_capacity(gaps.len());
    let mut prev = spec.y0;
    for &dt in gaps.gaps() {
        let y = spec.sample_next(prev, dt, rng)?;
        levels.push(y);
        prev = y;
    }
    ContagionPath::new(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn ln_2pi() -> f64 {
        (2.0 * std::f64::consts::PI).ln()
    }

    /// Composite Simpson on `[lo, hi]` with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    /// Integral over y ∈ (0, ∞) of a density, done in u = log y.
    fn total_mass(logpdf: impl Fn(f64) -> f64) -> f64 {
        simpson(|u| (logpdf(u.exp()) + u).exp(), -40.0, 40.0, 200_000)
    }

    #[test]
    fn gbm_step_examples() {
        assert_eq!(gbm_step(2.0, 1.0, 0.0, 0.3, 0.0).unwrap(), 2.0);
        let y = gbm_step(1.0, 2.0, 0.5, 1e-300, 3.0).unwrap();
        assert!((y - std::f64::consts::E).abs() < 1e-12);
        assert!(gbm_step(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(gbm_step(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gbm_logpdf_examples() {
        let v = gbm_transition_logpdf(1.0, 1.0, 1.0, 0.0, 1.0);
        assert!((v + 0.5 * ln_2pi()).abs() < 1e-14);
        assert_eq!(gbm_transition_logpdf(1.0, 0.0, 1.0, 0.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(gbm_transition_logpdf(-1.0, 1.0, 1.0, 0.0, 1.0), f64::NEG_INFINITY);

        // Mode in log-space sits at y_prev·e^{μΔ}.
        let (yp, dt, mu, s2): (f64, f64, f64, f64) = (1.3, 0.7, 0.4, 0.2);
        let mode = yp * (mu * dt).exp();
        let score = |y: f64| gbm_transition_logpdf(yp, y, dt, mu, s2) + y.ln();
        for f in [0.9, 0.99, 1.01, 1.1] {
            assert!(score(mode) > score(mode * f));
        }

        let mass = total_mass(|y| gbm_transition_logpdf(yp, y, dt, mu, s2));
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");
    }

    #[test]
    fn langevin_step_examples() {
        let y = exp_langevin_step(3.0, 1e6, 1.0, 0.25, 0.5, 0.0).unwrap();
        assert!((y - 0.25f64.exp()).abs() < 1e-12);
        let y = exp_langevin_step(3.0, 1e-14, 1.0, 0.25, 0.5, 0.0).unwrap();
        assert!((y - 3.0).abs() < 1e-10);
        assert!(exp_langevin_step(3.0, 1.0, 0.0, 0.25, 0.5, 0.0).is_err());
        assert!(exp_langevin_step(3.0, 1.0, -1.0, 0.25, 0.5, 0.0).is_err());
    }

    #[test]
    fn langevin_logpdf_examples() {
        let (yp, dt, k, mu, s2) = (0.6, 0.9, 1.7, -0.3, 0.8);
        let mass = total_mass(|y| exp_langevin_transition_logpdf(yp, y, dt, k, mu, s2));
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");

        // Far apart in time the density forgets y_prev and is stationary.
        let stationary = |y: f64| normal_logpdf(y.ln(), mu, s2 / (2.0 * k)) - y.ln();
        for y in [0.2, 0.7, 1.5] {
            let a = exp_langevin_transition_logpdf(0.1, y, 1e3, k, mu, s2);
            let b = exp_langevin_transition_logpdf(9.0, y, 1e3, k, mu, s2);
            assert!((a - b).abs() < 1e-12);
            assert!((a - stationary(y)).abs() < 1e-12);
        }

        let (mean, _) = langevin_log_moments(yp.ln(), dt, k, mu, s2);
        let score = |y: f64| exp_langevin_transition_logpdf(yp, y, dt, k, mu, s2) + y.ln();
        let mode = mean.exp();
        for f in [0.95, 1.05] {
            assert!(score(mode) > score(mode * f));
        }
    }

    #[test]
    fn sample_path_examples() {
        let mut rng = SeedTree::new(3).stream(0);
        let gaps = GapSeries::new(vec![0.5, 1.0, 0.1]).unwrap();
        let spec = SdeSpec::constant(1.5).unwrap();
        let path = sample_path(&spec, &gaps, &mut rng).unwrap();
        assert_eq!(path.levels(), &[1.5, 1.5, 1.5]);

        let spec = SdeSpec::new(SdeKind::Gbm { mu: 0.0, sigma2: 1e-300 }, 0.8).unwrap();
        let path = sample_path(&spec, &gaps, &mut rng).unwrap();
        assert!(path.levels().iter().all(|&y| (y - 0.8).abs() < 1e-12));
    }

    #[test]
    fn gap_series_rejects_nonpositive() {
        assert!(GapSeries::new(vec![1.0, 0.0]).is_err());
        assert!(GapSeries::new(vec![1.0, -2.0]).is_err());
        assert_eq!(GapSeries::new(vec![1.0, 2.5]).unwrap().total(), 3.5);
    }

    #[test]
    fn mean_level_at_zero_is_y0() {
        let spec = SdeSpec::new(SdeKind::ExpLangevin { k: 0.5, mu: 1.0, sigma2: 0.3 }, 2.0).unwrap();
        assert!((spec.mean_level(0.0) - 2.0).abs() < 1e-15);
        let spec = SdeSpec::new(SdeKind::Gbm { mu: 0.1, sigma2: 0.2 }, 2.0).unwrap();
        assert!((spec.mean_level(1.0) - 2.0 * 0.2f64.exp()).abs() < 1e-14);
    }
}
