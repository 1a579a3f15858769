//! Model, prior and sampler settings read from a [`Config`].

use stochastic_hawkes::infer::{
    GammaPrior, Hyperparams, Init, InvGammaPrior, KUpdate, McmcConfig, NormalPrior,
};
use stochastic_hawkes::{HawkesParams, ModelKind, SdeKind, SdeSpec};

use crate::config::Config;
use crate::error::{CliError, CliResult};

pub fn params(config: &Config) -> CliResult<HawkesParams> {
    let a = config.require("a")?;
    let lambda0 = config.require("lambda0")?;
    let delta = config.require("delta")?;
    Ok(HawkesParams::new(a, lambda0, delta)?)
}

pub fn kind(config: &Config) -> CliResult<ModelKind> {
    config.require("model")
}

/// Level law named by `model`, with its parameters and `y0` (default 1).
pub fn spec(config: &Config) -> CliResult<SdeSpec> {
    let y0 = config.or("y0", 1.0)?;
    let law = match kind(config)? {
        ModelKind::Constant => SdeKind::Constant {
            psi: config.require("psi")?,
        },
        ModelKind::IidGamma => SdeKind::IidGamma {
            shape: config.require("tau")?,
            rate: config.require("omega")?,
        },
        ModelKind::Gbm => SdeKind::Gbm {
            mu: config.require("mu")?,
            sigma2: config.require("sigma2")?,
        },
        ModelKind::ExpLangevin => SdeKind::ExpLangevin {
            k: config.require("k")?,
            mu: config.require("mu")?,
            sigma2: config.require("sigma2")?,
        },
    };
    Ok(SdeSpec::new(law, y0)?)
}

fn gamma(config: &Config, key: &str, default: GammaPrior) -> CliResult<GammaPrior> {
    Ok(config
        .pair(key)?
        .map(|(shape, rate)| GammaPrior { shape, rate })
        .unwrap_or(default))
}

/// Priors from `prior.<name> = x, y` entries; unspecified ones keep their
/// defaults. Gamma priors take `shape, rate`, normal ones `mean, variance`
/// and the inverse-Gamma one `shape, scale`.
pub fn hyperparams(config: &Config) -> CliResult<Hyperparams> {
    let d = Hyperparams::default();
    let normal = |key: &str, default: NormalPrior| -> CliResult<NormalPrior> {
        Ok(config
            .pair(key)?
            .map(|(mean, var)| NormalPrior { mean, var })
            .unwrap_or(default))
    };
    let mut h = Hyperparams {
        a: gamma(config, "prior.a", d.a)?,
        lambda0: gamma(config, "prior.lambda0", d.lambda0)?,
        delta: gamma(config, "prior.delta", d.delta)?,
        tau: gamma(config, "prior.tau", d.tau)?,
        omega: gamma(config, "prior.omega", d.omega)?,
        psi: gamma(config, "prior.psi", d.psi)?,
        mu: normal("prior.mu", d.mu)?,
        sigma2: config
            .pair("prior.sigma2")?
            .map(|(shape, scale)| InvGammaPrior { shape, scale })
            .unwrap_or(d.sigma2),
        k: normal("prior.k", d.k)?,
        y0: config.or("y0", d.y0)?,
        proposals: d.proposals,
    };
    h.proposals.a = config.parsed("proposal.a")?;
    h.proposals.lambda0 = config.parsed("proposal.lambda0")?;
    h.proposals.delta = config.parsed("proposal.delta")?;
    h.proposals.tau = config.parsed("proposal.tau")?;
    h.proposals.k = config.parsed("proposal.k")?;
    h.proposals.y = config.parsed("proposal.y")?;
    h.validate()?;
    Ok(h)
}

pub fn mcmc(config: &Config, seed: u64) -> CliResult<McmcConfig> {
    let d = McmcConfig::default();
    let init = match config.get("init").unwrap_or("prior") {
        "prior" => Init::Prior,
        "deterministic" => Init::Deterministic,
        other => {
            return Err(CliError::config(
                "init",
                format!("must be `prior` or `deterministic`, got {other:?}"),
            ))
        }
    };
    let k_update = match config.get("k_update").unwrap_or("exact") {
        "exact" => KUpdate::ExactMh,
        "linearized" => KUpdate::Linearized,
        "fixed" => KUpdate::Fixed,
        other => {
            return Err(CliError::config(
                "k_update",
                format!("must be `exact`, `linearized` or `fixed`, got {other:?}"),
            ))
        }
    };
    let c = McmcConfig {
        iterations: config.or("iters", d.iterations)?,
        burn_in: config.or("burnin", d.burn_in)?,
        thin: config.or("thin", d.thin)?,
        seed,
        init,
        adapt: config.or("adapt", d.adapt)?,
        k_update,
        save_latent: config.or("save_latent", false)?,
        mutation: d.mutation,
    };
    c.validate().map_err(|e| CliError::config("iters", e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_each_law() {
        let base = "a=1\nlambda0=2\ndelta=1.5\ny0=0.5\n";
        for (model, extra) in [
            ("constant", "psi=0.3"),
            ("gamma", "tau=2\nomega=4"),
            ("gbm", "mu=0\nsigma2=0.1"),
            ("langevin", "k=1\nmu=0\nsigma2=0.1"),
        ] {
            let c = Config::parse(&format!("{base}model={model}\n{extra}")).unwrap();
            params(&c).unwrap();
            assert_eq!(spec(&c).unwrap().model_kind().as_str(), model);
        }
    }

    #[test]
    fn missing_and_invalid_values() {
        let c = Config::parse("a=1\nlambda0=2").unwrap();
        let e = params(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("`delta`"));
        let c = Config::parse("a=1\nlambda0=2\ndelta=-1").unwrap();
        assert_eq!(params(&c).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn priors_override_defaults() {
        let c = Config::parse("prior.a = 3, 4\nprior.sigma2 = 2, 0.5\nproposal.y = 0.1").unwrap();
        let h = hyperparams(&c).unwrap();
        assert_eq!((h.a.shape, h.a.rate), (3.0, 4.0));
        assert_eq!((h.sigma2.shape, h.sigma2.scale), (2.0, 0.5));
        assert_eq!(h.proposals.y, Some(0.1));
        assert_eq!(h.delta, Hyperparams::default().delta);
    }
}
