//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Model parameters cross the boundary as plain numbers. The law is chosen by
//! name and takes up to three numbers, in the order the CLI uses:
//! `constant` (psi), `gamma` (shape, rate), `gbm` (mu, sigma2) and
//! `langevin` (k, mu, sigma2).

use stochastic_hawkes::diagnostics::{expected_intensity_curve, uniform_grid};
use stochastic_hawkes::infer::branching_probabilities as branching_row;
use stochastic_hawkes::simulate::intensity_trace;
use stochastic_hawkes::{
    simulate, ContagionPath, EventSequence, HawkesError, HawkesParams, SdeKind, SdeSpec, SeedTree,
};
use wasm_bindgen::prelude::*;

/// Points of the intensity curve between events.
const TRACE_POINTS: usize = 512;

pub fn law(model: &str, p: &[f64], y0: f64) -> Result<SdeSpec, HawkesError> {
    let at = |i: usize| p.get(i).copied().unwrap_or(f64::NAN);
    let kind = match model {
        "constant" => SdeKind::Constant { psi: at(0) },
        "gamma" => SdeKind::IidGamma { shape: at(0), rate: at(1) },
        "gbm" => SdeKind::Gbm { mu: at(0), sigma2: at(1) },
        "langevin" => SdeKind::ExpLangevin { k: at(0), mu: at(1), sigma2: at(2) },
        _ => {
            return Err(HawkesError::InvalidParameter {
                name: "model",
                value: f64::NAN,
                reason: "expected constant, gamma, gbm or langevin",
            })
        }
    };
    SdeSpec::new(kind, y0)
}

/// One simulated path with its intensity trace.
#[wasm_bindgen]
pub struct Path {
    times: Vec<f64>,
    levels: Vec<f64>,
    trace_t: Vec<f64>,
    trace_lambda: Vec<f64>,
}

#[wasm_bindgen]
impl Path {
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.levels.clone()
    }

    /// Trace times; each event appears twice, left limit first.
    #[wasm_bindgen(js_name = traceT)]
    pub fn trace_t(&self) -> Vec<f64> {
        self.trace_t.clone()
    }

    #[wasm_bindgen(js_name = traceLambda)]
    pub fn trace_lambda(&self) -> Vec<f64> {
        self.trace_lambda.clone()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_native(
    model: &str,
    law_params: &[f64],
    y0: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    horizon: f64,
    seed: u32,
) -> Result<Path, HawkesError> {
    let params = HawkesParams::new(a, lambda0, delta)?;
    let spec = law(model, law_params, y0)?;
    let run = simulate(&params, &spec, horizon, &mut SeedTree::new(seed.into()).stream(0))?;
    let trace = intensity_trace(&run.events, &run.contagion, &params, TRACE_POINTS);
    Ok(Path {
        times: run.events.times().to_vec(),
        levels: run.contagion.into_inner(),
        trace_t: trace.iter().map(|p| p.t).collect(),
        trace_lambda: trace.iter().map(|p| p.lambda).collect(),
    })
}

fn js(e: HawkesError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = simulatePath)]
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    model: &str,
    law_params: Vec<f64>,
    y0: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    horizon: f64,
    seed: u32,
) -> Result<Path, JsError> {
    simulate_native(model, &law_params, y0, a, lambda0, delta, horizon, seed).map_err(js)
}

/// Parent probabilities of event `index`: immigrant first, then each earlier
/// event.
pub fn branching_native(
    times: Vec<f64>,
    levels: Vec<f64>,
    horizon: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    index: usize,
) -> Result<Vec<f64>, HawkesError> {
    let events = EventSequence::new(times, horizon)?;
    let y = ContagionPath::new(levels)?;
    let params = HawkesParams::new(a, lambda0, delta)?;
    branching_row(index, &events, &y, &params)
}

#[wasm_bindgen(js_name = branchingProbabilities)]
pub fn branching_probabilities(
    times: Vec<f64>,
    levels: Vec<f64>,
    horizon: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    index: usize,
) -> Result<Vec<f64>, JsError> {
    branching_native(times, levels, horizon, a, lambda0, delta, index).map_err(js)
}

/// Mean intensity on `points` even steps of `(0, t_max]`, preceded by
/// `λ₀` at zero.
#[allow(clippy::too_many_arguments)]
pub fn renewal_native(
    model: &str,
    law_params: &[f64],
    y0: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, HawkesError> {
    let params = HawkesParams::new(a, lambda0, delta)?;
    let spec = law(model, law_params, y0)?;
    let mut curve = vec![lambda0];
    curve.extend(expected_intensity_curve(
        &params,
        |t| spec.mean_level(t),
        &uniform_grid(t_max, points),
    )?);
    Ok(curve)
}

#[wasm_bindgen(js_name = renewalCurve)]
#[allow(clippy::too_many_arguments)]
pub fn renewal_curve(
    model: &str,
    law_params: Vec<f64>,
    y0: f64,
    a: f64,
    lambda0: f64,
    delta: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    renewal_native(model, &law_params, y0, a, lambda0, delta, t_max, points).map_err(js)
}
