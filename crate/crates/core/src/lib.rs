//! Hawkes processes whose excitation levels follow a stochastic law.
//!
//! Each event adds a jump `Yᵢ` to the intensity and the jumps decay at a
//! common exponential rate. The levels can be constant (the classical
//! model), independent Gamma draws, or sampled at the event times from a
//! geometric Brownian motion or an exponentiated Ornstein–Uhlenbeck process.
//!
//! The crate provides exact simulation in linear time, the branching-structure
//! likelihood, a hybrid Gibbs/Metropolis–Hastings posterior sampler, the EM
//! responsibilities of the classical model, and goodness-of-fit and MCMC
//! diagnostics.
//!
//! ```
//! use stochastic_hawkes::{simulate, HawkesParams, SdeKind, SdeSpec, SeedTree};
//!
//! let params = HawkesParams::new(1.0, 2.0, 1.5).unwrap();
//! let spec = SdeSpec::new(SdeKind::Gbm { mu: 0.0, sigma2: 0.05 }, 0.5).unwrap();
//! let mut rng = SeedTree::new(7).stream(0);
//! let run = simulate(&params, &spec, 50.0, &mut rng).unwrap();
//! assert_eq!(run.events.len(), run.contagion.len());
//! ```

pub mod bench;
pub mod diagnostics;
pub mod em;
pub mod error;
pub mod infer;
pub mod model;
pub mod rng;
pub mod sde;
pub mod simulate;

pub mod par;

pub use error::{HawkesError, Result};
pub use model::*;
pub use rng::{HawkesRng, SeedTree};
pub use sde::{sample_path, GapSeries};
pub use simulate::{simulate, simulate_ogata, SimulationResult};
