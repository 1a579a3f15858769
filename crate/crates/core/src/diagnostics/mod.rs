//! Goodness of fit, chain quality, the sampler-correctness harness and the
//! mean-intensity curve.

mod geweke;
mod ks;
mod renewal;
mod rescaling;
mod summary;

pub use geweke::*;
pub use ks::*;
pub use renewal::*;
pub use rescaling::*;
pub use summary::*;
