//! Exact diagonalization and infinite-frequency analytics for three Rabi
//! cavities on a ring with a complex photon hopping `J e^{i theta}`.

pub mod analytic;
pub mod cli;
pub mod ed;
pub mod observables;
pub mod scaling;
pub mod error;
pub mod model;

pub use error::{Error, Result};
pub use model::{bare_coupling, flux, FrequencyRatio, ModelParams};
