//! Gap imputation for non-stationary oscillatory time series.
//!
//! The pipeline runs in three stages: an initial imputer fills every
//! missing interval ([`imputers`]), the filled record is split into a
//! trend plus per-harmonic amplitude and phase curves ([`tfa`]), and the
//! curves are re-interpolated across the gaps before harmonic
//! resynthesis ([`hali`]). [`evaluation`] holds the metrics and the
//! seeded synthetic benchmark.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod hali;
pub mod imputers;
pub mod io;
mod linalg;
pub mod signal;
pub mod tfa;

pub use error::{Error, Result};
pub use hali::{hali_impute, HaliConfig, ImputationResult, InterpolationScheme};
pub use imputers::{ImputerConfig, Method};
pub use signal::{MissingInterval, Signal};
pub use tfa::{harmonic_decompose, DecomposeParams, HarmonicDecomposition};
