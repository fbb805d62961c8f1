//! Harmonic-level interpolation: the amplitude, phase and trend curves of
//! the decomposed initial imputation are clipped around each gap and
//! re-interpolated, and the gap samples are rebuilt from the harmonics.

mod clip;
mod interp;
mod pipeline;

pub use clip::{clip_and_interpolate, Clipped};
pub use interp::{interpolate_1d, interpolate_linear, InterpolationScheme};
pub use pipeline::{hali_impute, initial_imputation, refine, HaliConfig, ImputationResult, InitialStage, Refinement};
