//! Reduction of X-ray absorption spectra: ingestion of beamline files,
//! edge finding, background removal and normalization, EXAFS χ(k)
//! extraction and windowed Fourier transforms to R-space.

pub mod background;
pub mod error;
pub mod exafs;
pub mod ingest;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod signal;

pub use error::{Error, Result};
pub use model::*;
