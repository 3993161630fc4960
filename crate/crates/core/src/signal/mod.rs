//! Savitzky–Golay filtering, numerical derivatives and edge-energy finding.

mod edge;
mod savgol;

pub use edge::{derivative, find_e0, smooth_on_grid, E0Method};
pub use savgol::{coefficients, savgol, SavGolParams};
