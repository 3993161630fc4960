//! χ(k) extraction, k-weighting, windows and Fourier transforms.

mod bessel;
mod chi;
mod ft;
mod window;

pub use bessel::bessel_i0;
pub use chi::{extract_chi, k_weight};
pub use ft::{default_window, forward_ft, inverse_ft, inverse_ft_at, rbkg_filter, UniformKGrid};
pub use window::{hanning_taper, kaiser_taper, window};
