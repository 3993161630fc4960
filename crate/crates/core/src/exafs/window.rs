use super::bessel::bessel_i0;
use crate::error::Result;
use crate::model::{WindowKind, WindowSpec};

/// ½(1 − cos πn) for n ∈ [0, 1].
pub fn hanning_taper(n: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * n).cos())
}

/// Rising half of a Kaiser window: I0(α·sqrt(1 − (n − 1)²)) / I0(α).
/// Reaches 1 at n = 1 so the taper joins the flat region continuously.
pub fn kaiser_taper(n: f64, alpha: f64) -> f64 {
    let u = (1.0 - (n - 1.0).powi(2)).max(0.0);
    bessel_i0(alpha * u.sqrt()) / bessel_i0(alpha)
}

fn taper(spec: &WindowSpec, n: f64) -> f64 {
    let n = n.clamp(0.0, 1.0);
    match spec.kind {
        WindowKind::Hanning => hanning_taper(n),
        WindowKind::Kaiser => kaiser_taper(n, spec.alpha),
    }
}

fn value(spec: &WindowSpec, k: f64) -> f64 {
    if k < spec.k_min || k > spec.k_max {
        0.0
    } else if k < spec.k_min + spec.dk {
        taper(spec, (k - spec.k_min) / spec.dk)
    } else if k <= spec.k_max - spec.dk {
        1.0
    } else {
        taper(spec, (spec.k_max - k) / spec.dk)
    }
}

/// W(k) at each of `k`.
pub fn window(k: &[f64], spec: &WindowSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(k.iter().map(|&kk| value(spec, kk)).collect())
}
