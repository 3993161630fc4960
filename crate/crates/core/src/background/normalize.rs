use super::Background;
use crate::error::{Error, Result};
use crate::model::{NormalizedSpectrum, Spectrum};

/// Δμ = S_post(e0) − S_pre(e0).
pub fn edge_step(pre: &dyn Background, post: &dyn Background, e0: f64) -> Result<f64> {
    let step = post.eval(e0) - pre.eval(e0);
    if !step.is_finite() {
        return Err(Error::Compute(format!("edge step at e0={e0} is not finite")));
    }
    if step <= 0.0 {
        return Err(Error::InvertedEdge(step));
    }
    Ok(step)
}

/// Pre-edge subtracted below e0, post-edge flattened above, both scaled by Δμ.
pub fn normalize_flatten(
    spectrum: &Spectrum,
    pre: &dyn Background,
    post: &dyn Background,
    step: f64,
    e0: f64,
) -> Result<NormalizedSpectrum> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvertedEdge(step));
    }
    let e = spectrum.energy();
    let s_pre = pre.eval_many(e);
    let s_post = post.eval_many(e);
    let mu_corrected = e
        .iter()
        .zip(spectrum.mu())
        .zip(s_pre.iter().zip(&s_post))
        .map(|((&x, &m), (&lo, &hi))| if x <= e0 { (m - lo) / step } else { (m - hi + step) / step })
        .collect();
    Ok(NormalizedSpectrum { grid: spectrum.grid().clone(), mu_corrected, e0, edge_step: step })
}
