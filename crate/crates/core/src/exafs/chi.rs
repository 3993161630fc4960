use crate::background::Background;
use crate::error::{Error, Result};
use crate::model::{e_to_k, ChiSpectrum, Spectrum};

/// χ = (μ − μ0)/Δμ0 at every sample with E ≥ e0, on the k axis.
pub fn extract_chi(spectrum: &Spectrum, post: &dyn Background, edge_step: f64, e0: f64) -> Result<ChiSpectrum> {
    if !(edge_step > 0.0 && edge_step.is_finite()) {
        return Err(Error::InvertedEdge(edge_step));
    }
    let (energies, mu): (Vec<f64>, Vec<f64>) =
        spectrum.energy().iter().zip(spectrum.mu()).filter(|(&e, _)| e >= e0).map(|(&e, &m)| (e, m)).unzip();
    if energies.len() < 2 {
        return Err(Error::Size { needed: 2, got: energies.len() });
    }
    let bkg = post.eval_many(&energies);
    let k = energies.iter().map(|&e| e_to_k(e, e0)).collect::<Result<Vec<_>>>()?;
    let chi = mu.iter().zip(&bkg).map(|(m, b)| (m - b) / edge_step).collect();
    ChiSpectrum::new(k, chi, 0)
}

/// Multiply χ by kⁿ. Only unweighted input is accepted.
pub fn k_weight(chi: &ChiSpectrum, n: u8) -> Result<ChiSpectrum> {
    if chi.weight() != 0 {
        return Err(Error::AlreadyWeighted(chi.weight()));
    }
    if n > 3 {
        return Err(Error::params(format!("k-weight {n} not in 0..=3")));
    }
    let values = chi.k().iter().zip(chi.chi()).map(|(k, c)| c * k.powi(n as i32)).collect();
    ChiSpectrum::new(chi.k().to_vec(), values, n)
}
