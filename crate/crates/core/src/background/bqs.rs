use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Weights and options for the background quality score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BqsConfig {
    pub w_mean: f64,
    pub w_slope: f64,
    pub w_spread: f64,
    pub w_symmetry: f64,
    /// Exponent of the slope denominator Σ|kᵢ − k̄|ᵖ; 2 gives the OLS slope.
    pub p: f64,
    /// Points below this k are ignored.
    pub k_min: f64,
}

impl Default for BqsConfig {
    fn default() -> Self {
        BqsConfig { w_mean: 1.0, w_slope: 1.0, w_spread: 1.0, w_symmetry: 1.0, p: 2.0, k_min: 0.0 }
    }
}

impl BqsConfig {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_mean, self.w_slope, self.w_spread, self.w_symmetry];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::params("BQS weights must be finite and non-negative"));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::params("BQS exponent p must be positive"));
        }
        Ok(())
    }
}

/// Score and its four (non-negative) components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BqsScore {
    pub score: f64,
    /// |mean of χk³|
    pub mean: f64,
    /// |slope of χk³ against k|
    pub slope: f64,
    /// sqrt of the population variance of χk³
    pub spread: f64,
    /// |P − N| / (P + N), zero when both vanish
    pub symmetry: f64,
}

/// Background quality score of a k³-weighted χ.
pub fn bqs(chi_k3: &[f64], k: &[f64], cfg: &BqsConfig) -> Result<BqsScore> {
    if chi_k3.len() != k.len() {
        return Err(Error::params(format!("{} chi values for {} k values", chi_k3.len(), k.len())));
    }
    cfg.validate()?;
    let (y, k): (Vec<f64>, Vec<f64>) =
        chi_k3.iter().zip(k).filter(|(_, &kk)| kk >= cfg.k_min).map(|(&y, &kk)| (y, kk)).unzip();
    if y.len() < 2 {
        return Err(Error::Size { needed: 2, got: y.len() });
    }
    let n = y.len() as f64;
    let mean = pairwise_sum(&y) / n;
    let k_bar = pairwise_sum(&k) / n;

    let num: Vec<f64> = k.iter().zip(&y).map(|(kk, yy)| (kk - k_bar) * (yy - mean)).collect();
    let den: Vec<f64> = k.iter().map(|kk| (kk - k_bar).abs().powf(cfg.p)).collect();
    let den = pairwise_sum(&den);
    let slope = if den > 0.0 { pairwise_sum(&num) / den } else { 0.0 };

    let pos: Vec<f64> = y.iter().filter(|v| **v > 0.0).copied().collect();
    let neg: Vec<f64> = y.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    let (p, q) = (pairwise_sum(&pos), pairwise_sum(&neg));
    let symmetry = if p + q != 0.0 { (p - q).abs() / (p + q) } else { 0.0 };

    let sq: Vec<f64> = y.iter().map(|v| (v - mean).powi(2)).collect();
    let spread = (pairwise_sum(&sq) / n).sqrt();

    let (mean, slope) = (mean.abs(), slope.abs());
    let score = cfg.w_mean * mean + cfg.w_slope * slope + cfg.w_spread * spread + cfg.w_symmetry * symmetry;
    Ok(BqsScore { score, mean, slope, spread, symmetry })
}
