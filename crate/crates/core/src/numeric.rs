//! Small numerical helpers shared by the fitting and transform code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation. Fixed evaluation order, so results are
/// reproducible for a given input.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Polynomial stored in the scaled variable `t = (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub center: f64,
    pub scale: f64,
    /// Coefficients of t⁰, t¹, …
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Coefficients of x⁰, x¹, … in the unscaled variable.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        // (x - c)^m / s^m expanded binomially
        for (m, &a) in self.coeffs.iter().enumerate() {
            let factor = a / self.scale.powi(m as i32);
            let mut binom = 1.0;
            for j in 0..=m {
                // term: C(m, j) x^j (-c)^(m-j)
                out[j] += factor * binom * (-self.center).powi((m - j) as i32);
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// Weighted least-squares polynomial fit. `weights` of `None` means OLS.
pub fn polyfit(xs: &[f64], ys: &[f64], weights: Option<&[f64]>, degree: usize) -> Result<Polynomial> {
    let n = xs.len();
    if ys.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::params("polyfit inputs differ in length"));
    }
    if n < degree + 1 {
        return Err(Error::Fit(format!(
            "{n} points cannot determine a degree-{degree} polynomial"
        )));
    }
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };

    let a = DMatrix::from_fn(n, degree + 1, |i, j| {
        let w = weights.map_or(1.0, |w| w[i].sqrt());
        w * ((xs[i] - center) / scale).powi(j as i32)
    });
    let b = DVector::from_fn(n, |i, _| weights.map_or(1.0, |w| w[i].sqrt()) * ys[i]);

    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::Fit(format!("least squares solve failed: {e}")))?;
    if sol.iter().any(|c| !c.is_finite()) {
        return Err(Error::Fit("least squares produced non-finite coefficients".into()));
    }
    Ok(Polynomial { center, scale, coeffs: sol.iter().cloned().collect() })
}
