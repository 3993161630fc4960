use serde::{Deserialize, Serialize};

use super::Background;
use crate::error::{Error, Result};
use crate::model::Spectrum;
use crate::numeric::{polyfit, Polynomial};

/// Default pre-edge window relative to E0, in eV.
pub const DEFAULT_PRE_RANGE: (f64, f64) = (-150.0, -30.0);

/// Line or parabola fitted below the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreEdgeModel {
    pub poly: Polynomial,
    /// Absolute energies actually used for the fit.
    pub fit_range: (f64, f64),
    pub n_points: usize,
}

impl PreEdgeModel {
    /// Coefficients of E⁰, E¹(, E²).
    pub fn coefficients(&self) -> Vec<f64> {
        self.poly.raw_coefficients()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }
}

impl Background for PreEdgeModel {
    fn eval(&self, e: f64) -> f64 {
        self.poly.eval(e)
    }
}

/// Least-squares polynomial (degree 1 or 2) over `range` (absolute eV),
/// clipped to the data and to energies below `e0`.
pub fn fit_preedge(spectrum: &Spectrum, e0: f64, range: (f64, f64), degree: usize) -> Result<PreEdgeModel> {
    if !(degree == 1 || degree == 2) {
        return Err(Error::params(format!("pre-edge degree {degree} not in {{1, 2}}")));
    }
    let (lo, hi) = range;
    if !(lo < hi) || lo >= e0 {
        return Err(Error::params(format!("pre-edge range [{lo}, {hi}] must lie below e0={e0}")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = spectrum
        .energy()
        .iter()
        .zip(spectrum.mu())
        .filter(|(&e, _)| e >= lo && e <= hi && e < e0)
        .map(|(&e, &m)| (e, m))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Fit(format!("{} points in pre-edge range, need 3", xs.len())));
    }
    let poly = polyfit(&xs, &ys, None, degree)?;
    Ok(PreEdgeModel { poly, fit_range: (xs[0], xs[xs.len() - 1]), n_points: xs.len() })
}
