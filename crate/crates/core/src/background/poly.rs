use serde::{Deserialize, Serialize};

use super::Background;
use crate::error::{Error, Result};
use crate::model::Spectrum;
use crate::numeric::{polyfit, Polynomial};

/// Minimum post-edge span for the polynomial engine, eV.
pub const MIN_POLY_SPAN: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolyConfig {
    /// Fraction of the post-edge range treated as the high-energy tail.
    pub f_range: f64,
    /// Point density multiplier inside the tail.
    pub densify: usize,
    /// Weight of tail points relative to the rest.
    pub hi_weight: f64,
    /// Fixed degree (2 or 3); automatic selection when unset.
    pub degree: Option<usize>,
    /// Fit starts this far above e0 (eV), capped at half the post-edge span.
    pub post_start: f64,
    pub min_span_cubic: f64,
    pub min_points_cubic: usize,
    pub min_reach_cubic: f64,
}

impl Default for PolyConfig {
    fn default() -> Self {
        PolyConfig {
            f_range: 0.6,
            densify: 5,
            hi_weight: 3.0,
            degree: None,
            post_start: 50.0,
            min_span_cubic: 300.0,
            min_points_cubic: 150,
            min_reach_cubic: 400.0,
        }
    }
}

impl PolyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_range > 0.0 && self.f_range < 1.0) {
            return Err(Error::params(format!("f_range {} not in (0, 1)", self.f_range)));
        }
        if self.densify < 1 {
            return Err(Error::params("densify must be >= 1"));
        }
        if !(self.hi_weight.is_finite() && self.hi_weight > 0.0) {
            return Err(Error::params("hi_weight must be positive"));
        }
        if let Some(d) = self.degree {
            if !(d == 2 || d == 3) {
                return Err(Error::params(format!("polynomial degree {d} not in {{2, 3}}")));
            }
        }
        if !(self.post_start.is_finite() && self.post_start >= 0.0) {
            return Err(Error::params("post_start must be >= 0"));
        }
        Ok(())
    }
}

/// Weighted polynomial post-edge model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyBackground {
    pub poly: Polynomial,
    pub degree: usize,
    pub e0: f64,
    pub e_threshold: f64,
    /// Energies of the first and last data points used.
    pub fit_range: (f64, f64),
    /// Data points in the fit range, before densification.
    pub n_points: usize,
    pub config: PolyConfig,
}

impl PolyBackground {
    pub fn coefficients(&self) -> Vec<f64> {
        self.poly.raw_coefficients()
    }
}

impl Background for PolyBackground {
    fn eval(&self, e: f64) -> f64 {
        self.poly.eval(e)
    }
}

/// Degree 3 for long, dense, far-reaching scans; 2 otherwise.
pub fn select_degree(span: f64, n_points: usize, reach: f64, cfg: &PolyConfig) -> usize {
    if span >= cfg.min_span_cubic && n_points >= cfg.min_points_cubic && reach >= cfg.min_reach_cubic {
        3
    } else {
        2
    }
}

pub fn fit_poly_background(spectrum: &Spectrum, e0: f64, cfg: &PolyConfig) -> Result<PolyBackground> {
    cfg.validate()?;
    let e = spectrum.energy();
    let mu = spectrum.mu();
    let e_max = e[e.len() - 1];
    let reach = e_max - e0;
    if !(reach >= MIN_POLY_SPAN) {
        return Err(Error::Fit(format!("post-edge span {reach:.1} eV is below {MIN_POLY_SPAN} eV")));
    }
    let lo = e0 + cfg.post_start.min(0.5 * reach);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        e.iter().zip(mu).filter(|(&x, _)| x >= lo).map(|(&x, &m)| (x, m)).unzip();
    let n_points = xs.len();
    let degree = cfg.degree.unwrap_or_else(|| select_degree(e_max - xs[0], n_points, reach, cfg));
    if n_points < degree + 2 {
        return Err(Error::Fit(format!("{n_points} post-edge points for a degree-{degree} fit")));
    }

    let e_threshold = e_max - reach * cfg.f_range;
    let mut fx = Vec::with_capacity(n_points * cfg.densify);
    let mut fy = Vec::with_capacity(fx.capacity());
    let mut fw = Vec::with_capacity(fx.capacity());
    for i in 0..n_points {
        let hi = xs[i] >= e_threshold;
        let w = if hi { cfg.hi_weight } else { 1.0 };
        fx.push(xs[i]);
        fy.push(ys[i]);
        fw.push(w);
        if hi && i + 1 < n_points {
            for j in 1..cfg.densify {
                let t = j as f64 / cfg.densify as f64;
                fx.push(xs[i] + t * (xs[i + 1] - xs[i]));
                fy.push(ys[i] + t * (ys[i + 1] - ys[i]));
                fw.push(w);
            }
        }
    }
    let poly = polyfit(&fx, &fy, Some(&fw), degree)?;
    Ok(PolyBackground {
        poly,
        degree,
        e0,
        e_threshold,
        fit_range: (xs[0], xs[n_points - 1]),
        n_points,
        config: *cfg,
    })
}
