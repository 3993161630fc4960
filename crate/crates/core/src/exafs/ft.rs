use std::f64::consts::FRAC_2_PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::window::window;
use crate::error::{Error, Result};
use crate::model::{interp_one, ChiSpectrum, FtParams, RSpectrum, WindowSpec};
use crate::numeric::pairwise_sum;

/// Tolerance when checking that a window lies inside the data range.
const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformKGrid {
    pub k_start: f64,
    pub dk: f64,
    pub count: usize,
}

impl UniformKGrid {
    pub fn new(k_start: f64, dk: f64, count: usize) -> Result<Self> {
        if !(dk > 0.0 && dk.is_finite() && k_start.is_finite()) {
            return Err(Error::params(format!("k grid step {dk} must be positive")));
        }
        if count < 2 {
            return Err(Error::Size { needed: 2, got: count });
        }
        Ok(UniformKGrid { k_start, dk, count })
    }

    /// Grid from zero up to and including `k_max`.
    pub fn from_zero(k_max: f64, dk: f64) -> Result<Self> {
        let count = (k_max / dk + RANGE_TOL).floor() as usize + 1;
        UniformKGrid::new(0.0, dk, count)
    }

    pub fn k(&self, i: usize) -> f64 {
        self.k_start + i as f64 * self.dk
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.k(i)).collect()
    }
}

/// Hanning window over the full data range with 1 Å⁻¹ tapers.
pub fn default_window(chi: &ChiSpectrum) -> WindowSpec {
    let k = chi.k();
    WindowSpec::hanning(k[0], k[k.len() - 1], 1.0)
}

fn resolve_window(chi: &ChiSpectrum, params: &FtParams) -> Result<WindowSpec> {
    let spec = params.window.unwrap_or_else(|| default_window(chi));
    spec.validate()?;
    let k = chi.k();
    let (lo, hi) = (k[0], k[k.len() - 1]);
    if spec.k_min < lo - RANGE_TOL || spec.k_max > hi + RANGE_TOL {
        return Err(Error::params(format!(
            "window [{}, {}] extends beyond data k range [{lo}, {hi}]",
            spec.k_min, spec.k_max
        )));
    }
    Ok(spec)
}

/// Windowed χ on a uniform grid from zero; zero outside the data range.
fn windowed_samples(chi: &ChiSpectrum, spec: &WindowSpec, dk: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = UniformKGrid::from_zero(spec.k_max, dk)?.values();
    let w = window(&grid, spec)?;
    let (k, y) = (chi.k(), chi.chi());
    let (lo, hi) = (k[0], k[k.len() - 1]);
    let f = grid
        .iter()
        .zip(&w)
        .map(|(&kk, &wk)| if wk == 0.0 || kk < lo || kk > hi { 0.0 } else { wk * interp_one(k, y, kk) })
        .collect();
    Ok((grid, f))
}

/// χ(R) = sqrt(2/π) Σ χ(kᵢ)W(kᵢ) e^{−2ikᵢR} Δk on R ∈ [0, r_max].
pub fn forward_ft(chi: &ChiSpectrum, params: &FtParams) -> Result<RSpectrum> {
    params.validate()?;
    if chi.len() < 2 {
        return Err(Error::Size { needed: 2, got: chi.len() });
    }
    let spec = resolve_window(chi, params)?;
    let dk = params.k_step();
    let (k, f) = windowed_samples(chi, &spec, dk)?;
    let dr = params.r_step(spec.k_max - spec.k_min);
    let n_r = (params.r_max / dr + RANGE_TOL).floor() as usize + 1;
    let norm = FRAC_2_PI.sqrt() * dk;

    let values: Vec<Complex64> = (0..n_r)
        .into_par_iter()
        .map(|j| {
            let r = j as f64 * dr;
            let mut re = Vec::with_capacity(k.len());
            let mut im = Vec::with_capacity(k.len());
            for (&kk, &fk) in k.iter().zip(&f) {
                let (s, c) = (2.0 * kk * r).sin_cos();
                re.push(fk * c);
                im.push(-fk * s);
            }
            Complex64::new(norm * pairwise_sum(&re), norm * pairwise_sum(&im))
        })
        .collect();
    let r = (0..n_r).map(|j| j as f64 * dr).collect();
    Ok(RSpectrum { r, values, params: *params, window: spec })
}

/// Re[sqrt(2/π) Σ χ(Rⱼ) e^{2ikRⱼ} ΔR] at arbitrary k, using only Rⱼ < `r_below`.
pub fn inverse_ft_at(rspec: &RSpectrum, k: &[f64], r_below: Option<f64>) -> Vec<f64> {
    let dr = rspec.dr();
    let norm = FRAC_2_PI.sqrt() * dr;
    let used: Vec<(f64, Complex64)> = rspec
        .r
        .iter()
        .zip(&rspec.values)
        .filter(|(r, _)| r_below.is_none_or(|lim| **r < lim))
        .map(|(&r, &v)| (r, v))
        .collect();
    k.par_iter()
        .map(|&kk| {
            let terms: Vec<f64> = used
                .iter()
                .map(|(r, v)| {
                    let (s, c) = (2.0 * kk * r).sin_cos();
                    v.re * c - v.im * s
                })
                .collect();
            norm * pairwise_sum(&terms)
        })
        .collect()
}

/// Back-transform of the full χ(R) onto a uniform k grid.
pub fn inverse_ft(rspec: &RSpectrum, grid: &UniformKGrid) -> Vec<f64> {
    inverse_ft_at(rspec, &grid.values(), None)
}

/// Remove the R < r_bkg content: χ_filtered = χ − χ_bkg, and its transform.
pub fn rbkg_filter(chi: &ChiSpectrum, params: &FtParams) -> Result<(ChiSpectrum, RSpectrum)> {
    let full = forward_ft(chi, params)?;
    let bkg = inverse_ft_at(&full, chi.k(), Some(params.r_bkg));
    let filtered_values = chi.chi().iter().zip(&bkg).map(|(c, b)| c - b).collect();
    let filtered = ChiSpectrum::new(chi.k().to_vec(), filtered_values, chi.weight())?;
    let resolved = FtParams { window: Some(full.window), ..*params };
    let r_filtered = forward_ft(&filtered, &resolved)?;
    Ok((filtered, r_filtered))
}
