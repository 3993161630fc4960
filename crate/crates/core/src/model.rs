//! Shared domain types, units and physical constants.
//!
//! Energies are in eV, photoelectron wavevectors in Å⁻¹ and distances in Å
//! everywhere in the crate. Values are validated on construction and are
//! immutable afterwards.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2·mₑ/ħ² in eV⁻¹·Å⁻².
pub const K_CONV: f64 = 0.262_468_291_7;

/// Knot-count constant, approximately (2/π)·sqrt(2·mₑ/ħ²).
pub const KNOT_CONST: f64 = 0.326;

/// Energy in eV above `e0` to photoelectron wavevector in Å⁻¹.
pub fn e_to_k(e: f64, e0: f64) -> Result<f64> {
    if !(e.is_finite() && e0.is_finite()) {
        return Err(Error::Domain(format!("non-finite energy {e} or e0 {e0}")));
    }
    if e < e0 {
        return Err(Error::Domain(format!("energy {e} below e0 {e0}")));
    }
    Ok((K_CONV * (e - e0)).sqrt())
}

pub fn k_to_e(k: f64, e0: f64) -> f64 {
    e0 + k * k / K_CONV
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x_new`.
///
/// `xs` must be strictly increasing. Points outside `[xs[0], xs[n-1]]` are an
/// error unless `extrapolate` is set, in which case the end segments are
/// extended linearly.
pub fn interpolate_linear(
    xs: &[f64],
    ys: &[f64],
    x_new: &[f64],
    extrapolate: bool,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::params(format!(
            "xs has {} values but ys has {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Size { needed: 2, got: xs.len() });
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::params("interpolation abscissae must be strictly increasing"));
    }
    let lo = xs[0];
    let hi = xs[xs.len() - 1];
    x_new
        .iter()
        .map(|&x| {
            if !extrapolate && !(lo..=hi).contains(&x) {
                return Err(Error::OutOfRange { value: x, lo, hi });
            }
            Ok(interp_one(xs, ys, x))
        })
        .collect()
}

/// Single-point linear interpolation; extends end segments when `x` is outside.
pub(crate) fn interp_one(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    // index of the segment start, clamped to [0, n-2]
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let (x0, x1) = (xs[i], xs[i + 1]);
    if x == x0 {
        return ys[i];
    }
    if x == x1 {
        return ys[i + 1];
    }
    let t = (x - x0) / (x1 - x0);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Strictly increasing sequence of photon energies in eV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyGrid(Vec<f64>);

impl EnergyGrid {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::Size { needed: 2, got: energies.len() });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::params("energy grid contains non-finite values"));
        }
        if let Some(i) = energies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::params(format!(
                "energy grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(EnergyGrid(energies))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMode {
    #[default]
    Transmission,
    Fluorescence,
    TotalElectronYield,
}

impl AcquisitionMode {
    /// Column label used for μ(E) of this mode in XDI output.
    pub fn mu_label(self) -> &'static str {
        match self {
            AcquisitionMode::Transmission => "mutrans",
            AcquisitionMode::Fluorescence => "mufluor",
            AcquisitionMode::TotalElectronYield => "mutey",
        }
    }

    pub fn from_mu_label(label: &str) -> Option<Self> {
        match label.trim().to_ascii_lowercase().as_str() {
            "mutrans" => Some(AcquisitionMode::Transmission),
            "mufluor" => Some(AcquisitionMode::Fluorescence),
            "mutey" => Some(AcquisitionMode::TotalElectronYield),
            _ => None,
        }
    }
}

impl fmt::Display for AcquisitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AcquisitionMode::Transmission => "transmission",
            AcquisitionMode::Fluorescence => "fluorescence",
            AcquisitionMode::TotalElectronYield => "tey",
        })
    }
}

impl FromStr for AcquisitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transmission" | "trans" => Ok(AcquisitionMode::Transmission),
            "fluorescence" | "fluor" => Ok(AcquisitionMode::Fluorescence),
            "tey" | "total_electron_yield" | "electron" => Ok(AcquisitionMode::TotalElectronYield),
            other => Err(Error::params(format!("unknown acquisition mode '{other}'"))),
        }
    }
}

/// Sample and beamline description. `extra` holds namespaced `namespace.tag`
/// pairs in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub element: String,
    pub edge: String,
    pub sample_name: String,
    pub beamline: String,
    pub facility: String,
    pub extra: BTreeMap<String, String>,
}

impl Metadata {
    /// Insert into `extra`, rejecting empty or duplicate keys.
    pub fn insert_extra(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        if key.trim().is_empty() {
            return Err(Error::params("metadata key must not be empty"));
        }
        if self.extra.contains_key(&key) {
            return Err(Error::params(format!("duplicate metadata key '{key}'")));
        }
        self.extra.insert(key, value.into());
        Ok(())
    }
}

/// μ(E) on an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    grid: EnergyGrid,
    mu: Vec<f64>,
    pub mode: AcquisitionMode,
    pub meta: Metadata,
}

impl Spectrum {
    pub fn new(grid: EnergyGrid, mu: Vec<f64>, mode: AcquisitionMode, meta: Metadata) -> Result<Self> {
        if mu.len() != grid.len() {
            return Err(Error::params(format!(
                "{} mu values for {} energies",
                mu.len(),
                grid.len()
            )));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::params("mu contains non-finite values"));
        }
        Ok(Spectrum { grid, mu, mode, meta })
    }

    /// Convenience constructor from raw vectors.
    pub fn from_vecs(energy: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        Spectrum::new(EnergyGrid::new(energy)?, mu, AcquisitionMode::default(), Metadata::default())
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn energy(&self) -> &[f64] {
        self.grid.as_slice()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn with_meta(mut self, meta: Metadata) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_mode(mut self, mode: AcquisitionMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Background-corrected, edge-step normalized μ(E).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSpectrum {
    pub grid: EnergyGrid,
    pub mu_corrected: Vec<f64>,
    pub e0: f64,
    pub edge_step: f64,
}

/// χ(k), optionally k-weighted by kⁿ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSpectrum {
    k: Vec<f64>,
    chi: Vec<f64>,
    weight: u8,
}

impl ChiSpectrum {
    pub fn new(k: Vec<f64>, chi: Vec<f64>, weight: u8) -> Result<Self> {
        if k.len() != chi.len() {
            return Err(Error::params(format!("{} k values for {} chi values", k.len(), chi.len())));
        }
        if k.is_empty() {
            return Err(Error::Size { needed: 1, got: 0 });
        }
        if !(k[0] >= 0.0) {
            return Err(Error::params("k must be non-negative"));
        }
        if k.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::params("k must be strictly increasing"));
        }
        if weight > 3 {
            return Err(Error::params(format!("k-weight {weight} not in 0..=3")));
        }
        Ok(ChiSpectrum { k, chi, weight })
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn weight(&self) -> u8 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hanning,
    Kaiser,
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hanning" | "hann" => Ok(WindowKind::Hanning),
            "kaiser" => Ok(WindowKind::Kaiser),
            other => Err(Error::params(format!("unknown window '{other}'"))),
        }
    }
}

/// k-space window: zero outside `[k_min, k_max]`, one on
/// `[k_min + dk, k_max - dk]`, tapered in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub k_min: f64,
    pub k_max: f64,
    pub dk: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl WindowSpec {
    pub fn hanning(k_min: f64, k_max: f64, dk: f64) -> Self {
        WindowSpec { kind: WindowKind::Hanning, k_min, k_max, dk, alpha: 0.0 }
    }

    pub fn kaiser(k_min: f64, k_max: f64, dk: f64, alpha: f64) -> Self {
        WindowSpec { kind: WindowKind::Kaiser, k_min, k_max, dk, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k_min, self.k_max, self.dk, self.alpha].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::params("window parameters must be finite"));
        }
        if self.k_min < 0.0 {
            return Err(Error::params("window k_min must be non-negative"));
        }
        if self.dk < 0.0 {
            return Err(Error::params("window taper width must be non-negative"));
        }
        if self.alpha < 0.0 {
            return Err(Error::params("kaiser alpha must be non-negative"));
        }
        if !(self.k_min + self.dk <= self.k_max - self.dk) || !(self.k_max > self.k_min) {
            return Err(Error::params(format!(
                "window flat region empty: k_min={} k_max={} dk={}",
                self.k_min, self.k_max, self.dk
            )));
        }
        Ok(())
    }
}

/// Fourier transform parameters. `window` of `None` means "full data range
/// with 1 Å⁻¹ Hanning tapers".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FtParams {
    pub r_max: f64,
    pub r_bkg: f64,
    pub oversample: usize,
    pub window: Option<WindowSpec>,
}

impl Default for FtParams {
    fn default() -> Self {
        FtParams { r_max: 8.0, r_bkg: 1.0, oversample: 8, window: None }
    }
}

impl FtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_bkg.is_finite()) {
            return Err(Error::params("r_max and r_bkg must be finite"));
        }
        // r_bkg = 0 is allowed and means "no low-R filtering"
        if !(self.r_bkg >= 0.0 && self.r_max > self.r_bkg) {
            return Err(Error::params(format!(
                "need r_max > r_bkg >= 0, got r_max={} r_bkg={}",
                self.r_max, self.r_bkg
            )));
        }
        if self.oversample < 1 {
            return Err(Error::params("oversample must be >= 1"));
        }
        if let Some(w) = &self.window {
            w.validate()?;
        }
        Ok(())
    }

    /// Uniform k-grid step: π / (2·r_max·oversample).
    pub fn k_step(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.r_max * self.oversample as f64)
    }

    /// R-grid step for a k-range of width `k_span`: π / (2·k_span·oversample).
    pub fn r_step(&self, k_span: f64) -> f64 {
        std::f64::consts::PI / (2.0 * k_span * self.oversample as f64)
    }
}

/// Complex χ(R) on a uniform R grid starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSpectrum {
    pub r: Vec<f64>,
    pub values: Vec<Complex64>,
    pub params: FtParams,
    /// Window actually applied (resolved from the data range when
    /// `params.window` is `None`).
    pub window: WindowSpec,
}

impl RSpectrum {
    pub fn dr(&self) -> f64 {
        if self.r.len() < 2 {
            0.0
        } else {
            self.r[1] - self.r[0]
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.im).collect()
    }
}
