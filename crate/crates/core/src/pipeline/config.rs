use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::background::{BqsConfig, PolyConfig, RefineOptions, DEFAULT_PRE_RANGE};
use crate::error::{Error, Result};
use crate::ingest::LabelRules;
use crate::model::{AcquisitionMode, FtParams};
use crate::signal::{E0Method, SavGolParams};

/// Every tunable of the reduction, loadable from one TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ingest: IngestConfig,
    pub e0: E0Config,
    pub preedge: PreEdgeConfig,
    pub background: BackgroundConfig,
    pub chi: ChiConfig,
    pub ft: FtParams,
    pub export: ExportConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Forced acquisition mode; inferred from the columns when unset.
    pub mode: Option<AcquisitionMode>,
    pub labels: LabelRules,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E0Config {
    pub method: E0Method,
    pub savgol: SavGolParams,
    /// Use this edge energy instead of searching for one.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreEdgeConfig {
    /// Fit window relative to e0, eV.
    pub range: [f64; 2],
    pub degree: usize,
}

impl Default for PreEdgeConfig {
    fn default() -> Self {
        PreEdgeConfig { range: [DEFAULT_PRE_RANGE.0, DEFAULT_PRE_RANGE.1], degree: 1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Spline,
    Poly,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Spline => "spline",
            Engine::Poly => "poly",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spline" => Ok(Engine::Spline),
            "poly" | "polynomial" => Ok(Engine::Poly),
            other => Err(Error::params(format!("unknown background engine '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub engine: Engine,
    pub r_bkg: f64,
    /// Run knot refinement after the spline is placed.
    pub refine: bool,
    pub bqs: BqsConfig,
    pub poly: PolyConfig,
    pub refine_options: RefineOptions,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig {
            engine: Engine::Spline,
            r_bkg: 1.0,
            refine: false,
            bqs: BqsConfig::default(),
            poly: PolyConfig::default(),
            refine_options: RefineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChiConfig {
    pub k_weight: u8,
}

impl Default for ChiConfig {
    fn default() -> Self {
        ChiConfig { k_weight: 2 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Xdi,
    Columnar,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Xdi => "xdi",
            ExportFormat::Columnar => "dat",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xdi" => Ok(ExportFormat::Xdi),
            "columnar" | "dat" | "txt" => Ok(ExportFormat::Columnar),
            other => Err(Error::params(format!("unknown export format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub format: ExportFormat,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::params(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.e0.savgol.validate()?;
        if let Some(v) = self.e0.value {
            if !v.is_finite() {
                return Err(Error::params("fixed e0 must be finite"));
            }
        }
        let [lo, hi] = self.preedge.range;
        if !(lo < hi && hi <= 0.0) {
            return Err(Error::params(format!("pre-edge range [{lo}, {hi}] must be increasing and below e0")));
        }
        if !(self.preedge.degree == 1 || self.preedge.degree == 2) {
            return Err(Error::params("pre-edge degree must be 1 or 2"));
        }
        if !(self.background.r_bkg > 0.0 && self.background.r_bkg.is_finite()) {
            return Err(Error::params("background r_bkg must be positive"));
        }
        self.background.bqs.validate()?;
        self.background.poly.validate()?;
        if self.chi.k_weight > 3 {
            return Err(Error::params("k_weight must be in 0..=3"));
        }
        self.ft.validate()
    }
}
