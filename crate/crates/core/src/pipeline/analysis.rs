use serde::Serialize;

use super::config::{Engine, PipelineConfig};
use crate::background::{
    bqs, edge_step, fit_poly_background, fit_preedge, fit_spline_background, normalize_flatten, refine_knots,
    BqsScore, PolyBackground, PostEdgeModel, PreEdgeModel,
};
use crate::error::{Error, Result};
use crate::exafs::{extract_chi, forward_ft, k_weight, rbkg_filter};
use crate::ingest::{
    compute_mu, detect_columns, looks_like_xdi, parse_columnar_bytes, parse_xdi, ColumnRoles, DetectionReport,
    MuReport, RawScan,
};
use crate::model::{AcquisitionMode, ChiSpectrum, FtParams, NormalizedSpectrum, RSpectrum, Spectrum};
use crate::signal::{find_e0, E0Method};

/// The file an analysis was loaded from, kept verbatim for pass-through export.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuStage {
    pub spectrum: Spectrum,
    pub mode: AcquisitionMode,
    pub report: MuReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E0Candidate {
    pub method: E0Method,
    pub e0: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E0Stage {
    pub e0: f64,
    /// `None` when the edge energy was fixed by configuration.
    pub method: Option<E0Method>,
    pub candidates: Vec<E0Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementSummary {
    pub initial: BqsScore,
    #[serde(rename = "final")]
    pub final_score: BqsScore,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundStage {
    pub pre: PreEdgeModel,
    /// Polynomial post-edge model that defines Δμ and the flattening.
    pub norm_model: PolyBackground,
    /// Post-edge model of the selected engine; χ is taken against it.
    pub post: PostEdgeModel,
    pub edge_step: f64,
    pub normalized: NormalizedSpectrum,
    pub bqs: BqsScore,
    pub refinement: Option<RefinementSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiStage {
    pub chi: ChiSpectrum,
    pub weighted: ChiSpectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtStage {
    pub r: RSpectrum,
    pub filtered: ChiSpectrum,
    pub r_filtered: RSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Mu,
    E0,
    Background,
    Chi,
    Ft,
}

/// One spectrum carried through the reduction, with each stage computed on
/// demand and cached until something upstream of it changes.
#[derive(Debug, Clone)]
pub struct Analysis {
    source: Source,
    scan: RawScan,
    comments: Vec<String>,
    warnings: Vec<String>,
    detection: DetectionReport,
    roles: ColumnRoles,
    config: PipelineConfig,
    knot_y: Option<Vec<f64>>,
    pending_refinement: Option<RefinementSummary>,
    mu: Option<MuStage>,
    e0: Option<E0Stage>,
    background: Option<BackgroundStage>,
    chi: Option<ChiStage>,
    ft: Option<FtStage>,
}

impl Analysis {
    /// Parse `bytes` (XDI or columnar text) and detect column roles.
    pub fn load(name: impl Into<String>, bytes: Vec<u8>, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let text = String::from_utf8_lossy(&bytes);
        let (scan, comments, warnings) = if looks_like_xdi(&text) {
            let doc = parse_xdi(&text)?;
            let mut scan = doc.table;
            scan.meta = doc.meta;
            (scan, doc.comments, doc.warnings)
        } else {
            (parse_columnar_bytes(&bytes)?, Vec::new(), Vec::new())
        };
        let (roles, detection) = detect_columns(&scan, &config.ingest.labels)?;
        Ok(Analysis {
            source: Source { name: name.into(), bytes },
            scan,
            comments,
            warnings,
            detection,
            roles,
            config,
            knot_y: None,
            pending_refinement: None,
            mu: None,
            e0: None,
            background: None,
            chi: None,
            ft: None,
        })
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn scan(&self) -> &RawScan {
        &self.scan
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn detection(&self) -> &DetectionReport {
        &self.detection
    }

    pub fn roles(&self) -> &ColumnRoles {
        &self.roles
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn knot_overrides(&self) -> Option<&[f64]> {
        self.knot_y.as_deref()
    }

    fn invalidate(&mut self, from: Stage) {
        if from <= Stage::Mu {
            self.mu = None;
        }
        if from <= Stage::E0 {
            self.e0 = None;
        }
        if from <= Stage::Background {
            self.background = None;
        }
        if from <= Stage::Chi {
            self.chi = None;
        }
        self.ft = None;
    }

    /// Replace the configuration, dropping only the stages it affects.
    pub fn set_config(&mut self, config: PipelineConfig) -> Result<()> {
        config.validate()?;
        let old = std::mem::replace(&mut self.config, config);
        let new = &self.config;
        let from = if old.ingest.labels != new.ingest.labels {
            let (roles, detection) = detect_columns(&self.scan, &new.ingest.labels)?;
            self.roles = roles;
            self.detection = detection;
            Some(Stage::Mu)
        } else if old.ingest != new.ingest {
            Some(Stage::Mu)
        } else if old.e0 != new.e0 {
            Some(Stage::E0)
        } else if old.preedge != new.preedge || old.background != new.background {
            Some(Stage::Background)
        } else if old.chi != new.chi {
            Some(Stage::Chi)
        } else if old.ft != new.ft {
            Some(Stage::Ft)
        } else {
            None
        };
        let new = &self.config;
        // knot overrides only make sense for the knot layout they were made on
        let layout_changed = old.background.engine != new.background.engine
            || old.background.r_bkg != new.background.r_bkg
            || from.is_some_and(|f| f <= Stage::E0);
        if layout_changed {
            self.knot_y = None;
            self.pending_refinement = None;
        }
        if let Some(stage) = from {
            self.invalidate(stage);
        }
        Ok(())
    }

    /// Override the detected column roles and, optionally, the mode.
    pub fn set_roles(&mut self, roles: ColumnRoles, mode: Option<AcquisitionMode>) -> Result<()> {
        roles.validate(self.scan.columns.len())?;
        self.roles = roles;
        self.config.ingest.mode = mode;
        self.knot_y = None;
        self.pending_refinement = None;
        self.invalidate(Stage::Mu);
        Ok(())
    }

    pub fn set_e0(&mut self, method: E0Method, value: Option<f64>) -> Result<()> {
        let mut cfg = self.config.clone();
        cfg.e0.method = method;
        cfg.e0.value = value;
        self.set_config(cfg)
    }

    /// Change the post-edge engine settings. `knot_y` replaces the spline
    /// knot values; `None` returns to the data-derived values.
    pub fn set_background(&mut self, engine: Engine, r_bkg: f64, knot_y: Option<Vec<f64>>) -> Result<()> {
        if knot_y.is_some() && engine != Engine::Spline {
            return Err(Error::params("knot values only apply to the spline engine"));
        }
        let mut cfg = self.config.clone();
        cfg.background.engine = engine;
        cfg.background.r_bkg = r_bkg;
        self.set_config(cfg)?;
        self.knot_y = knot_y;
        self.pending_refinement = None;
        self.invalidate(Stage::Background);
        Ok(())
    }

    pub fn set_ft(&mut self, k_weight: u8, ft: FtParams) -> Result<()> {
        let mut cfg = self.config.clone();
        cfg.chi.k_weight = k_weight;
        cfg.ft = ft;
        self.set_config(cfg)
    }

    /// Refine the current spline knots and keep the result as overrides.
    pub fn refine(&mut self) -> Result<&BackgroundStage> {
        if self.config.background.engine != Engine::Spline {
            return Err(Error::params("refinement needs the spline engine"));
        }
        let e0 = self.e0()?.e0;
        self.background()?;
        let stage = self.background.as_ref().expect("computed above");
        let PostEdgeModel::Spline(spline) = &stage.post else {
            return Err(Error::params("refinement needs the spline engine"));
        };
        let step = stage.edge_step;
        let spectrum = &self.mu.as_ref().expect("computed above").spectrum;
        let bg = &self.config.background;
        let r = refine_knots(spectrum, e0, spline, step, &bg.bqs, &bg.refine_options)?;
        self.knot_y = Some(r.spline.knot_y.clone());
        self.pending_refinement = Some(RefinementSummary {
            initial: r.initial_score,
            final_score: r.final_score,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
            history: r.history,
        });
        self.invalidate(Stage::Background);
        self.background()
    }

    pub fn mu(&mut self) -> Result<&MuStage> {
        if self.mu.is_none() {
            let mode = self.config.ingest.mode.unwrap_or_else(|| infer_mode(&self.scan, &self.roles));
            let (spectrum, report) = compute_mu(&self.scan, &self.roles, mode)?;
            let spectrum = spectrum.with_meta(self.scan.meta.clone()).with_mode(mode);
            self.mu = Some(MuStage { spectrum, mode, report });
        }
        Ok(self.mu.as_ref().expect("just computed"))
    }

    pub fn e0(&mut self) -> Result<&E0Stage> {
        if self.e0.is_none() {
            self.mu()?;
            let spectrum = &self.mu.as_ref().expect("computed above").spectrum;
            let cfg = &self.config.e0;
            let candidates: Vec<E0Candidate> = E0Method::ALL
                .into_iter()
                .map(|m| match find_e0(spectrum, m, &cfg.savgol) {
                    Ok(v) => E0Candidate { method: m, e0: Some(v), error: None },
                    Err(e) => E0Candidate { method: m, e0: None, error: Some(e.to_string()) },
                })
                .collect();
            let stage = match cfg.value {
                Some(v) => E0Stage { e0: v, method: None, candidates },
                None => {
                    let e0 = find_e0(spectrum, cfg.method, &cfg.savgol)?;
                    E0Stage { e0, method: Some(cfg.method), candidates }
                }
            };
            self.e0 = Some(stage);
        }
        Ok(self.e0.as_ref().expect("just computed"))
    }

    pub fn background(&mut self) -> Result<&BackgroundStage> {
        if self.background.is_none() {
            let e0 = self.e0()?.e0;
            let spectrum = &self.mu.as_ref().expect("computed above").spectrum;
            let mut stage = compute_background(spectrum, e0, &self.config, self.knot_y.as_deref())?;
            if stage.refinement.is_none() {
                stage.refinement = self.pending_refinement.clone();
            }
            self.background = Some(stage);
        }
        Ok(self.background.as_ref().expect("just computed"))
    }

    pub fn chi(&mut self) -> Result<&ChiStage> {
        if self.chi.is_none() {
            let e0 = self.e0()?.e0;
            self.background()?;
            let spectrum = &self.mu.as_ref().expect("computed above").spectrum;
            let bg = self.background.as_ref().expect("computed above");
            let chi = extract_chi(spectrum, &bg.post, bg.edge_step, e0)?;
            let weighted = k_weight(&chi, self.config.chi.k_weight)?;
            self.chi = Some(ChiStage { chi, weighted });
        }
        Ok(self.chi.as_ref().expect("just computed"))
    }

    pub fn ft(&mut self) -> Result<&FtStage> {
        if self.ft.is_none() {
            self.chi()?;
            let weighted = &self.chi.as_ref().expect("computed above").weighted;
            let r = forward_ft(weighted, &self.config.ft)?;
            let (filtered, r_filtered) = rbkg_filter(weighted, &self.config.ft)?;
            self.ft = Some(FtStage { r, filtered, r_filtered });
        }
        Ok(self.ft.as_ref().expect("just computed"))
    }

    /// Compute every stage.
    pub fn run(&mut self) -> Result<()> {
        self.ft().map(|_| ())
    }
}

/// Mode from the columns, or from the μ column's label when only μ is given.
fn infer_mode(scan: &RawScan, roles: &ColumnRoles) -> AcquisitionMode {
    let has_intensities = roles.i0.is_some() && (roles.it.is_some() || !roles.i_fluor.is_empty());
    match roles.mu_direct {
        Some(idx) if !has_intensities => {
            AcquisitionMode::from_mu_label(&scan.columns[idx].label).unwrap_or(AcquisitionMode::Transmission)
        }
        _ => roles.suggested_mode(),
    }
}

fn compute_background(
    spectrum: &Spectrum,
    e0: f64,
    config: &PipelineConfig,
    knot_y: Option<&[f64]>,
) -> Result<BackgroundStage> {
    let [lo, hi] = config.preedge.range;
    let pre = fit_preedge(spectrum, e0, (e0 + lo, e0 + hi), config.preedge.degree)?;
    let bg = &config.background;
    let norm_model = fit_poly_background(spectrum, e0, &bg.poly)?;
    let step = edge_step(&pre, &norm_model, e0)?;
    let normalized = normalize_flatten(spectrum, &pre, &norm_model, step, e0)?;

    let mut refinement = None;
    let post = match bg.engine {
        Engine::Poly => PostEdgeModel::Poly(norm_model.clone()),
        Engine::Spline => {
            let mut spline = fit_spline_background(spectrum, e0, bg.r_bkg, knot_y)?;
            if bg.refine && knot_y.is_none() {
                let r = refine_knots(spectrum, e0, &spline, step, &bg.bqs, &bg.refine_options)?;
                spline = r.spline;
                refinement = Some(RefinementSummary {
                    initial: r.initial_score,
                    final_score: r.final_score,
                    iterations: r.iterations,
                    evaluations: r.evaluations,
                    converged: r.converged,
                    history: r.history,
                });
            }
            PostEdgeModel::Spline(spline)
        }
    };
    let chi = extract_chi(spectrum, &post, step, e0)?;
    let k3: Vec<f64> = chi.k().iter().zip(chi.chi()).map(|(k, c)| c * k.powi(3)).collect();
    let score = bqs(&k3, chi.k(), &bg.bqs)?;
    Ok(BackgroundStage { pre, norm_model, post, edge_step: step, normalized, bqs: score, refinement })
}
