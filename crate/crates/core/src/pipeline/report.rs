use serde::Serialize;

use super::analysis::{Analysis, E0Candidate, RefinementSummary};
use super::config::Engine;
use crate::background::{BqsScore, PostEdgeModel};
use crate::error::Result;
use crate::ingest::{ColumnRoles, DetectionReport, MuReport, ParseReport};
use crate::model::{AcquisitionMode, WindowSpec};
use crate::signal::E0Method;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Knot {
    pub k: f64,
    pub energy: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreEdgeSummary {
    pub coefficients: Vec<f64>,
    pub fit_range: (f64, f64),
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationSummary {
    pub degree: usize,
    pub e_threshold: f64,
    pub coefficients: Vec<f64>,
    pub fit_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtSummary {
    pub window: WindowSpec,
    pub dk: f64,
    pub dr: f64,
    pub r_points: usize,
    pub peak_r: f64,
    pub peak_magnitude: f64,
}

/// Per-file processing summary. Contains no timing so that reruns are
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessingReport {
    pub source: String,
    pub parse: ParseReport,
    pub labels: Vec<String>,
    pub detection: DetectionReport,
    pub roles: ColumnRoles,
    pub mode: AcquisitionMode,
    pub mu: MuReport,
    pub points: usize,
    pub e0: f64,
    pub e0_method: Option<E0Method>,
    pub e0_candidates: Vec<E0Candidate>,
    pub pre_edge: PreEdgeSummary,
    pub edge_step: f64,
    pub normalization: NormalizationSummary,
    pub engine: Engine,
    pub knots: Vec<Knot>,
    pub bqs: BqsScore,
    pub refinement: Option<RefinementSummary>,
    pub k_weight: u8,
    pub chi_points: usize,
    pub ft: FtSummary,
    pub warnings: Vec<String>,
}

impl Analysis {
    /// Run every stage and summarise it.
    pub fn report(&mut self) -> Result<ProcessingReport> {
        self.run()?;
        let mu = self.mu()?.clone();
        let e0 = self.e0()?.clone();
        let bg = self.background()?.clone();
        let chi_points = self.chi()?.weighted.len();
        let ft = self.ft()?;

        let mag = ft.r.magnitude();
        let peak = (0..mag.len()).fold(0, |b, i| if mag[i] > mag[b] { i } else { b });
        let ft_summary = FtSummary {
            window: ft.r.window,
            dk: ft.r.params.k_step(),
            dr: ft.r.dr(),
            r_points: ft.r.r.len(),
            peak_r: ft.r.r[peak],
            peak_magnitude: mag[peak],
        };
        let knots = match &bg.post {
            PostEdgeModel::Spline(s) => s
                .knot_k
                .iter()
                .zip(s.knot_energies())
                .zip(&s.knot_y)
                .map(|((&k, energy), &y)| Knot { k, energy, y })
                .collect(),
            PostEdgeModel::Poly(_) => Vec::new(),
        };
        let scan = self.scan();
        Ok(ProcessingReport {
            source: self.source().name.clone(),
            parse: scan.report.clone(),
            labels: scan.labels().iter().map(|s| s.to_string()).collect(),
            detection: self.detection().clone(),
            roles: self.roles().clone(),
            mode: mu.mode,
            mu: mu.report.clone(),
            points: mu.spectrum.len(),
            e0: e0.e0,
            e0_method: e0.method,
            e0_candidates: e0.candidates,
            pre_edge: PreEdgeSummary {
                coefficients: bg.pre.coefficients(),
                fit_range: bg.pre.fit_range,
                n_points: bg.pre.n_points,
            },
            edge_step: bg.edge_step,
            normalization: NormalizationSummary {
                degree: bg.norm_model.degree,
                e_threshold: bg.norm_model.e_threshold,
                coefficients: bg.norm_model.coefficients(),
                fit_range: bg.norm_model.fit_range,
            },
            engine: self.config().background.engine,
            knots,
            bqs: bg.bqs,
            refinement: bg.refinement,
            k_weight: self.config().chi.k_weight,
            chi_points,
            ft: ft_summary,
            warnings: self.warnings().to_vec(),
        })
    }
}
