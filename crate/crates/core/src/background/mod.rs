//! Pre- and post-edge background models, scoring, refinement and
//! normalization.

mod bqs;
mod normalize;
mod poly;
mod preedge;
mod refine;
pub mod simplex;
mod spline;

use serde::{Deserialize, Serialize};

pub use bqs::{bqs, BqsConfig, BqsScore};
pub use normalize::{edge_step, normalize_flatten};
pub use poly::{fit_poly_background, select_degree, PolyBackground, PolyConfig, MIN_POLY_SPAN};
pub use preedge::{fit_preedge, PreEdgeModel, DEFAULT_PRE_RANGE};
pub use refine::{refine_knots, score_spline, RefineOptions, Refinement};
pub use spline::{fit_spline_background, knot_count, NaturalCubicSpline, SplineBackground, MIN_SPLINE_SPAN};

/// A smooth model of μ(E) evaluable at any energy.
pub trait Background {
    fn eval(&self, e: f64) -> f64;

    fn eval_many(&self, energies: &[f64]) -> Vec<f64> {
        energies.iter().map(|&e| self.eval(e)).collect()
    }
}

/// Either post-edge engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum PostEdgeModel {
    Spline(SplineBackground),
    Poly(PolyBackground),
}

impl Background for PostEdgeModel {
    fn eval(&self, e: f64) -> f64 {
        match self {
            PostEdgeModel::Spline(s) => s.eval(e),
            PostEdgeModel::Poly(p) => p.eval(e),
        }
    }

    fn eval_many(&self, energies: &[f64]) -> Vec<f64> {
        match self {
            PostEdgeModel::Spline(s) => s.eval_many(energies),
            PostEdgeModel::Poly(p) => p.eval_many(energies),
        }
    }
}
