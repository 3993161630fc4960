use serde::{Deserialize, Serialize};

use super::Background;
use crate::error::{Error, Result};
use crate::model::{e_to_k, k_to_e, Spectrum, KNOT_CONST};

/// Minimum post-edge span for a spline background, eV.
pub const MIN_SPLINE_SPAN: f64 = 50.0;

/// Natural cubic spline through `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::params("spline needs at least two knots with matching values"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::params("spline knots must be strictly increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(NaturalCubicSpline { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let (x, y, m) = (&self.x, &self.y, &self.m);
        // linear continuation outside the knots (natural end conditions)
        if t <= x[0] {
            let h = x[1] - x[0];
            let slope = (y[1] - y[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
            return y[0] + slope * (t - x[0]);
        }
        if t >= x[n - 1] {
            let h = x[n - 1] - x[n - 2];
            let slope = (y[n - 1] - y[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
            return y[n - 1] + slope * (t - x[n - 1]);
        }
        let i = x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = x[i + 1] - x[i];
        let a = (x[i + 1] - t) / h;
        let b = (t - x[i]) / h;
        a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
    }
}

/// Number of spline knots for a post-edge range:
/// round(0.326·r_bkg·(√(E_max−E0) − √(E_min−E0))), at least 4.
pub fn knot_count(e0: f64, e_min_post: f64, e_max: f64, r_bkg: f64) -> Result<usize> {
    if !(e_max > e_min_post && e_min_post >= e0) {
        return Err(Error::params(format!(
            "degenerate knot range: e0={e0} e_min={e_min_post} e_max={e_max}"
        )));
    }
    if !(r_bkg > 0.0 && r_bkg.is_finite()) {
        return Err(Error::params(format!("r_bkg {r_bkg} must be positive")));
    }
    let n = (KNOT_CONST * r_bkg * ((e_max - e0).sqrt() - (e_min_post - e0).sqrt())).round();
    Ok((n as usize).max(4))
}

/// Post-edge spline background: a natural cubic spline in k with knots
/// equally spaced over `[0, k_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBackground {
    pub e0: f64,
    pub r_bkg: f64,
    pub knot_k: Vec<f64>,
    pub knot_y: Vec<f64>,
}

impl SplineBackground {
    pub fn new(e0: f64, r_bkg: f64, knot_k: Vec<f64>, knot_y: Vec<f64>) -> Result<Self> {
        NaturalCubicSpline::new(&knot_k, &knot_y)?;
        Ok(SplineBackground { e0, r_bkg, knot_k, knot_y })
    }

    pub fn n_knots(&self) -> usize {
        self.knot_k.len()
    }

    pub fn spline(&self) -> NaturalCubicSpline {
        NaturalCubicSpline::new(&self.knot_k, &self.knot_y).expect("knots validated at construction")
    }

    pub fn eval_k(&self, k: f64) -> f64 {
        self.spline().eval(k)
    }

    /// Same knot positions, new values.
    pub fn with_values(&self, knot_y: Vec<f64>) -> Result<Self> {
        if knot_y.len() != self.knot_k.len() {
            return Err(Error::params(format!(
                "{} knot values for {} knots",
                knot_y.len(),
                self.knot_k.len()
            )));
        }
        SplineBackground::new(self.e0, self.r_bkg, self.knot_k.clone(), knot_y)
    }

    /// Energies of the knots.
    pub fn knot_energies(&self) -> Vec<f64> {
        self.knot_k.iter().map(|&k| k_to_e(k, self.e0)).collect()
    }

    /// Evaluate at many energies without rebuilding the spline.
    pub fn eval_many(&self, energies: &[f64]) -> Vec<f64> {
        let s = self.spline();
        energies.iter().map(|&e| s.eval(k_of(e, self.e0))).collect()
    }
}

impl Background for SplineBackground {
    fn eval(&self, e: f64) -> f64 {
        self.eval_k(k_of(e, self.e0))
    }

    fn eval_many(&self, energies: &[f64]) -> Vec<f64> {
        SplineBackground::eval_many(self, energies)
    }
}

/// Least-squares line through `pts` evaluated at `x`.
fn local_line_at(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Some(ym);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    Some(ym + sxy / sxx * (x - xm))
}

/// k for energies at or above e0; zero below.
pub(crate) fn k_of(e: f64, e0: f64) -> f64 {
    e_to_k(e.max(e0), e0).unwrap_or(0.0)
}

/// Place knots and initialise their values from the data.
///
/// Each knot starts at the local mean of μ over the points within a quarter
/// knot spacing (half-spacing window) of it, taken as a straight-line fit in
/// k evaluated at the knot so that the one-sided windows at either end are
/// not biased by the slope. Falls back to the plain mean for a single point
/// and to interpolated μ for an empty window. `knot_y` replaces the initial
/// values.
pub fn fit_spline_background(
    spectrum: &Spectrum,
    e0: f64,
    r_bkg: f64,
    knot_y: Option<&[f64]>,
) -> Result<SplineBackground> {
    let e = spectrum.energy();
    let mu = spectrum.mu();
    let e_max = e[e.len() - 1];
    if !(e_max - e0 >= MIN_SPLINE_SPAN) {
        return Err(Error::Fit(format!(
            "post-edge span {:.1} eV is below {MIN_SPLINE_SPAN} eV",
            e_max - e0
        )));
    }
    let n = knot_count(e0, e0, e_max, r_bkg)?;
    let k_max = e_to_k(e_max, e0)?;
    let spacing = k_max / (n - 1) as f64;
    let knot_k: Vec<f64> = (0..n).map(|j| j as f64 * spacing).collect();

    let values = match knot_y {
        Some(y) => {
            if y.len() != n {
                return Err(Error::params(format!("{} knot overrides for {n} knots", y.len())));
            }
            y.to_vec()
        }
        None => {
            let post: Vec<(f64, f64)> = e
                .iter()
                .zip(mu)
                .filter(|(&x, _)| x >= e0)
                .map(|(&x, &m)| (k_of(x, e0), m))
                .collect();
            knot_k
                .iter()
                .map(|&kk| {
                    let half = 0.25 * spacing;
                    let inside: Vec<(f64, f64)> =
                        post.iter().filter(|(k, _)| (k - kk).abs() <= half).copied().collect();
                    local_line_at(&inside, kk).unwrap_or_else(|| crate::model::interp_one(e, mu, k_to_e(kk, e0)))
                })
                .collect()
        }
    };
    SplineBackground::new(e0, r_bkg, knot_k, values)
}
