use serde::{Deserialize, Serialize};

use super::bqs::{bqs, BqsConfig, BqsScore};
use super::simplex::{minimize, SimplexOptions};
use super::spline::{k_of, NaturalCubicSpline, SplineBackground};
use crate::error::{Error, Result};
use crate::model::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    /// Defaults to 200 per knot.
    pub max_iterations: Option<usize>,
    pub tolerance: f64,
    pub window: usize,
    pub max_restarts: usize,
    /// Also move interior knot positions.
    pub refine_positions: bool,
    /// Hold the knot at k = 0 at its starting value. χk³ carries almost no
    /// weight there, so a free end knot can wander; on a sharp edge it is
    /// also what absorbs the ringing, hence off by default.
    pub clamp_first: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { max_iterations: None, tolerance: 1e-6, window: 10, max_restarts: 4, refine_positions: false, clamp_first: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub spline: SplineBackground,
    pub initial_score: BqsScore,
    pub final_score: BqsScore,
    /// Best score after each simplex iteration, starting with the initial one.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Post-edge samples used for scoring (the same points χ is extracted on).
fn post_edge(spectrum: &Spectrum, e0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (k, mu): (Vec<f64>, Vec<f64>) = spectrum
        .energy()
        .iter()
        .zip(spectrum.mu())
        .filter(|(&e, _)| e >= e0)
        .map(|(&e, &m)| (k_of(e, e0), m))
        .unzip();
    if k.len() < 2 {
        return Err(Error::Size { needed: 2, got: k.len() });
    }
    Ok((k, mu))
}

fn chi_k3(k: &[f64], mu: &[f64], bkg: &[f64], step: f64) -> Vec<f64> {
    k.iter().zip(mu).zip(bkg).map(|((kk, m), b)| (m - b) / step * kk.powi(3)).collect()
}

/// BQS of the χk³ that a spline background produces.
pub fn score_spline(
    spectrum: &Spectrum,
    e0: f64,
    spline: &SplineBackground,
    edge_step: f64,
    cfg: &BqsConfig,
) -> Result<BqsScore> {
    if !(edge_step > 0.0) {
        return Err(Error::InvertedEdge(edge_step));
    }
    let (k, mu) = post_edge(spectrum, e0)?;
    let s = spline.spline();
    let bkg: Vec<f64> = k.iter().map(|&kk| s.eval(kk)).collect();
    bqs(&chi_k3(&k, &mu, &bkg, edge_step), &k, cfg)
}

/// Minimize the BQS over knot values (and optionally interior positions)
/// with a restarted Nelder–Mead simplex.
pub fn refine_knots(
    spectrum: &Spectrum,
    e0: f64,
    spline: &SplineBackground,
    edge_step: f64,
    cfg: &BqsConfig,
    opts: &RefineOptions,
) -> Result<Refinement> {
    cfg.validate()?;
    let initial_score = score_spline(spectrum, e0, spline, edge_step, cfg)?;
    let (k, mu) = post_edge(spectrum, e0)?;
    let n = spline.n_knots();
    let simplex_opts = SimplexOptions {
        max_iterations: opts.max_iterations.unwrap_or(200 * n),
        tolerance: opts.tolerance,
        window: opts.window,
        max_restarts: opts.max_restarts,
    };
    let first_free = usize::from(opts.clamp_first);
    let y_fixed = spline.knot_y[..first_free].to_vec();
    let y_steps: Vec<f64> =
        spline.knot_y[first_free..].iter().map(|y| (0.05 * y.abs()).max(0.01 * edge_step)).collect();
    let full_y = |free: &[f64]| -> Vec<f64> { y_fixed.iter().chain(free).copied().collect() };
    let m = n - first_free;

    let score_of = |bkg: &[f64]| -> f64 {
        bqs(&chi_k3(&k, &mu, bkg, edge_step), &k, cfg).map(|s| s.score).unwrap_or(f64::INFINITY)
    };

    let (result, knot_k, knot_y) = if opts.refine_positions && n > 2 {
        let mut x0 = spline.knot_y[first_free..].to_vec();
        x0.extend_from_slice(&spline.knot_k[1..n - 1]);
        let spacing = spline.knot_k[n - 1] / (n - 1) as f64;
        let mut steps = y_steps.clone();
        steps.extend(std::iter::repeat_n(0.1 * spacing, n - 2));
        let (k_first, k_last) = (spline.knot_k[0], spline.knot_k[n - 1]);
        let unpack = |x: &[f64]| -> Vec<f64> {
            let mut kk = Vec::with_capacity(n);
            kk.push(k_first);
            kk.extend_from_slice(&x[m..]);
            kk.push(k_last);
            kk
        };
        let r = minimize(
            |x| {
                let kk = unpack(x);
                match NaturalCubicSpline::new(&kk, &full_y(&x[..m])) {
                    Ok(s) => score_of(&k.iter().map(|&t| s.eval(t)).collect::<Vec<_>>()),
                    Err(_) => f64::INFINITY,
                }
            },
            &x0,
            &steps,
            &simplex_opts,
        );
        let kk = unpack(&r.x);
        let yy = full_y(&r.x[..m]);
        (r, kk, yy)
    } else {
        // the spline is linear in its knot values: S(k_i) = Σ_j B_ij y_j
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut unit = vec![0.0; n];
                unit[j] = 1.0;
                let s = NaturalCubicSpline::new(&spline.knot_k, &unit).expect("valid knots");
                k.iter().map(|&t| s.eval(t)).collect()
            })
            .collect();
        let mut fixed_part = vec![0.0; k.len()];
        for (col, &yj) in basis.iter().zip(&y_fixed) {
            for (b, c) in fixed_part.iter_mut().zip(col) {
                *b += c * yj;
            }
        }
        let mut bkg = vec![0.0; k.len()];
        let r = minimize(
            |y| {
                bkg.copy_from_slice(&fixed_part);
                for (col, &yj) in basis[first_free..].iter().zip(y) {
                    for (b, c) in bkg.iter_mut().zip(col) {
                        *b += c * yj;
                    }
                }
                score_of(&bkg)
            },
            &spline.knot_y[first_free..],
            &y_steps,
            &simplex_opts,
        );
        let yy = full_y(&r.x);
        (r, spline.knot_k.clone(), yy)
    };

    let mut refined = SplineBackground::new(spline.e0, spline.r_bkg, knot_k, knot_y)?;
    let mut final_score = score_spline(spectrum, e0, &refined, edge_step, cfg)?;
    // the simplex sums the basis in a different order, so a start point that
    // is already optimal can come back a few ulps worse
    if final_score.score > initial_score.score {
        refined = spline.clone();
        final_score = initial_score;
    }
    let mut history = Vec::with_capacity(result.history.len() + 1);
    history.push(initial_score.score);
    for &h in &result.history {
        history.push(h.min(history[history.len() - 1]));
    }
    Ok(Refinement {
        spline: refined,
        initial_score,
        final_score,
        history,
        iterations: result.iterations,
        evaluations: result.evaluations,
        converged: result.converged,
    })
}
