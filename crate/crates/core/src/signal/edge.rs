use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::savgol::{savgol, SavGolParams};
use crate::error::{Error, Result};
use crate::model::{interp_one, Spectrum};
use crate::numeric::median;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E0Method {
    FirstDerivative,
    #[default]
    SmoothedFirstDerivative,
    HalfHeight,
    SmoothedSecondDerivative,
}

impl E0Method {
    pub const ALL: [E0Method; 4] = [
        E0Method::FirstDerivative,
        E0Method::SmoothedFirstDerivative,
        E0Method::HalfHeight,
        E0Method::SmoothedSecondDerivative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            E0Method::FirstDerivative => "first_derivative",
            E0Method::SmoothedFirstDerivative => "smoothed_first_derivative",
            E0Method::HalfHeight => "half_height",
            E0Method::SmoothedSecondDerivative => "smoothed_second_derivative",
        }
    }
}

impl fmt::Display for E0Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for E0Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        E0Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .or(match s.as_str() {
                "deriv" | "d1" => Some(E0Method::FirstDerivative),
                "smoothed" | "sd1" => Some(E0Method::SmoothedFirstDerivative),
                "half" => Some(E0Method::HalfHeight),
                "sd2" => Some(E0Method::SmoothedSecondDerivative),
                _ => None,
            })
            .ok_or_else(|| Error::params(format!("unknown E0 method '{s}'")))
    }
}

/// Derivative of the quadratic through three points, evaluated at `x`.
fn quad_derivative(xs: [f64; 3], ys: [f64; 3], x: f64, order: u8) -> f64 {
    let [x0, x1, x2] = xs;
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    match order {
        1 => {
            ys[0] * ((x - x1) + (x - x2)) / d0
                + ys[1] * ((x - x0) + (x - x2)) / d1
                + ys[2] * ((x - x0) + (x - x1)) / d2
        }
        _ => 2.0 * (ys[0] / d0 + ys[1] / d1 + ys[2] / d2),
    }
}

fn finite_difference(x: &[f64], y: &[f64], order: u8) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let s = i.clamp(1, n - 2) - 1;
            quad_derivative([x[s], x[s + 1], x[s + 2]], [y[s], y[s + 1], y[s + 2]], x[i], order)
        })
        .collect()
}

fn is_uniform(x: &[f64]) -> Option<f64> {
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h).then_some(h)
}

/// Savitzky–Golay filter on an arbitrary grid: uniform grids are filtered
/// directly, others are resampled to the median spacing and interpolated
/// back.
pub fn smooth_on_grid(x: &[f64], y: &[f64], params: &SavGolParams) -> Result<Vec<f64>> {
    if let Some(h) = is_uniform(x) {
        return savgol(y, params, h);
    }
    let steps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let h = median(&steps);
    let count = ((x[x.len() - 1] - x[0]) / h).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| x[0] + i as f64 * h).collect();
    let resampled: Vec<f64> = grid.iter().map(|&g| interp_one(x, y, g)).collect();
    let filtered = savgol(&resampled, params, h)?;
    Ok(x.iter().map(|&xi| interp_one(&grid, &filtered, xi)).collect())
}

/// First or second derivative of μ(E), optionally Savitzky–Golay smoothed.
pub fn derivative(spectrum: &Spectrum, order: u8, smoothing: Option<&SavGolParams>) -> Result<Vec<f64>> {
    if !(order == 1 || order == 2) {
        return Err(Error::params(format!("derivative order {order} not in {{1, 2}}")));
    }
    let (x, y) = (spectrum.energy(), spectrum.mu());
    if x.len() < 5 {
        return Err(Error::Size { needed: 5, got: x.len() });
    }
    match smoothing {
        None => Ok(finite_difference(x, y, order)),
        Some(p) => smooth_on_grid(x, y, &p.with_deriv(order as usize)),
    }
}

/// Index of the first maximum, so ties resolve toward lower energy.
fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Absorption edge energy.
pub fn find_e0(spectrum: &Spectrum, method: E0Method, smoothing: &SavGolParams) -> Result<f64> {
    let (e, mu) = (spectrum.energy(), spectrum.mu());
    let lo = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::NoEdge);
    }

    match method {
        E0Method::FirstDerivative => {
            let d = derivative(spectrum, 1, None)?;
            Ok(e[first_argmax(&d)])
        }
        E0Method::SmoothedFirstDerivative => {
            let d = derivative(spectrum, 1, Some(smoothing))?;
            Ok(e[first_argmax(&d)])
        }
        E0Method::HalfHeight => {
            let target = lo + 0.5 * (hi - lo);
            (1..mu.len())
                .find(|&i| mu[i - 1] < target && mu[i] >= target)
                .map(|i| {
                    let t = (target - mu[i - 1]) / (mu[i] - mu[i - 1]);
                    e[i - 1] + t * (e[i] - e[i - 1])
                })
                .ok_or(Error::NoEdge)
        }
        E0Method::SmoothedSecondDerivative => {
            let d1 = derivative(spectrum, 1, Some(smoothing))?;
            let peak = e[first_argmax(&d1)];
            let d2 = derivative(spectrum, 2, Some(smoothing))?;
            let mut best: Option<f64> = None;
            let mut consider = |x: f64| {
                if best.is_none_or(|b| (x - peak).abs() < (b - peak).abs()) {
                    best = Some(x);
                }
            };
            for i in 0..d2.len() {
                if d2[i] == 0.0 {
                    consider(e[i]);
                } else if i + 1 < d2.len() && d2[i] * d2[i + 1] < 0.0 {
                    let t = d2[i] / (d2[i] - d2[i + 1]);
                    consider(e[i] + t * (e[i + 1] - e[i]));
                }
            }
            best.ok_or(Error::NoEdge)
        }
    }
}
