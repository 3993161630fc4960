use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SavGolParams {
    pub window: usize,
    pub polyorder: usize,
    pub deriv: usize,
}

impl Default for SavGolParams {
    fn default() -> Self {
        SavGolParams { window: 7, polyorder: 2, deriv: 0 }
    }
}

impl SavGolParams {
    pub fn new(window: usize, polyorder: usize, deriv: usize) -> Result<Self> {
        let p = SavGolParams { window, polyorder, deriv };
        p.validate()?;
        Ok(p)
    }

    pub fn with_deriv(self, deriv: usize) -> Self {
        SavGolParams { deriv, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::params(format!("window {} must be odd and >= 3", self.window)));
        }
        if self.polyorder < 1 || self.polyorder >= self.window {
            return Err(Error::params(format!(
                "polyorder {} must be in 1..{}",
                self.polyorder, self.window
            )));
        }
        if self.deriv > self.polyorder {
            return Err(Error::params(format!(
                "derivative order {} exceeds polyorder {}",
                self.deriv, self.polyorder
            )));
        }
        Ok(())
    }
}

/// Convolution weights that evaluate the `deriv`-th derivative of the local
/// least-squares polynomial at offset `t` from the window centre (unit
/// sample spacing).
pub fn coefficients(params: &SavGolParams, t: f64) -> Result<Vec<f64>> {
    params.validate()?;
    let half = (params.window / 2) as f64;
    let order = params.polyorder;
    let a = DMatrix::from_fn(params.window, order + 1, |j, m| (j as f64 - half).powi(m as i32));
    let gram = a.transpose() * &a;

    // d^deriv/dt^deriv of t^m
    let v = DVector::from_fn(order + 1, |m, _| {
        if m < params.deriv {
            0.0
        } else {
            let falling: f64 = ((m - params.deriv + 1)..=m).map(|f| f as f64).product();
            falling * t.powi((m - params.deriv) as i32)
        }
    });
    let x = gram
        .lu()
        .solve(&v)
        .ok_or_else(|| Error::Fit("singular Savitzky-Golay normal matrix".into()))?;
    Ok((a * x).iter().copied().collect())
}

/// Savitzky–Golay smoothing or differentiation of uniformly spaced samples.
///
/// Points within half a window of either end use the polynomial fitted to
/// the first (or last) full window, evaluated at their own offset.
pub fn savgol(ys: &[f64], params: &SavGolParams, spacing: f64) -> Result<Vec<f64>> {
    params.validate()?;
    if ys.len() < params.window {
        return Err(Error::Size { needed: params.window, got: ys.len() });
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::params(format!("sample spacing {spacing} must be positive")));
    }
    let w = params.window;
    let half = w / 2;
    let n = ys.len();
    let scale = spacing.powi(params.deriv as i32);

    let apply = |weights: &[f64], start: usize| -> f64 {
        weights.iter().zip(&ys[start..start + w]).map(|(h, y)| h * y).sum::<f64>() / scale
    };

    let centre = coefficients(params, 0.0)?;
    let mut out = vec![0.0; n];
    for i in half..n - half {
        out[i] = apply(&centre, i - half);
    }
    for i in 0..half {
        let t = i as f64 - half as f64;
        out[i] = apply(&coefficients(params, t)?, 0);
        let j = n - 1 - i;
        out[j] = apply(&coefficients(params, -t)?, n - w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quadratic() {
        let ys: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let out = savgol(&ys, &SavGolParams::new(5, 2, 0).unwrap(), 1.0).unwrap();
        for (a, b) in out.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn linear_derivative_is_constant() {
        let ys: Vec<f64> = (0..15).map(|i| 3.0 * i as f64).collect();
        let out = savgol(&ys, &SavGolParams::new(7, 2, 1).unwrap(), 1.0).unwrap();
        for v in out {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_scales_with_spacing() {
        let h = 0.5;
        let ys: Vec<f64> = (0..15).map(|i| (i as f64 * h).powi(2)).collect();
        let out = savgol(&ys, &SavGolParams::new(5, 2, 2).unwrap(), h).unwrap();
        for v in out {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classic_five_point_weights() {
        // textbook quadratic 5-point smoothing kernel: (-3, 12, 17, 12, -3)/35
        let c = coefficients(&SavGolParams::new(5, 2, 0).unwrap(), 0.0).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(SavGolParams::new(4, 2, 0).is_err());
        assert!(SavGolParams::new(5, 5, 0).is_err());
        assert!(SavGolParams::new(5, 2, 3).is_err());
        assert!(SavGolParams::new(5, 0, 0).is_err());
        let p = SavGolParams::new(7, 2, 0).unwrap();
        assert!(matches!(savgol(&[1.0; 5], &p, 1.0), Err(Error::Size { needed: 7, got: 5 })));
    }
}
