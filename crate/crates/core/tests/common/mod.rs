#![allow(dead_code)]

pub const E0: f64 = 8979.0;
pub const ETOK: f64 = 0.2624682917;

pub fn k_of(e: f64) -> f64 {
    if e <= E0 {
        0.0
    } else {
        (ETOK * (e - E0)).sqrt()
    }
}

/// Ground-truth χ(k) used by the synthetic scans.
pub fn chi_true(k: f64) -> f64 {
    if k <= 0.0 {
        0.0
    } else {
        0.3 * (1.0 - (-k * k / 4.0).exp()) / k * (5.0 * k).sin()
    }
}

/// Smooth absorption without the fine structure.
pub fn mu0(e: f64) -> f64 {
    let x = e - E0;
    let edge = 0.5 + (x / 1.5).atan() / std::f64::consts::PI;
    0.3 - 2e-5 * x + edge * (1.0 - 1.5e-4 * x.max(0.0) + 6e-8 * x.max(0.0).powi(2))
}

pub fn mu(e: f64) -> f64 {
    mu0(e) + chi_true(k_of(e))
}

pub fn energies() -> Vec<f64> {
    (0..2000).map(|i| 8780.0 + 0.5 * i as f64).collect()
}

/// Transmission scan as a three-column text file.
pub fn transmission_text() -> String {
    let mut s = String::from("# synthetic Cu K edge\n# energy i0 it\n");
    for e in energies() {
        let i0 = 1e5 * (1.0 + 0.02 * (e / 50.0).sin());
        let it = i0 * (-mu(e)).exp();
        s.push_str(&format!("{e:.4} {i0:.12e} {it:.12e}\n"));
    }
    s
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
