use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use xaskit_core::ingest::{looks_like_xdi, parse_columnar, parse_xdi, RawScan};
use xaskit_core::{interpolate_linear, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareStage {
    Chi,
    R,
}

impl fmt::Display for CompareStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareStage::Chi => "chi",
            CompareStage::R => "r",
        })
    }
}

impl FromStr for CompareStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chi" | "k" => Ok(CompareStage::Chi),
            "r" => Ok(CompareStage::R),
            other => Err(Error::InvalidParams(format!("unknown stage '{other}', expected chi or r"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub stage: CompareStage,
    pub x_label: String,
    pub y_label: String,
    /// Points of `a` inside the range of `b`.
    pub points: usize,
    pub rms: f64,
    pub max: f64,
    pub peak_a: f64,
    pub peak_b: f64,
    /// peak_b − peak_a
    pub peak_shift: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

fn read_table(text: &str) -> Result<RawScan> {
    if looks_like_xdi(text) {
        Ok(parse_xdi(text)?.table)
    } else {
        parse_columnar(text)
    }
}

/// Column pair for a stage: `k` with the highest-weighted unfiltered χ, or
/// `r` with |χ(R)|.
fn columns(scan: &RawScan, stage: CompareStage) -> Result<(usize, usize)> {
    let missing = |what: &str| Error::Detection(format!("no {what} column among {:?}", scan.labels()));
    match stage {
        CompareStage::Chi => {
            let x = scan.find("k").ok_or_else(|| missing("k"))?;
            let y = scan
                .labels()
                .iter()
                .rposition(|l| {
                    let l = l.to_ascii_lowercase();
                    l.starts_with("chik") && !l.ends_with("_filtered")
                })
                .or_else(|| scan.find("chi"))
                .ok_or_else(|| missing("chi"))?;
            Ok((x, y))
        }
        CompareStage::R => {
            let x = scan.find("r").ok_or_else(|| missing("r"))?;
            let y = scan.find("chir_mag").ok_or_else(|| missing("chir_mag"))?;
            Ok((x, y))
        }
    }
}

fn peak(x: &[f64], y: &[f64]) -> f64 {
    let i = (0..y.len()).fold(0, |b, i| if y[i].abs() > y[b].abs() { i } else { b });
    x[i]
}

/// Interpolate `b` onto the grid of `a` and measure the differences.
pub fn compare_texts(a: &str, b: &str, stage: CompareStage, tolerance: f64) -> Result<CompareReport> {
    let (ta, tb) = (read_table(a)?, read_table(b)?);
    let (xa, ya) = columns(&ta, stage)?;
    let x_label = ta.columns[xa].label.clone();
    let y_label = ta.columns[ya].label.clone();
    let (xb, _) = columns(&tb, stage)?;
    let yb = tb
        .find(&y_label)
        .ok_or_else(|| Error::Detection(format!("second table has no '{y_label}' column")))?;
    let (xa, ya) = (&ta.columns[xa].values, &ta.columns[ya].values);
    let (xb, yb) = (&tb.columns[xb].values, &tb.columns[yb].values);
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::Size { needed: 1, got: 0 });
    }

    let (lo, hi) = (xb[0], xb[xb.len() - 1]);
    let (grid, ref_vals): (Vec<f64>, Vec<f64>) =
        xa.iter().zip(ya).filter(|(x, _)| **x >= lo && **x <= hi).map(|(x, y)| (*x, *y)).unzip();
    if grid.is_empty() {
        return Err(Error::Domain("the two grids do not overlap".into()));
    }
    let other = interpolate_linear(xb, yb, &grid, false)?;
    let diffs: Vec<f64> = ref_vals.iter().zip(&other).map(|(p, q)| (p - q).abs()).collect();
    let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let max = diffs.iter().copied().fold(0.0, f64::max);
    let (peak_a, peak_b) = (peak(xa, ya), peak(xb, yb));
    Ok(CompareReport {
        stage,
        x_label,
        y_label,
        points: grid.len(),
        rms,
        max,
        peak_a,
        peak_b,
        peak_shift: peak_b - peak_a,
        tolerance,
        within_tolerance: max <= tolerance,
    })
}
