use serde::Serialize;

use super::columnar::RawScan;
use super::detect::ColumnRoles;
use crate::error::{Error, Result};
use crate::model::{AcquisitionMode, EnergyGrid, Spectrum};

const DEAD_MONITOR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MuReport {
    /// Rows dropped for non-positive intensities or non-finite μ.
    pub dropped_rows: usize,
    /// Rows folded into a neighbour with an identical energy.
    pub merged_duplicates: usize,
    pub used_mu_column: bool,
}

/// Build μ(E) from detector columns.
///
/// Transmission uses ln(I0/It) (unit thickness); fluorescence and electron
/// yield use ΣIf/I0 over the selected channels. A pre-computed μ column is
/// used when the intensity columns for `mode` are missing. The result is
/// sorted by energy with duplicate energies averaged.
pub fn compute_mu(scan: &RawScan, roles: &ColumnRoles, mode: AcquisitionMode) -> Result<(Spectrum, MuReport)> {
    roles.validate(scan.columns.len())?;
    let col = |i: usize| scan.columns[i].values.as_slice();
    let energy = col(roles.energy);
    let n = energy.len();

    let mut report = MuReport::default();
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(n);

    let check_monitor = |i0: &[f64]| -> Result<()> {
        let dead = i0.iter().filter(|&&v| v <= 0.0).count() as f64 / n as f64;
        if dead > DEAD_MONITOR_FRACTION {
            return Err(Error::DeadMonitor { fraction: 100.0 * dead });
        }
        Ok(())
    };

    match (mode, roles.i0, roles.it, roles.i_fluor.is_empty()) {
        (AcquisitionMode::Transmission, Some(i0), Some(it), _) => {
            let (i0, it) = (col(i0), col(it));
            check_monitor(i0)?;
            for r in 0..n {
                if i0[r] <= 0.0 || it[r] <= 0.0 {
                    report.dropped_rows += 1;
                    continue;
                }
                points.push((energy[r], (i0[r] / it[r]).ln()));
            }
        }
        (AcquisitionMode::Fluorescence | AcquisitionMode::TotalElectronYield, Some(i0), _, false) => {
            let i0 = col(i0);
            check_monitor(i0)?;
            for r in 0..n {
                if i0[r] <= 0.0 {
                    report.dropped_rows += 1;
                    continue;
                }
                let signal: f64 = roles.i_fluor.iter().map(|&c| col(c)[r]).sum();
                points.push((energy[r], signal / i0[r]));
            }
        }
        _ => {
            let mu_col = roles.mu_direct.ok_or_else(|| {
                Error::Compute(format!("{mode} mode needs columns that were not assigned"))
            })?;
            report.used_mu_column = true;
            let mu = col(mu_col);
            points.extend(energy.iter().copied().zip(mu.iter().copied()));
        }
    }

    let before = points.len();
    points.retain(|(e, m)| e.is_finite() && m.is_finite());
    report.dropped_rows += before - points.len();

    if points.is_empty() {
        return Err(Error::Compute("all rows invalid".into()));
    }

    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut energies = Vec::with_capacity(points.len());
    let mut mus = Vec::with_capacity(points.len());
    let mut i = 0;
    while i < points.len() {
        let e = points[i].0;
        let mut j = i;
        let mut sum = 0.0;
        while j < points.len() && points[j].0 == e {
            sum += points[j].1;
            j += 1;
        }
        report.merged_duplicates += j - i - 1;
        energies.push(e);
        mus.push(sum / (j - i) as f64);
        i = j;
    }
    if energies.len() < 2 {
        return Err(Error::Compute(format!("only {} valid energy point(s)", energies.len())));
    }

    let spectrum = Spectrum::new(EnergyGrid::new(energies)?, mus, mode, scan.meta.clone())?;
    Ok((spectrum, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{detect_columns, parse_columnar, LabelRules};

    fn run(text: &str, mode: AcquisitionMode) -> Result<(Spectrum, MuReport)> {
        let scan = parse_columnar(text).unwrap();
        let (roles, _) = detect_columns(&scan, &LabelRules::default()).unwrap();
        compute_mu(&scan, &roles, mode)
    }

    #[test]
    fn equal_intensities_give_zero() {
        let (s, _) = run("# e i0 it\n1 5 5\n2 7 7\n3 2 2\n", AcquisitionMode::Transmission).unwrap();
        assert!(s.mu().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn e_ratio_gives_one() {
        let e = std::f64::consts::E;
        let text = format!("# e i0 it\n1 {} 1\n2 {} 2\n", e, 2.0 * e);
        let (s, _) = run(&text, AcquisitionMode::Transmission).unwrap();
        for m in s.mu() {
            assert!((m - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fluorescence_channel_sum() {
        let (s, _) = run("# e i0 sdd1 sdd2\n1 4 1.2 0.8\n2 4 1.2 0.8\n", AcquisitionMode::Fluorescence).unwrap();
        assert_eq!(s.mu(), &[0.5, 0.5]);
        assert_eq!(s.mode, AcquisitionMode::Fluorescence);
    }

    #[test]
    fn unsorted_and_duplicate_energies() {
        let text = "# e i0 it\n3 2 1\n1 2 1\n2 4 1\n2 2 1\n";
        let (s, report) = run(text, AcquisitionMode::Transmission).unwrap();
        assert_eq!(s.energy(), &[1.0, 2.0, 3.0]);
        let expected_mid = 0.5 * (4f64.ln() + 2f64.ln());
        assert!((s.mu()[1] - expected_mid).abs() < 1e-15);
        assert_eq!(report.merged_duplicates, 1);
    }

    #[test]
    fn bad_rows_dropped() {
        let text = "# e i0 it\n1 2 1\n2 0 1\n3 2 -1\n4 2 1\n";
        let (s, report) = run(text, AcquisitionMode::Transmission).unwrap();
        assert_eq!(s.energy(), &[1.0, 4.0]);
        assert_eq!(report.dropped_rows, 2);
    }

    #[test]
    fn dead_monitor() {
        let text = "# e i0 it\n1 0 1\n2 0 1\n3 0 1\n4 2 1\n";
        assert!(matches!(run(text, AcquisitionMode::Transmission), Err(Error::DeadMonitor { .. })));
    }

    #[test]
    fn all_invalid() {
        let text = "# e i0 it\n1 2 -1\n2 2 -1\n";
        assert!(matches!(run(text, AcquisitionMode::Transmission), Err(Error::Compute(_))));
    }

    #[test]
    fn mode_without_columns_falls_back_to_mu() {
        let (s, report) = run("# energy mu\n1 0.1\n2 0.2\n", AcquisitionMode::Fluorescence).unwrap();
        assert!(report.used_mu_column);
        assert_eq!(s.mu(), &[0.1, 0.2]);
        assert!(run("# energy i0 it\n1 1 1\n2 1 1\n", AcquisitionMode::Fluorescence).is_err());
    }
}
