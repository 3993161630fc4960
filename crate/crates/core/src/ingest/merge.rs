use crate::error::{Error, Result};
use crate::model::{interp_one, Spectrum};

const MIN_OVERLAP: f64 = 0.5;

/// Average several scans of the same sample on the grid of the first.
///
/// Each point is the mean over the scans that cover that energy. Scans must
/// share element and edge, and each pair (first, other) must overlap over at
/// least half of the longer energy range.
pub fn merge_scans(spectra: &[Spectrum]) -> Result<Spectrum> {
    let first = spectra.first().ok_or_else(|| Error::Merge("no spectra to merge".into()))?;
    if spectra.len() == 1 {
        return Ok(first.clone());
    }

    let (lo0, hi0) = (first.grid().first(), first.grid().last());
    for (i, s) in spectra.iter().enumerate().skip(1) {
        if s.meta.element != first.meta.element || s.meta.edge != first.meta.edge {
            return Err(Error::Merge(format!(
                "scan {i} is {} {}, expected {} {}",
                s.meta.element, s.meta.edge, first.meta.element, first.meta.edge
            )));
        }
        let (lo, hi) = (s.grid().first(), s.grid().last());
        let overlap = (hi.min(hi0) - lo.max(lo0)).max(0.0);
        let longest = (hi - lo).max(hi0 - lo0);
        if overlap < MIN_OVERLAP * longest {
            return Err(Error::Merge(format!(
                "scan {i} overlaps the reference by {:.0}%",
                100.0 * overlap / longest
            )));
        }
    }

    let mu: Vec<f64> = first
        .energy()
        .iter()
        .zip(first.mu())
        .map(|(&e, &m0)| {
            let mut sum = m0;
            let mut count = 1usize;
            for s in &spectra[1..] {
                if (s.grid().first()..=s.grid().last()).contains(&e) {
                    sum += interp_one(s.energy(), s.mu(), e);
                    count += 1;
                }
            }
            sum / count as f64
        })
        .collect();

    let mut meta = first.meta.clone();
    meta.extra.insert("Xaskit.merged_count".into(), spectra.len().to_string());
    Spectrum::new(first.grid().clone(), mu, first.mode, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(energy: Vec<f64>, mu: Vec<f64>) -> Spectrum {
        Spectrum::from_vecs(energy, mu).unwrap()
    }

    #[test]
    fn single_is_identity() {
        let s = spec(vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.4]);
        assert_eq!(merge_scans(std::slice::from_ref(&s)).unwrap(), s);
    }

    #[test]
    fn identical_scans_keep_values() {
        let s = spec(vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.4]);
        let m = merge_scans(&[s.clone(), s.clone()]).unwrap();
        assert_eq!(m.mu(), s.mu());
        assert_eq!(m.meta.extra["Xaskit.merged_count"], "2");
    }

    #[test]
    fn mean_of_mu_and_three_mu() {
        let e: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let mu: Vec<f64> = e.iter().map(|x| 0.01 * x).collect();
        let a = spec(e.clone(), mu.clone());
        // b on a shifted half-step grid, still linear so interpolation is exact
        let eb: Vec<f64> = (0..20).map(|i| 99.5 + i as f64).collect();
        let b = spec(eb.clone(), eb.iter().map(|x| 0.03 * x).collect());
        let m = merge_scans(&[a, b]).unwrap();
        for (i, (&x, &v)) in e.iter().zip(m.mu()).enumerate() {
            if x <= 118.5 {
                assert!((v - 0.02 * x).abs() < 1e-12, "point {i}");
            }
        }
    }

    #[test]
    fn insufficient_overlap() {
        let a = spec(vec![0.0, 10.0], vec![1.0, 1.0]);
        let b = spec(vec![8.0, 18.0], vec![1.0, 1.0]);
        assert!(matches!(merge_scans(&[a, b]), Err(Error::Merge(_))));
    }

    #[test]
    fn element_mismatch() {
        let a = spec(vec![0.0, 10.0], vec![1.0, 1.0]);
        let mut b = a.clone();
        b.meta.element = "Fe".into();
        assert!(merge_scans(&[a, b]).is_err());
        assert!(merge_scans(&[]).is_err());
    }
}
