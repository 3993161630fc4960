use serde::{Deserialize, Serialize};

use super::columnar::{fold_label, RawScan};
use crate::error::{Error, Result};
use crate::model::AcquisitionMode;

/// Label patterns per column role. A pattern ending in `*` matches any label
/// with that prefix; everything else is an exact, case-insensitive match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelRules {
    pub energy: Vec<String>,
    pub i0: Vec<String>,
    pub it: Vec<String>,
    pub mu: Vec<String>,
    pub fluorescence: Vec<String>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for LabelRules {
    fn default() -> Self {
        LabelRules {
            energy: strings(&[
                "energy",
                "e",
                "mono_energy",
                "energy (ev)",
                "energy(ev)",
                "energy_ev",
                "ev",
                "enc",
                "energy*",
            ]),
            i0: strings(&["i0", "io", "mon", "monitor", "i0*"]),
            it: strings(&["it", "i1", "trans", "itrans"]),
            mu: strings(&["mu", "mutrans", "mufluor", "mutey", "xmu", "norm", "mu*"]),
            fluorescence: strings(&["if", "ifluor", "sdd*", "fl*", "mca*", "tey*"]),
        }
    }
}

impl LabelRules {
    /// Parse a rules table from TOML. Missing roles keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::params(format!("label rules: {e}")))
    }
}

fn matches(pattern: &str, label: &str) -> bool {
    let pattern = fold_label(pattern);
    match pattern.strip_suffix('*') {
        Some(prefix) => label.starts_with(prefix),
        None => label == pattern,
    }
}

fn first_rule<'a>(rules: &'a [String], label: &str) -> Option<&'a str> {
    rules.iter().find(|p| matches(p, label)).map(String::as_str)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Energy,
    I0,
    It,
    Fluorescence,
    Mu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMatch {
    pub role: Role,
    pub column: usize,
    pub label: String,
    /// Matching pattern, or `"heuristic"` for fallback assignments.
    pub rule: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub matches: Vec<RoleMatch>,
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub energy: usize,
    pub i0: Option<usize>,
    pub it: Option<usize>,
    #[serde(default)]
    pub i_fluor: Vec<usize>,
    pub mu_direct: Option<usize>,
}

impl ColumnRoles {
    pub fn validate(&self, n_columns: usize) -> Result<()> {
        let all = std::iter::once(self.energy)
            .chain(self.i0)
            .chain(self.it)
            .chain(self.i_fluor.iter().copied())
            .chain(self.mu_direct);
        for idx in all {
            if idx >= n_columns {
                return Err(Error::Detection(format!("column index {idx} out of range ({n_columns} columns)")));
            }
        }
        if !self.has_signal() {
            return Err(Error::Detection(
                "need i0 with it, i0 with fluorescence channels, or a mu column".into(),
            ));
        }
        Ok(())
    }

    fn has_signal(&self) -> bool {
        (self.i0.is_some() && self.it.is_some())
            || (self.i0.is_some() && !self.i_fluor.is_empty())
            || self.mu_direct.is_some()
    }

    /// Acquisition mode implied by the available columns.
    pub fn suggested_mode(&self) -> AcquisitionMode {
        if self.i0.is_some() && self.it.is_some() {
            AcquisitionMode::Transmission
        } else if self.i0.is_some() && !self.i_fluor.is_empty() {
            AcquisitionMode::Fluorescence
        } else {
            AcquisitionMode::Transmission
        }
    }
}

fn strictly_monotonic(values: &[f64]) -> bool {
    values.len() >= 2
        && (values.windows(2).all(|w| w[1] > w[0]) || values.windows(2).all(|w| w[1] < w[0]))
}

/// Assign column roles by label rules, falling back to a positional
/// heuristic when labels are not recognised.
pub fn detect_columns(scan: &RawScan, rules: &LabelRules) -> Result<(ColumnRoles, DetectionReport)> {
    let mut report = DetectionReport::default();
    let mut energy = None;
    let mut i0 = None;
    let mut it = None;
    let mut mu = None;
    let mut fluor = Vec::new();

    let record = |role, column: usize, rule: &str, report: &mut DetectionReport| {
        report.matches.push(RoleMatch {
            role,
            column,
            label: scan.columns[column].label.clone(),
            rule: rule.to_string(),
        });
    };

    for (idx, col) in scan.columns.iter().enumerate() {
        let label = fold_label(&col.label);
        if energy.is_none() {
            if let Some(rule) = first_rule(&rules.energy, &label) {
                energy = Some(idx);
                record(Role::Energy, idx, rule, &mut report);
                continue;
            }
        }
        if i0.is_none() {
            if let Some(rule) = first_rule(&rules.i0, &label) {
                i0 = Some(idx);
                record(Role::I0, idx, rule, &mut report);
                continue;
            }
        }
        if it.is_none() {
            if let Some(rule) = first_rule(&rules.it, &label) {
                it = Some(idx);
                record(Role::It, idx, rule, &mut report);
                continue;
            }
        }
        if mu.is_none() {
            if let Some(rule) = first_rule(&rules.mu, &label) {
                mu = Some(idx);
                record(Role::Mu, idx, rule, &mut report);
                continue;
            }
        }
        if let Some(rule) = first_rule(&rules.fluorescence, &label) {
            fluor.push(idx);
            record(Role::Fluorescence, idx, rule, &mut report);
        }
    }

    let energy = match energy {
        Some(e) => e,
        None => {
            let taken: Vec<usize> = report.matches.iter().map(|m| m.column).collect();
            let idx = scan
                .columns
                .iter()
                .enumerate()
                .position(|(i, c)| !taken.contains(&i) && strictly_monotonic(&c.values))
                .ok_or_else(|| Error::Detection("no energy axis".into()))?;
            report.heuristic = true;
            record(Role::Energy, idx, "heuristic", &mut report);
            idx
        }
    };

    let mut roles = ColumnRoles { energy, i0, it, i_fluor: fluor, mu_direct: mu };
    if !roles.has_signal() {
        // positional fallback over the unassigned columns
        let assigned: Vec<usize> = report.matches.iter().map(|m| m.column).collect();
        let free: Vec<usize> = (0..scan.columns.len()).filter(|i| !assigned.contains(i)).collect();
        report.heuristic = true;
        match (roles.i0, free.as_slice()) {
            (Some(_), [next, ..]) => {
                roles.it = Some(*next);
                record(Role::It, *next, "heuristic", &mut report);
            }
            (None, [only]) => {
                roles.mu_direct = Some(*only);
                record(Role::Mu, *only, "heuristic", &mut report);
            }
            (None, [first, second, ..]) => {
                roles.i0 = Some(*first);
                roles.it = Some(*second);
                record(Role::I0, *first, "heuristic", &mut report);
                record(Role::It, *second, "heuristic", &mut report);
            }
            _ => return Err(Error::Detection("no intensity columns".into())),
        }
    }
    roles.validate(scan.columns.len())?;
    Ok((roles, report))
}
