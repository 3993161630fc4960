use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Metadata;

const COMMENT_CHARS: [char; 3] = ['#', ';', '%'];

/// Fraction of numeric rows allowed to disagree with the dominant column count.
const MAX_RAGGED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub data_rows: usize,
    /// Non-comment lines that did not parse as numbers.
    pub skipped_text_rows: usize,
    /// Numeric rows whose column count disagreed with the table.
    pub dropped_ragged_rows: Vec<usize>,
    pub labels_from_header: bool,
}

/// A parsed columnar file before any physics is applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawScan {
    pub columns: Vec<Column>,
    pub header_lines: Vec<String>,
    pub meta: Metadata,
    pub report: ParseReport,
}

impl RawScan {
    /// Build from already-separated columns, validating shape and labels.
    pub fn from_columns(columns: Vec<Column>, header_lines: Vec<String>, meta: Metadata) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.values.len());
        if columns.is_empty() || n < 2 {
            return Err(Error::Size { needed: 2, got: n });
        }
        if columns.iter().any(|c| c.values.len() != n) {
            return Err(Error::params("columns differ in length"));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(fold_label(&c.label)) {
                return Err(Error::params(format!("duplicate column label '{}'", c.label)));
            }
        }
        let report = ParseReport { data_rows: n, ..ParseReport::default() };
        Ok(RawScan { columns, header_lines, meta, report })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn labels(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn column(&self, idx: usize) -> Option<&[f64]> {
        self.columns.get(idx).map(|c| c.values.as_slice())
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        let want = fold_label(label);
        self.columns.iter().position(|c| fold_label(&c.label) == want)
    }
}

pub(crate) fn fold_label(label: &str) -> String {
    label.trim().to_lowercase()
}

pub(crate) fn tokenize(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

fn parse_number(token: &str) -> Option<f64> {
    let v = match token.parse::<f64>() {
        Ok(v) => v,
        // Fortran-style exponents: 1.0D+03
        Err(_) if token.contains(['d', 'D']) => token.replace(['d', 'D'], "e").parse::<f64>().ok()?,
        Err(_) => return None,
    };
    v.is_finite().then_some(v)
}

fn parse_row(line: &str) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for tok in tokenize(line) {
        out.push(parse_number(tok)?);
    }
    (!out.is_empty()).then_some(out)
}

/// Text after the leading comment characters.
pub(crate) fn strip_comment(line: &str) -> &str {
    line.trim_start().trim_start_matches(COMMENT_CHARS).trim()
}

/// Parse a whitespace- or comma-separated numeric table.
///
/// Lines starting with `#`, `;` or `%` are headers. The last header (or
/// leading text) line whose token count matches the table width supplies the
/// column labels; otherwise columns are named `col0`, `col1`, …
pub fn parse_columnar(text: &str) -> Result<RawScan> {
    if text.trim().is_empty() {
        return Err(Error::Parse { message: "empty input".into(), lines: vec![] });
    }

    let mut header_lines = Vec::new();
    let mut label_candidates: Vec<Vec<String>> = Vec::new();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut skipped_text_rows = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(COMMENT_CHARS) {
            header_lines.push(line.to_string());
            if rows.is_empty() {
                label_candidates.push(tokenize(strip_comment(line)).map(str::to_string).collect());
            }
            continue;
        }
        match parse_row(line) {
            Some(values) => rows.push((idx + 1, values)),
            None => {
                skipped_text_rows += 1;
                if rows.is_empty() {
                    label_candidates.push(tokenize(line).map(str::to_string).collect());
                }
            }
        }
    }

    if rows.len() < 2 {
        return Err(Error::Parse {
            message: format!("found {} numeric rows, need at least 2", rows.len()),
            lines: vec![],
        });
    }

    // dominant width; ties go to the wider table
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, r) in &rows {
        *counts.entry(r.len()).or_default() += 1;
    }
    let width = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(w, _)| *w)
        .unwrap_or(0);

    let ragged: Vec<usize> = rows.iter().filter(|(_, r)| r.len() != width).map(|(l, _)| *l).collect();
    if ragged.len() as f64 > MAX_RAGGED_FRACTION * rows.len() as f64 {
        return Err(Error::Parse {
            message: format!(
                "{} of {} numeric rows have a column count other than {width}",
                ragged.len(),
                rows.len()
            ),
            lines: ragged,
        });
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); width];
    for (_, r) in rows.iter().filter(|(_, r)| r.len() == width) {
        for (c, v) in columns.iter_mut().zip(r) {
            c.push(*v);
        }
    }
    let data_rows = columns[0].len();
    if data_rows < 2 {
        return Err(Error::Parse { message: "fewer than 2 consistent rows".into(), lines: ragged });
    }

    let header_labels = label_candidates.into_iter().rev().find(|c| c.len() == width);
    let labels_from_header = header_labels.is_some();
    let labels = unique_labels(header_labels.unwrap_or_else(|| (0..width).map(|i| format!("col{i}")).collect()));

    Ok(RawScan {
        columns: labels
            .into_iter()
            .zip(columns)
            .map(|(label, values)| Column { label, values })
            .collect(),
        header_lines,
        meta: Metadata::default(),
        report: ParseReport {
            data_rows,
            skipped_text_rows,
            dropped_ragged_rows: ragged,
            labels_from_header,
        },
    })
}

/// Lossy UTF-8 decode followed by [`parse_columnar`]. Never panics.
pub fn parse_columnar_bytes(bytes: &[u8]) -> Result<RawScan> {
    parse_columnar(&String::from_utf8_lossy(bytes))
}

fn unique_labels(labels: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    labels
        .into_iter()
        .map(|l| {
            let base = l.trim().to_string();
            let mut candidate = base.clone();
            let mut n = 2;
            while !seen.insert(fold_label(&candidate)) {
                candidate = format!("{base}_{n}");
                n += 1;
            }
            candidate
        })
        .collect()
}
