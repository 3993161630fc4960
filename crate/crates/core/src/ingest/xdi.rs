//! XDI (XAS Data Interchange) subset: version line, `Namespace.Tag: value`
//! headers, a `///` user-comment block, the `----` separator, a column label
//! line and a numeric table.

use std::collections::HashSet;

use super::columnar::{parse_columnar, tokenize, Column, RawScan};
use super::detect::{detect_columns, LabelRules};
use super::mu::compute_mu;
use crate::error::{Error, Result};
use crate::model::{AcquisitionMode, Metadata, Spectrum};

pub const WRITER_ID: &str = concat!("xaskit/", env!("CARGO_PKG_VERSION"));

/// Headers that map onto [`Metadata`] fields instead of `extra`.
const FIELD_KEYS: [&str; 5] = ["element.symbol", "element.edge", "sample.name", "beamline.name", "facility.name"];

#[derive(Debug, Clone, PartialEq)]
pub enum XdiContent {
    /// The table carried a recognised μ column.
    Spectrum(Spectrum),
    /// Detector columns (or a processed product) without a μ column.
    Raw(RawScan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct XdiDocument {
    pub version: String,
    pub content: XdiContent,
    /// The full table regardless of how `content` was resolved.
    pub table: RawScan,
    pub meta: Metadata,
    pub comments: Vec<String>,
    pub warnings: Vec<String>,
}

/// Labelled columns to be written as an XDI table.
#[derive(Debug, Clone, PartialEq)]
pub struct XdiTable {
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl XdiTable {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != columns.len() || labels.is_empty() {
            return Err(Error::params("label count must match column count"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::params("XDI columns differ in length"));
        }
        Ok(XdiTable { labels, columns })
    }

    pub fn from_spectrum(s: &Spectrum) -> Self {
        XdiTable {
            labels: vec!["energy".into(), s.mode.mu_label().into()],
            columns: vec![s.energy().to_vec(), s.mu().to_vec()],
        }
    }
}

fn field_key(key: &str) -> Option<usize> {
    let k = key.to_ascii_lowercase();
    FIELD_KEYS.iter().position(|f| *f == k)
}

fn is_column_key(key: &str) -> bool {
    key.to_ascii_lowercase().starts_with("column.")
}

/// Parse an XDI document.
pub fn parse_xdi(text: &str) -> Result<XdiDocument> {
    let mut lines = text.lines().enumerate();
    let version = match lines.next() {
        Some((_, first)) => first
            .trim()
            .strip_prefix("# XDI/")
            .or_else(|| first.trim().strip_prefix("#XDI/"))
            .ok_or_else(|| Error::Format("missing '# XDI/' version line".into()))?
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_string(),
        None => return Err(Error::Format("empty document".into())),
    };

    let mut meta = Metadata::default();
    let mut seen_keys = HashSet::new();
    let mut column_labels: Vec<(usize, String)> = Vec::new();
    let mut comments = Vec::new();
    let mut warnings = Vec::new();
    let mut label_line: Option<Vec<String>> = None;
    let mut in_comments = false;
    let mut after_separator = false;
    let mut data = String::new();

    for (idx, raw) in lines {
        let line = raw.trim();
        if !line.starts_with('#') {
            data.push_str(raw);
            data.push('\n');
            continue;
        }
        let body = line.trim_start_matches('#').trim();
        if body.starts_with("///") {
            in_comments = true;
            continue;
        }
        if body.starts_with("---") {
            after_separator = true;
            in_comments = false;
            continue;
        }
        if after_separator {
            if label_line.is_none() {
                label_line = Some(tokenize(body).map(str::to_string).collect());
            }
            continue;
        }
        if in_comments {
            comments.push(body.to_string());
            continue;
        }
        let Some((key, value)) = body.split_once(':') else {
            warnings.push(format!("line {}: header without 'Namespace.Tag:' ignored", idx + 1));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !key.contains('.') || key.starts_with('.') || key.ends_with('.') {
            warnings.push(format!("line {}: header key '{key}' has no namespace", idx + 1));
            continue;
        }
        if !seen_keys.insert(key.to_ascii_lowercase()) {
            return Err(Error::Format(format!("duplicate header tag '{key}'")));
        }
        if is_column_key(key) {
            if let (Some(n), Some(label)) = (
                key[7..].parse::<usize>().ok(),
                value.split_whitespace().next(),
            ) {
                column_labels.push((n, label.to_string()));
            }
            continue;
        }
        match field_key(key) {
            Some(0) => meta.element = value.to_string(),
            Some(1) => meta.edge = value.to_string(),
            Some(2) => meta.sample_name = value.to_string(),
            Some(3) => meta.beamline = value.to_string(),
            Some(4) => meta.facility = value.to_string(),
            _ => {
                meta.extra.insert(key.to_string(), value.to_string());
            }
        }
    }

    if meta.element.is_empty() || meta.edge.is_empty() {
        warnings.push("Element.symbol or Element.edge missing".into());
    }

    let mut table = parse_columnar(&data)?;
    let width = table.columns.len();
    column_labels.sort();
    let labels = match label_line {
        Some(l) if l.len() == width => Some(l),
        _ if column_labels.len() == width => Some(column_labels.into_iter().map(|(_, l)| l).collect()),
        _ => None,
    };
    if let Some(labels) = labels {
        let columns: Vec<Column> = labels
            .into_iter()
            .zip(std::mem::take(&mut table.columns))
            .map(|(label, c)| Column { label, values: c.values })
            .collect();
        let report = table.report.clone();
        table = RawScan::from_columns(columns, Vec::new(), Metadata::default())
            .map_err(|e| Error::Format(format!("column labels: {e}")))?;
        table.report = report;
    } else {
        warnings.push("no column label line; using positional names".into());
    }
    table.meta = meta.clone();
    table.header_lines = text.lines().take_while(|l| l.trim().starts_with('#')).map(str::to_string).collect();

    let content = resolve_content(&table, &mut warnings);
    Ok(XdiDocument { version, content, table, meta, comments, warnings })
}

fn resolve_content(table: &RawScan, warnings: &mut Vec<String>) -> XdiContent {
    let detected = detect_columns(table, &LabelRules::default());
    let Ok((roles, report)) = detected else {
        return XdiContent::Raw(table.clone());
    };
    let Some(mu_idx) = roles.mu_direct else {
        return XdiContent::Raw(table.clone());
    };
    if report.heuristic {
        return XdiContent::Raw(table.clone());
    }
    let mode = AcquisitionMode::from_mu_label(&table.columns[mu_idx].label).unwrap_or_default();
    let mu_only = super::detect::ColumnRoles {
        energy: roles.energy,
        i0: None,
        it: None,
        i_fluor: Vec::new(),
        mu_direct: Some(mu_idx),
    };
    match compute_mu(table, &mu_only, mode) {
        Ok((s, r)) => {
            if r.dropped_rows > 0 || r.merged_duplicates > 0 {
                warnings.push(format!(
                    "{} rows dropped, {} duplicate energies merged",
                    r.dropped_rows, r.merged_duplicates
                ));
            }
            XdiContent::Spectrum(s)
        }
        Err(e) => {
            warnings.push(format!("mu column present but unusable: {e}"));
            XdiContent::Raw(table.clone())
        }
    }
}

/// Format a number at 12 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

fn sanitize(s: &str) -> String {
    s.replace(['\r', '\n'], " ").trim().to_string()
}

fn sort_key(key: &str) -> (String, Option<u64>, String) {
    let (ns, tag) = key.split_once('.').unwrap_or((key, ""));
    (ns.to_string(), tag.parse().ok(), tag.to_string())
}

/// Serialize a table and its metadata as XDI text.
pub fn write_xdi(table: &XdiTable, meta: &Metadata, comments: &[String]) -> String {
    let mut fields: Vec<(String, String)> = Vec::new();
    for (i, label) in table.labels.iter().enumerate() {
        fields.push((format!("Column.{}", i + 1), label_token(label)));
    }
    let named = [
        ("Element.symbol", &meta.element),
        ("Element.edge", &meta.edge),
        ("Sample.name", &meta.sample_name),
        ("Beamline.name", &meta.beamline),
        ("Facility.name", &meta.facility),
    ];
    for (key, value) in named {
        if !value.is_empty() {
            fields.push((key.to_string(), sanitize(value)));
        }
    }
    for (key, value) in &meta.extra {
        if field_key(key).is_some() || is_column_key(key) || !key.contains('.') {
            continue;
        }
        fields.push((sanitize(key), sanitize(value)));
    }
    fields.sort_by_cached_key(|(k, _)| sort_key(k));

    let mut out = format!("# XDI/1.0 {WRITER_ID}\n");
    for (k, v) in &fields {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("# ///\n");
    for c in comments {
        out.push_str(&format!("# {}\n", sanitize(c)));
    }
    out.push_str("# ----\n");
    let labels: Vec<String> = table.labels.iter().map(|l| label_token(l)).collect();
    out.push_str(&format!("# {}\n", labels.join(" ")));

    let rows = table.columns.first().map_or(0, Vec::len);
    for r in 0..rows {
        for col in &table.columns {
            out.push_str(&format!("{:>20}", format_number(col[r])));
        }
        out.push('\n');
    }
    out
}

fn label_token(label: &str) -> String {
    let t: String = label
        .trim()
        .chars()
        .map(|c| if c.is_whitespace() || c == ',' { '_' } else { c })
        .collect();
    if t.is_empty() {
        "col".into()
    } else {
        t
    }
}

/// XDI text for a μ(E) spectrum using its own metadata.
pub fn write_spectrum_xdi(s: &Spectrum, comments: &[String]) -> String {
    write_xdi(&XdiTable::from_spectrum(s), &s.meta, comments)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "# XDI/1.0\n# Element.symbol: Cu\n# Element.edge: K\n# ----\n# energy mutrans\n8979 0.1\n8980 0.2\n";

    #[test]
    fn minimal_document() {
        let doc = parse_xdi(MINIMAL).unwrap();
        assert_eq!(doc.version, "1.0");
        assert_eq!(doc.meta.element, "Cu");
        assert_eq!(doc.meta.edge, "K");
        match doc.content {
            XdiContent::Spectrum(s) => {
                assert_eq!(s.energy(), &[8979.0, 8980.0]);
                assert_eq!(s.mode, AcquisitionMode::Transmission);
                assert_eq!(s.meta.element, "Cu");
            }
            other => panic!("expected spectrum, got {other:?}"),
        }
        assert!(doc.warnings.is_empty(), "{:?}", doc.warnings);
    }

    #[test]
    fn missing_version_line() {
        assert!(matches!(parse_xdi("# Element.symbol: Cu\n1 2\n3 4\n"), Err(Error::Format(_))));
    }

    #[test]
    fn duplicate_tag() {
        let text = "# XDI/1.0\n# Mono.d_spacing: 3.1\n# mono.d_spacing: 3.2\n# ----\n# e mu\n1 2\n3 4\n";
        match parse_xdi(text) {
            Err(Error::Format(msg)) => assert!(msg.contains("mono.d_spacing"), "{msg}"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn missing_element_is_a_warning() {
        let text = "# XDI/1.0\n# ----\n# energy mutrans\n1 2\n3 4\n";
        let doc = parse_xdi(text).unwrap();
        assert_eq!(doc.meta.element, "");
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn detector_columns_stay_raw() {
        let text = "# XDI/1.0\n# ----\n# energy i0 itrans\n1 2 1\n3 4 1\n";
        let doc = parse_xdi(text).unwrap();
        assert!(matches!(doc.content, XdiContent::Raw(_)));
    }

    #[test]
    fn column_tags_supply_labels() {
        let text = "# XDI/1.0\n# Column.1: energy eV\n# Column.2: mufluor\n# ----\n1 2\n3 4\n";
        let doc = parse_xdi(text).unwrap();
        match doc.content {
            XdiContent::Spectrum(s) => assert_eq!(s.mode, AcquisitionMode::Fluorescence),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_extra_emits_mandatory_lines_only() {
        let s = Spectrum::from_vecs(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let text = write_spectrum_xdi(&s, &[]);
        let expected = format!(
            "# XDI/1.0 {WRITER_ID}\n# Column.1: energy\n# Column.2: mutrans\n# ///\n# ----\n# energy mutrans\n{:>20}{:>20}\n{:>20}{:>20}\n",
            "1.00000000000e0", "5.00000000000e-1", "2.00000000000e0", "2.50000000000e-1"
        );
        assert_eq!(text, expected);
    }

    #[test]
    fn non_ascii_sample_name() {
        let mut s = Spectrum::from_vecs(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        s.meta.sample_name = "Kupferfolie ü – 銅".into();
        let doc = parse_xdi(&write_spectrum_xdi(&s, &[])).unwrap();
        assert_eq!(doc.meta.sample_name, "Kupferfolie ü – 銅");
    }

    #[test]
    fn round_trip_with_comments_and_extra() {
        let mut s = Spectrum::from_vecs(vec![8979.0, 8979.5, 8980.25], vec![0.1, -0.2, 1.0 / 3.0]).unwrap();
        s.meta.element = "Cu".into();
        s.meta.edge = "K".into();
        s.meta.beamline = "BL-1".into();
        s.meta.extra.insert("Mono.d_spacing".into(), "3.1356".into());
        s.meta.extra.insert("Scan.start_time".into(), "2024-01-01T00:00:00".into());
        let comments = vec!["first comment".to_string(), "second".to_string()];
        let text = write_spectrum_xdi(&s, &comments);
        let doc = parse_xdi(&text).unwrap();
        assert_eq!(doc.comments, comments);
        assert_eq!(doc.meta, s.meta);
        let XdiContent::Spectrum(back) = &doc.content else { panic!() };
        assert_eq!(back.energy(), s.energy());
        assert_eq!(back.mu()[2], format_number(1.0 / 3.0).parse::<f64>().unwrap());
        assert_eq!(write_spectrum_xdi(back, &doc.comments), text);
    }

    #[test]
    fn headers_sorted_by_namespace_then_tag() {
        let mut meta = Metadata::default();
        meta.extra.insert("Scan.b".into(), "1".into());
        meta.extra.insert("Mono.z".into(), "2".into());
        meta.extra.insert("Scan.a".into(), "3".into());
        let t = XdiTable::new(vec!["e".into(), "mu".into()], vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let text = write_xdi(&t, &meta, &[]);
        let keys: Vec<&str> = text
            .lines()
            .filter_map(|l| l.strip_prefix("# ").and_then(|b| b.split_once(':')).map(|(k, _)| k))
            .collect();
        assert_eq!(keys, vec!["Column.1", "Column.2", "Mono.z", "Scan.a", "Scan.b"]);
    }
}
