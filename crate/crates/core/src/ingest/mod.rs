//! Beamline file ingestion: columnar text, XDI, column-role detection and
//! μ(E) construction.

mod columnar;
mod detect;
mod merge;
mod mu;
pub mod xdi;

pub use columnar::{parse_columnar, parse_columnar_bytes, Column, ParseReport, RawScan};
pub use detect::{detect_columns, ColumnRoles, DetectionReport, LabelRules, Role, RoleMatch};
pub use merge::merge_scans;
pub use mu::{compute_mu, MuReport};
pub use xdi::{format_number, parse_xdi, write_spectrum_xdi, write_xdi, XdiContent, XdiDocument, XdiTable, WRITER_ID};

/// True when the text starts with an XDI version line.
pub fn looks_like_xdi(text: &str) -> bool {
    let first = text.trim_start_matches('\u{feff}').lines().next().unwrap_or("").trim();
    first.starts_with("# XDI/") || first.starts_with("#XDI/")
}
