use std::path::Path;

use super::analysis::Analysis;
use super::config::PipelineConfig;
use super::export::Product;
use super::report::ProcessingReport;
use crate::error::Result;

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// File stem used to name a source's artifacts.
pub fn artifact_stem(name: &str) -> String {
    let p = Path::new(name);
    p.file_stem().or(p.file_name()).map_or_else(|| "spectrum".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Full reduction of one file: processed products in the configured format
/// plus a JSON report.
pub fn process_bytes(
    name: &str,
    bytes: Vec<u8>,
    config: &PipelineConfig,
) -> Result<(Vec<Artifact>, ProcessingReport)> {
    let mut analysis = Analysis::load(name, bytes, config.clone())?;
    let report = analysis.report()?;
    let stem = artifact_stem(name);
    let format = config.export.format;
    let mut artifacts = Vec::new();
    for product in Product::PROCESSED {
        artifacts.push(Artifact {
            name: format!("{stem}.{product}.{}", format.extension()),
            bytes: analysis.export(product, format)?,
        });
    }
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    artifacts.push(Artifact { name: format!("{stem}.report.json"), bytes: json });
    Ok((artifacts, report))
}
