//! End-to-end reduction of a single file, its configuration, exports and
//! report.

mod analysis;
mod config;
mod export;
mod process;
mod report;

pub use analysis::{
    Analysis, BackgroundStage, ChiStage, E0Candidate, E0Stage, FtStage, MuStage, RefinementSummary, Source,
};
pub use config::{
    BackgroundConfig, ChiConfig, E0Config, Engine, ExportConfig, ExportFormat, IngestConfig, PipelineConfig,
    PreEdgeConfig,
};
pub use export::{write_columnar, Product};
pub use process::{artifact_stem, process_bytes, Artifact};
pub use report::{FtSummary, Knot, NormalizationSummary, PreEdgeSummary, ProcessingReport};
