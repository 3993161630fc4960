//! Command line front end and HTTP serve mode for the xaskit pipeline.

pub mod cli;
pub mod compare;
pub mod serve;

pub use cli::{cmd_process, BatchReport, Cli, Command, ConfigArgs, FileOutcome};
pub use compare::{compare_texts, CompareReport, CompareStage};
pub use serve::{router, AppState};

/// Every file succeeded.
pub const EXIT_OK: i32 = 0;
/// At least one file failed, or a comparison was out of tolerance.
pub const EXIT_FAILED: i32 = 1;
/// Bad invocation: unreadable config, invalid flags.
pub const EXIT_USAGE: i32 = 2;
