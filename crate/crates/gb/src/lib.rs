//! Command-line companion of `gb-core`: system files, JSON and CSV reports,
//! parallel scans and the `gb` binary.

pub mod checks;
pub mod cli;
pub mod error;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod system;
