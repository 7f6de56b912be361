//! The ten lifecycle gaps as injectable toggles, their remediations, and
//! the wiring that applies them.

pub mod assemble;
pub mod catalog;
pub mod config;
pub mod report;

pub use assemble::{assemble, AssembledConfig, CallGraphConfig, GapStatus, ScaleLimit};
pub use catalog::{Challenge, GapId, IssueType, Phase};
pub use config::{Fix, GapConfig, RemediationSet, Toggle};
pub use report::{issue_matrix, render_csv, render_text};
