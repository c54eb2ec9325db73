//! Case configuration, mesh studies, oracles and output files.

pub mod config;
pub mod oracle;
pub mod output;
pub mod study;

pub use config::{CaseConfig, CaseId, OUT_DIR_ENV};
pub use oracle::{dense_oracle, fd_oracle, membrane_line_load_variants, DenseCheck, FdOracle};
pub use output::{emit_outputs, parse_csv, OutputFormat};
pub use study::{fit_rate, run_case, RateFit, StudyResult, StudyRow};
