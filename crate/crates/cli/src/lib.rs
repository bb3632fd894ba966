//! Command-line workbench: experiment configs, run reports, suites and certificate checks.

pub mod certificate;
pub mod config;
pub mod run;
pub mod suite;

pub use certificate::{parse_record, verify_record, CertificateRecord, TraceRecord};
pub use config::{ExperimentConfig, Format, Operation, CONFIG_VERSION};
pub use run::{payload, run, write_report, RunReport, EXIT_ERROR};
pub use suite::{run_suite, SuiteName, SuiteReport};
