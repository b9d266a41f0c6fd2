//! Case files, report emitters and (with the `cli` feature) the `qpf`
//! command-line driver.

mod case_file;
mod matpower;
mod report;

#[cfg(feature = "cli")]
mod app;

pub use case_file::{
    emit_case, load_case, parse_case, CaseDocument, CaseError, CaseFormat, ParsedCase, UncertaintyBlock,
    UncertaintyEntry, SCHEMA_VERSION,
};
pub use report::{
    emit_report, format_g15, monte_carlo_samples_csv, parse_run_output, AngleUnit, MonteCarloSummary, ReportFormat,
    RunOutput,
};

#[cfg(feature = "cli")]
pub use app::{run, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK};
