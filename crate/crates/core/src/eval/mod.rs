//! Week-windowed R², offline and prequential test passes, the PS1/PS2/PS3
//! scenario matrix, and CSV reports.

mod r2;
mod report;
mod runner;
mod scenario;

pub use r2::{r2_weekly, r2_windowed, PredictionTrace, R2Series, R2Summary};
pub use report::{
    export_report, read_trace_csv, trace_file_name, write_summary_csv, write_trace_csv,
    ExportedFiles, SUMMARY_FILE, SUMMARY_HEADER, TRACE_HEADER,
};
pub use runner::{run_offline, run_online};
pub use scenario::{
    run_scenarios, run_scenarios_with, Scenario, ScenarioConfig, ScenarioEvent, ScenarioId,
    ScenarioReport, Setting, SCRATCH_LABEL,
};
