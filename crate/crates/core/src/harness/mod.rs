//! Scenario loading, experiment execution and trace output.

mod experiment;
mod scenario;
mod stability;
mod trace;

pub use experiment::{
    run_experiment, run_experiment_with_table, Experiment, RunError, SchedulerDecision,
};
pub use scenario::{
    parse_scenario, Axis, ExecSegment, NoiseConfig, ScenarioConfig, ScenarioError, SchedulerConfig,
    TaskConfig, DEFAULT_H_MAX, DEFAULT_H_MIN, DEFAULT_SEED, SCHEDULER_TASK_NAME,
};
pub use stability::{assess_stability, Stability, ERROR_BOUND_M, GROWTH_BINS};
pub use trace::{
    csv_header, emit_traces, read_trace_csv, summarize, trace_to_csv_string, write_trace_csv,
    RunSummary, Trace, TraceError, TraceRecord,
};
