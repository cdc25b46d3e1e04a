//! Data model: exact rational time, tasks, behaviors, and configuration.

pub mod task;
pub mod time;

pub use task::{
    expand_arrivals, validate_scenario, validate_taskset, ArrivalKind, Enforcement, Issue, JobBehavior,
    LockSemantics, ModelError, ProcessorId, QueuePolicy, ResourceRequest, Scenario, Segment, SystemConfig,
    TaskSpec, ValidationReport,
};
pub use time::{r, ri, ParseRatioError, Ratio};
