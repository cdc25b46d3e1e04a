//! Partitioned fixed-priority preemptive scheduling with self-suspensions,
//! execution-time variation, shared resources, and optional inter-release
//! separation enforcement.
//!
//! The engine's tie-break for simultaneous events is documented on
//! [`engine`]; everything downstream (trace export, the reproduction
//! scenarios, the acceptance suite) relies on it being stable.

pub mod busy;
pub mod chunks;
pub mod engine;
pub mod event;
pub mod trace;

pub use busy::{BusyTracker, Span};
pub use chunks::{job_chunks, ChunkKind, ChunkPlan, Gate};
pub use engine::{simulate, SimulationError};
pub use event::{Event, EventKind};
pub use trace::{
    ChunkClass, ChunkRecord, EligibilityRecord, JobOutcome, LockInterval, ScheduleTrace,
    WaitInterval, WaitKind,
};
