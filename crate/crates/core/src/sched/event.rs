//! Trace events.
//!
//! The simulator emits one event per observable state change, in
//! nondecreasing time order. Ties at one instant are resolved by a fixed
//! key: (time, phase rank of the event kind, processor, priority), which is
//! exactly the order the engine processes transitions in — completions
//! before releases, releases before arrivals, arrivals before dispatch
//! decisions; within a class, higher-priority (lower-numbered) work first.

use crate::model::{ProcessorId, Ratio};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SegmentComplete,
    JobComplete,
    LockRelease,
    JobRelease,
    SuspendBegin,
    SegmentArrival,
    LockRequest,
    LockGrant,
    SegmentEligible,
    DeadlineMiss,
    Dispatch,
    Preempt,
    ProcessorIdle,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::SegmentComplete => "segment_complete",
            EventKind::JobComplete => "job_complete",
            EventKind::LockRelease => "lock_release",
            EventKind::JobRelease => "job_release",
            EventKind::SuspendBegin => "suspend_begin",
            EventKind::SegmentArrival => "segment_arrival",
            EventKind::LockRequest => "lock_request",
            EventKind::LockGrant => "lock_grant",
            EventKind::SegmentEligible => "segment_eligible",
            EventKind::DeadlineMiss => "deadline_miss",
            EventKind::Dispatch => "dispatch",
            EventKind::Preempt => "preempt",
            EventKind::ProcessorIdle => "processor_idle",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One trace record. `seg` is the 1-based chunk ordinal within the job
/// (critical-section and remote chunks count); `detail` carries
/// kind-specific annotations as `key=value` pairs in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: Ratio,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processor: Option<ProcessorId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seg: Option<u32>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Event {
    pub fn is(&self, kind: EventKind, task: &str, job: u32) -> bool {
        self.kind == kind && self.task.as_deref() == Some(task) && self.job == Some(job)
    }
}
