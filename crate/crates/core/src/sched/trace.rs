//! Simulation output: events plus derived, queryable records.
//!
//! The event list is the primary log (and the only thing the text exporter
//! serializes); the other collections — execution spans, chunk records, job
//! outcomes, wait intervals, lock intervals — are assembled by the engine
//! alongside the events so that assertions, invariant checks, and the Gantt
//! renderer don't have to reverse-engineer state machines from event
//! parsing.

use super::busy::Span;
use super::event::{Event, EventKind};
use crate::enforcer::EligibilityDecision;
use crate::model::{ProcessorId, Ratio};
use std::collections::BTreeMap;

/// How a chunk executes and interacts with locks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkClass {
    /// Plain computation on the task's processor.
    Compute,
    /// Computation beginning with a locally executed critical section.
    CsPrefix,
    /// A locally executed critical-section chunk exempt from enforcement.
    CsExempt,
    /// A critical section serviced remotely on the sync processor.
    CsRemote,
}

impl ChunkClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChunkClass::Compute => "compute",
            ChunkClass::CsPrefix => "cs_prefix",
            ChunkClass::CsExempt => "cs_exempt",
            ChunkClass::CsRemote => "cs_remote",
        }
    }
}

/// Lifecycle summary of one chunk (1-based `seg` ordinal within its job).
#[derive(Debug, Clone)]
pub struct ChunkRecord {
    pub task: String,
    pub job: u32,
    pub seg: u32,
    pub class: ChunkClass,
    /// Index in the enforcement recurrence, when this chunk is subject to it.
    pub et_index: Option<u32>,
    /// Processor the chunk executes on (the sync processor for remote CSs).
    pub processor: ProcessorId,
    pub priority: i64,
    pub len: Ratio,
    pub executed: Ratio,
    pub arrival: Option<Ratio>,
    /// Instant from which the chunk may be dispatched.
    pub eligible: Option<Ratio>,
    pub first_dispatch: Option<Ratio>,
    pub completion: Option<Ratio>,
}

/// Outcome of one job.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub task: String,
    pub job: u32,
    pub release: Ratio,
    pub deadline: Ratio,
    pub completion: Option<Ratio>,
    pub response: Option<Ratio>,
    pub missed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitKind {
    /// Self-suspension (including waiting for a remote critical section).
    Suspended,
    /// Waiting in a resource queue.
    Blocked,
    /// Arrived (or requested) but held back by enforcement.
    EnforcerDelay,
}

/// A non-execution interval of a job, for rendering.
#[derive(Debug, Clone)]
pub struct WaitInterval {
    pub task: String,
    pub job: u32,
    pub kind: WaitKind,
    pub start: Ratio,
    pub end: Ratio,
}

/// One granted resource holding, `[grant, release)`.
#[derive(Debug, Clone)]
pub struct LockInterval {
    pub resource: String,
    pub task: String,
    pub job: u32,
    pub grant: Ratio,
    pub release: Option<Ratio>,
}

/// One recorded eligibility decision.
#[derive(Debug, Clone, Copy)]
pub struct EligibilityRecord {
    pub arrival: Ratio,
    pub decision: EligibilityDecision,
}

#[derive(Debug, Clone)]
pub struct ScheduleTrace {
    pub scenario: String,
    pub horizon: Ratio,
    /// Application processors in configuration order.
    pub processors: Vec<ProcessorId>,
    pub sync_processor: Option<ProcessorId>,
    pub events: Vec<Event>,
    pub spans: BTreeMap<ProcessorId, Vec<Span>>,
    pub chunks: Vec<ChunkRecord>,
    pub jobs: Vec<JobOutcome>,
    pub waits: Vec<WaitInterval>,
    pub locks: Vec<LockInterval>,
    /// Eligibility decisions keyed by (task, job, enforcement index).
    pub eligibility: BTreeMap<(String, u32, u32), EligibilityRecord>,
}

impl ScheduleTrace {
    /// Deadline misses as (task, job, instant).
    pub fn misses(&self) -> Vec<(String, u32, Ratio)> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::DeadlineMiss)
            .map(|e| (e.task.clone().unwrap_or_default(), e.job.unwrap_or(0), e.time))
            .collect()
    }

    /// Largest response time among *completed* jobs of `task`.
    pub fn max_response(&self, task: &str) -> Option<Ratio> {
        self.jobs.iter().filter(|j| j.task == task).filter_map(|j| j.response).max()
    }

    pub fn job(&self, task: &str, job: u32) -> Option<&JobOutcome> {
        self.jobs.iter().find(|j| j.task == task && j.job == job)
    }

    /// The recorded eligibility time for segment `k` of `job` of `task`.
    pub fn eligibility_of(&self, task: &str, job: u32, k: u32) -> Option<Ratio> {
        self.eligibility.get(&(task.to_string(), job, k)).map(|r| r.decision.eligibility)
    }

    /// First dispatch instant of chunk `seg` (1-based ordinal) of a job.
    pub fn first_dispatch(&self, task: &str, job: u32, seg: u32) -> Option<Ratio> {
        self.chunk(task, job, seg).and_then(|c| c.first_dispatch)
    }

    pub fn chunk(&self, task: &str, job: u32, seg: u32) -> Option<&ChunkRecord> {
        self.chunks.iter().find(|c| c.task == task && c.job == job && c.seg == seg)
    }

    /// Grant instants for a given task's job, in time order.
    pub fn grants_for(&self, task: &str, job: u32) -> Vec<Ratio> {
        self.locks.iter().filter(|l| l.task == task && l.job == job).map(|l| l.grant).collect()
    }

    /// True when some chunk executes on `proc` at instant `t` (i.e. a span
    /// covers an open neighborhood of `t` or starts there).
    pub fn executing_at(&self, proc: ProcessorId, t: Ratio) -> bool {
        self.spans
            .get(&proc)
            .is_some_and(|spans| spans.iter().any(|s| s.start <= t && t < s.end))
    }

    /// True when the union of execution spans on `proc` covers `[from, to)`
    /// without gaps.
    pub fn busy_throughout(&self, proc: ProcessorId, from: Ratio, to: Ratio) -> bool {
        let Some(spans) = self.spans.get(&proc) else { return from >= to };
        let mut cursor = from;
        for span in spans {
            if span.end <= cursor {
                continue;
            }
            if span.start > cursor {
                return false;
            }
            cursor = span.end;
            if cursor >= to {
                return true;
            }
        }
        cursor >= to
    }

    /// Checks structural schedule invariants and returns one description per
    /// violation (empty = clean):
    ///
    /// * spans on one processor never overlap;
    /// * mutual exclusion: holders of one resource never overlap;
    /// * conservation: a completed chunk executed exactly its scripted cost;
    /// * segment order: a job's chunk `k+1` never arrives before chunk `k`
    ///   completes;
    /// * priority compliance: while a chunk executes, no higher-priority
    ///   chunk on the same processor is arrived, eligible, and incomplete.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut violations = Vec::new();

        for (proc, spans) in &self.spans {
            for pair in spans.windows(2) {
                if pair[1].start < pair[0].end {
                    violations.push(format!(
                        "processor {proc}: overlapping spans [{}, {}) and [{}, {})",
                        pair[0].start, pair[0].end, pair[1].start, pair[1].end
                    ));
                }
            }
        }

        let mut by_resource: BTreeMap<&str, Vec<&LockInterval>> = BTreeMap::new();
        for lock in &self.locks {
            by_resource.entry(&lock.resource).or_default().push(lock);
        }
        for (resource, mut holds) in by_resource {
            holds.sort_by_key(|l| l.grant);
            for pair in holds.windows(2) {
                let end = pair[0].release.unwrap_or(self.horizon);
                if pair[1].grant < end {
                    violations.push(format!(
                        "resource {resource}: grant to {}.{} at {} overlaps holding by {}.{} until {}",
                        pair[1].task, pair[1].job, pair[1].grant, pair[0].task, pair[0].job, end
                    ));
                }
            }
        }

        for chunk in &self.chunks {
            if chunk.completion.is_some() && chunk.executed != chunk.len {
                violations.push(format!(
                    "chunk {}.{}.{}: completed with {} executed of {} scripted",
                    chunk.task, chunk.job, chunk.seg, chunk.executed, chunk.len
                ));
            }
        }

        let mut per_job: BTreeMap<(&str, u32), Vec<&ChunkRecord>> = BTreeMap::new();
        for chunk in &self.chunks {
            per_job.entry((&chunk.task, chunk.job)).or_default().push(chunk);
        }
        for ((task, job), mut chunks) in per_job {
            chunks.sort_by_key(|c| c.seg);
            for pair in chunks.windows(2) {
                if let (Some(arrival), completion) = (pair[1].arrival, pair[0].completion) {
                    let completion = completion.unwrap_or(self.horizon);
                    if arrival < completion {
                        violations.push(format!(
                            "job {task}.{job}: chunk {} arrived at {} before chunk {} completed at {}",
                            pair[1].seg, arrival, pair[0].seg, completion
                        ));
                    }
                }
            }
        }

        // Priority compliance, from spans against chunk ready windows.
        for (proc, spans) in &self.spans {
            if Some(*proc) == self.sync_processor {
                continue; // the sync processor is non-preemptive by design
            }
            for span in spans {
                for other in &self.chunks {
                    if other.processor != *proc
                        || other.task == span.task
                        || other.priority >= span.priority
                    {
                        continue;
                    }
                    let (Some(arrival), Some(eligible)) = (other.arrival, other.eligible) else {
                        continue;
                    };
                    let ready_from = arrival.max(eligible);
                    let ready_to = other.completion.unwrap_or(self.horizon);
                    let lo = ready_from.max(span.start);
                    let hi = ready_to.min(span.end);
                    if lo < hi {
                        violations.push(format!(
                            "processor {proc}: {}.{}.{} (priority {}) executed over [{}, {}) while {}.{}.{} (priority {}) was ready",
                            span.task, span.job, span.seg, span.priority, lo, hi,
                            other.task, other.job, other.seg, other.priority
                        ));
                    }
                }
            }
        }

        violations
    }
}
