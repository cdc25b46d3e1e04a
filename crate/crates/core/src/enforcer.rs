//! Period enforcement: per-segment eligibility times.
//!
//! The enforcement rule delays the k-th computation segment of a job so that
//! consecutive jobs' k-th segments become eligible at least one period
//! apart. When the j-th job's k-th segment arrives (resumes from its
//! suspension) at time `a`, its eligibility time is
//!
//! ```text
//! ET[j][k] = max(ET[j-1][k] + T, busy_start)
//! ```
//!
//! where `busy_start` is the start of the current level-i busy interval on
//! the segment's processor at time `a` (the arrival instant itself when the
//! processor was idle or running lower-priority work just before `a`), and
//! `ET[0][k] = -T` so that a first job is never delayed. The segment may
//! not begin execution before `max(a, ET[j][k])`.
//!
//! The recurrence makes eligibility times of consecutive jobs at least one
//! period apart by construction, which is what bounds the interference a
//! self-suspending task can impose on lower-priority tasks: after
//! enforcement it never exceeds that of an ordinary deferrable task.

use crate::model::{JobBehavior, Ratio};
use std::collections::BTreeMap;

/// The audit record of one eligibility decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EligibilityDecision {
    /// `ET[j-1][k] + T`, the enforcement floor.
    pub prev_plus_period: Ratio,
    /// Start of the level-i busy interval sampled at the arrival.
    pub busy_start: Ratio,
    /// The chosen maximum.
    pub eligibility: Ratio,
}

/// Tracks the last eligibility time per (task, segment-index) pair.
///
/// State persists across jobs — including jobs that miss deadlines — because
/// the recurrence is defined over the whole job sequence. If a job has
/// fewer chunks than a previous one (dynamic behaviors), entries for the
/// missing indices simply remain at their previous values.
#[derive(Debug, Clone, Default)]
pub struct EnforcerState {
    last: BTreeMap<(usize, u32), Ratio>,
}

impl EnforcerState {
    pub fn new() -> EnforcerState {
        EnforcerState::default()
    }

    /// Last recorded eligibility time for segment `k` of `task`, or the
    /// `-T` initial value if none has been recorded.
    pub fn last(&self, task: usize, period: Ratio, k: u32) -> Ratio {
        self.last.get(&(task, k)).copied().unwrap_or(-period)
    }

    /// The enforcement floor `ET[j-1][k] + T` — the earliest instant the
    /// next job's segment `k` can possibly become eligible. Known before
    /// the segment arrives, which is what lock-request effective times are
    /// based on.
    pub fn floor(&self, task: usize, period: Ratio, k: u32) -> Ratio {
        self.last(task, period, k) + period
    }

    /// Records the arrival of segment `k` of `task`'s next job and returns
    /// the eligibility decision.
    pub fn arrive(
        &mut self,
        task: usize,
        period: Ratio,
        k: u32,
        busy_start: Ratio,
    ) -> EligibilityDecision {
        let prev = self.last(task, period, k);
        let prev_plus_period = prev + period;
        let eligibility = prev_plus_period.max(busy_start);
        debug_assert!(
            eligibility >= prev + period,
            "eligibility times of consecutive jobs must be at least one period apart"
        );
        self.last.insert((task, k), eligibility);
        EligibilityDecision { prev_plus_period, busy_start, eligibility }
    }
}

/// Maps a dynamic job behavior onto enforcer-visible chunks: each actual
/// execution chunk is keyed by its occurrence order (1-based), regardless of
/// how the declared segment structure looks. This is the only sound keying
/// for dynamic jobs — and precisely why enforcement is incompatible with
/// the dynamic model: a chunk's index says nothing about which part of the
/// computation it carries, so the recurrence can delay a job against a
/// structurally unrelated chunk of its predecessor.
pub fn map_dynamic_chunks(behavior: &JobBehavior) -> Vec<(Ratio, u32)> {
    behavior
        .exec
        .as_deref()
        .unwrap_or_default()
        .iter()
        .enumerate()
        .map(|(i, len)| (*len, (i + 1) as u32))
        .collect()
}
