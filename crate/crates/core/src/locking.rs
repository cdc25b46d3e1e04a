//! Resource (lock) state: request queues, effective request times, and the
//! grant policy.
//!
//! A request's *effective time* is the instant from which it competes for
//! the resource.  Under `at_eligibility` semantics with enforcement active,
//! a request issued before the requesting segment's earliest eligible time
//! is deferred to it; under every other combination the request takes effect
//! the instant it is issued.
//!
//! Grants happen only when the resource is free.  With a FIFO queue the
//! earliest effective request wins (ties broken by priority, then by
//! submission order); with a priority queue the highest-priority effective
//! request wins (ties by effective time, then submission order).

use crate::model::{Enforcement, LockSemantics, QueuePolicy, Ratio};
use std::collections::BTreeMap;

/// The instant from which a request issued at `request` competes, given the
/// requesting segment's enforcement floor (`None` when the requesting chunk
/// is not subject to enforcement).
pub fn effective_time(
    semantics: LockSemantics,
    enforcement: Enforcement,
    request: Ratio,
    floor: Option<Ratio>,
) -> Ratio {
    match (semantics, enforcement, floor) {
        (LockSemantics::AtEligibility, Enforcement::On | Enforcement::OnIdleEligible, Some(f)) => {
            request.max(f)
        }
        _ => request,
    }
}

/// A request waiting in (or entering) a resource queue.  `seq` is a global
/// submission counter used as the final tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueEntry {
    pub effective: Ratio,
    pub priority: i64,
    pub seq: u64,
    /// Engine handle: (job index, chunk index).
    pub job: usize,
    pub chunk: usize,
}

#[derive(Debug, Default)]
pub struct ResourceState {
    /// Holder, as the engine's (job, chunk) handle.
    pub holder: Option<(usize, usize)>,
    pub queue: Vec<QueueEntry>,
}

impl ResourceState {
    pub fn enqueue(&mut self, entry: QueueEntry) {
        self.queue.push(entry);
    }

    /// Removes and returns the entry to grant at instant `now`, or `None`
    /// when the resource is held or no request is effective yet.
    pub fn take_grantable(&mut self, policy: QueuePolicy, now: Ratio) -> Option<QueueEntry> {
        if self.holder.is_some() {
            return None;
        }
        let best = self
            .queue
            .iter()
            .enumerate()
            .filter(|(_, e)| e.effective <= now)
            .min_by_key(|(_, e)| match policy {
                QueuePolicy::Fifo => (e.effective, e.priority, e.seq),
                QueuePolicy::Priority => (Ratio::ZERO, e.priority, e.seq),
            })?
            .0;
        Some(self.queue.remove(best))
    }

    /// Earliest instant after `now` at which a queued request becomes
    /// effective (for event-time discovery).
    pub fn next_effective_after(&self, now: Ratio) -> Option<Ratio> {
        self.queue.iter().map(|e| e.effective).filter(|t| *t > now).min()
    }
}

/// All resources of a scenario, keyed by resource id.
pub type ResourceTable = BTreeMap<String, ResourceState>;
