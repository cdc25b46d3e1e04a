//! Level-i busy-interval tracking.
//!
//! A level-i busy interval on a processor is a maximal interval during
//! which the processor continuously executes work of priority i or higher
//! (lower priority numbers). The enforcement rule needs, at a segment's
//! arrival instant `t`, the *start* of the busy interval in progress at
//! `t`; when the processor was idle — or running only lower-priority work —
//! immediately before `t`, the arrival itself opens a new busy interval and
//! the answer is `t`.
//!
//! The tracker records execution spans lazily as the simulation advances
//! and answers queries by walking the recorded history backwards from `t`
//! through abutting spans of sufficient priority. Spans can be marked as
//! not counting toward busy intervals: critical sections that are exempt
//! from enforcement behave, from the enforcer's perspective, like
//! suspensions rather than computation.

use crate::model::{ProcessorId, Ratio};

/// One recorded execution span on a processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start: Ratio,
    pub end: Ratio,
    pub task: String,
    pub job: u32,
    pub seg: u32,
    pub priority: i64,
    /// Whether this span extends level-i busy intervals (false for
    /// enforcement-exempt critical sections).
    pub counts: bool,
}

/// Execution history of one processor.
#[derive(Debug, Clone, Default)]
pub struct BusyTracker {
    pub processor: ProcessorId,
    spans: Vec<Span>,
}

impl BusyTracker {
    pub fn new(processor: ProcessorId) -> BusyTracker {
        BusyTracker { processor, spans: Vec::new() }
    }

    /// Appends execution of `[start, end)`; merges with the previous span
    /// when it is a seamless continuation of the same chunk.
    pub fn record(&mut self, span: Span) {
        debug_assert!(span.start < span.end, "empty execution span");
        if let Some(last) = self.spans.last_mut() {
            debug_assert!(span.start >= last.end, "spans must be recorded in order");
            if last.end == span.start
                && last.task == span.task
                && last.job == span.job
                && last.seg == span.seg
                && last.counts == span.counts
            {
                last.end = span.end;
                return;
            }
        }
        self.spans.push(span);
    }

    /// Start of the level-`priority` busy interval in progress at `t`, or
    /// `t` itself when none is (idle or lower-priority work just before
    /// `t`). Queries at the exact start of an interval return that start.
    pub fn busy_interval_start(&self, priority: i64, t: Ratio) -> Ratio {
        let mut cursor = t;
        for span in self.spans.iter().rev() {
            if span.start >= cursor {
                // Span lies at or after the cursor (e.g. recorded later the
                // same instant); skip.
                continue;
            }
            if span.end < cursor {
                break; // gap: the processor idled immediately before cursor
            }
            if !span.counts || span.priority > priority {
                break; // lower-priority or exempt work immediately before
            }
            cursor = span.start;
        }
        cursor
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn into_spans(self) -> Vec<Span> {
        self.spans
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ri;

    fn span(start: i128, end: i128, priority: i64, counts: bool) -> Span {
        Span {
            start: ri(start),
            end: ri(end),
            task: format!("p{priority}"),
            job: 1,
            seg: 1,
            priority,
            counts,
        }
    }

    #[test]
    fn arrival_on_idle_processor_opens_a_new_interval() {
        // Execution [0,1), idle [1,5), query at 5.
        let mut tracker = BusyTracker::new(1);
        tracker.record(span(0, 1, 2, true));
        assert_eq!(tracker.busy_interval_start(2, ri(5)), ri(5));
    }

    #[test]
    fn lower_priority_work_just_before_the_query_starts_a_new_interval() {
        // Priority-3 work runs [11,12) and continues; a level-2 query at 12
        // answers 12.
        let mut tracker = BusyTracker::new(1);
        tracker.record(span(10, 11, 2, true));
        tracker.record(span(11, 12, 3, true));
        assert_eq!(tracker.busy_interval_start(2, ri(12)), ri(12));
        // The level-3 interval reaches back through both spans.
        assert_eq!(tracker.busy_interval_start(3, ri(12)), ri(10));
    }

    #[test]
    fn interval_extends_through_abutting_higher_priority_spans() {
        let mut tracker = BusyTracker::new(1);
        tracker.record(span(9, 10, 2, true));
        tracker.record(span(10, 12, 1, true));
        assert_eq!(tracker.busy_interval_start(2, ri(11)), ri(9));
        assert_eq!(tracker.busy_interval_start(1, ri(11)), ri(10));
    }

    #[test]
    fn query_at_exact_interval_start_returns_it() {
        let mut tracker = BusyTracker::new(1);
        tracker.record(span(3, 9, 3, true));
        assert_eq!(tracker.busy_interval_start(2, ri(9)), ri(9));
        assert_eq!(tracker.busy_interval_start(2, ri(3)), ri(3));
    }

    #[test]
    fn exempt_spans_do_not_extend_busy_intervals() {
        // A critical section [3,5) marked exempt behaves like idleness for
        // the busy-interval query at 5.
        let mut tracker = BusyTracker::new(1);
        tracker.record(span(0, 1, 2, true));
        tracker.record(span(3, 5, 2, false));
        assert_eq!(tracker.busy_interval_start(2, ri(5)), ri(5));
    }

    #[test]
    fn seamless_continuations_merge() {
        let mut tracker = BusyTracker::new(1);
        let a = span(0, 1, 1, true);
        let mut b = span(1, 2, 1, true);
        b.task = a.task.clone();
        tracker.record(a);
        tracker.record(b);
        assert_eq!(tracker.spans().len(), 1);
        assert_eq!(tracker.busy_interval_start(1, ri(2)), ri(0));
    }
}
