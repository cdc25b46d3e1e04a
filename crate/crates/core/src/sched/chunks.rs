//! Decomposition of a job into dispatchable chunks.
//!
//! A *chunk* is a maximal piece of a job that, once it arrives, executes to
//! completion without further self-suspension (it may still be preempted).
//! Plain segments map to one chunk each; segments containing a critical
//! section are split according to the configured lock semantics:
//!
//! * `at_eligibility` / `immediate`: the critical section executes locally at
//!   the head of a chunk that also carries the rest of the segment; the lock
//!   is released as soon as the critical-section units have executed.  If
//!   the request sits at a non-zero offset into the segment, the part before
//!   it becomes its own chunk.
//! * `exempt_cs`: the critical section becomes its own chunk, exempt from
//!   enforcement; the remainder of the segment follows as a separate
//!   enforced chunk.
//! * `distributed`: the critical section executes on the sync processor
//!   while the job suspends; only the local parts execute on the task's
//!   processor.
//!
//! Chunks subject to the enforcement recurrence carry a 1-based `et_index`;
//! critical-section chunks under `exempt_cs`/`distributed` and mid-segment
//! continuations do not.

use crate::model::{JobBehavior, LockSemantics, Ratio, TaskSpec};

/// What must happen after the previous chunk completes (or after release,
/// for the first chunk) before this chunk arrives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    /// Self-suspend for the given duration (zero means the chunk arrives the
    /// instant its predecessor completes).
    Suspension(Ratio),
    /// Issue a lock request `delay` after the predecessor completes; the
    /// chunk arrives when the request is granted.
    LockGrant { resource: String, delay: Ratio },
}

/// Execution shape of a chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChunkKind {
    /// Plain local computation.
    Compute,
    /// Local computation whose first `cs` units hold `resource`.
    CsPrefix { resource: String, cs: Ratio },
    /// A local critical-section chunk exempt from enforcement; holds
    /// `resource` for its whole length.
    CsExempt { resource: String },
    /// A critical section serviced on the sync processor; the job suspends
    /// for its duration.
    CsRemote { resource: String },
}

/// Static plan for one chunk of one job.
#[derive(Debug, Clone)]
pub struct ChunkPlan {
    pub gate: Gate,
    pub kind: ChunkKind,
    pub len: Ratio,
    /// Position in the enforcement recurrence, when enforced.
    pub et_index: Option<u32>,
    /// Whether executions of this chunk extend busy intervals observed by
    /// the enforcer.  False only for enforcement-exempt critical sections,
    /// which behave like suspensions from the enforcer's point of view.
    pub counts_busy: bool,
}

impl ChunkPlan {
    fn compute(gate: Gate, len: Ratio, et_index: u32) -> Self {
        ChunkPlan { gate, kind: ChunkKind::Compute, len, et_index: Some(et_index), counts_busy: true }
    }
}

/// Expands one job into its chunk sequence under the given lock semantics.
///
/// `behavior`, when present, supplies actual execution times and suspension
/// lengths (validated against the task's bounds elsewhere); absent entries
/// default to the task's worst case.  The first chunk's gate includes the
/// task's release jitter.
pub fn job_chunks(
    task: &TaskSpec,
    behavior: Option<&JobBehavior>,
    semantics: LockSemantics,
) -> Vec<ChunkPlan> {
    if let Some(b) = behavior {
        if b.dynamic {
            return dynamic_chunks(b);
        }
    }

    let exec = behavior.and_then(|b| b.exec.as_ref());
    let susp = behavior.and_then(|b| b.susp.as_ref());

    let mut plans = Vec::new();
    let mut next_index: u32 = 1;
    for (i, seg) in task.segments.iter().enumerate() {
        let exec_len = exec.map_or(seg.wcet, |e| e[i]);
        let susp_len = susp.map_or_else(
            || {
                let base = seg.susp_before;
                if i == 0 { base + task.jitter } else { base }
            },
            |s| s[i],
        );

        let Some(req) = &seg.resource else {
            plans.push(ChunkPlan::compute(Gate::Suspension(susp_len), exec_len, next_index));
            next_index += 1;
            continue;
        };

        // Split the segment around its critical section.
        let pre = req.offset;
        let cs = req.cs_length;
        let rest = exec_len - pre - cs;
        debug_assert!(rest >= Ratio::ZERO, "validated: exec covers offset + cs");

        let mut gate_for_request = if pre > Ratio::ZERO {
            plans.push(ChunkPlan::compute(Gate::Suspension(susp_len), pre, next_index));
            next_index += 1;
            Gate::LockGrant { resource: req.resource.clone(), delay: Ratio::ZERO }
        } else {
            Gate::LockGrant { resource: req.resource.clone(), delay: susp_len }
        };

        match semantics {
            LockSemantics::AtEligibility | LockSemantics::Immediate => {
                // One chunk: CS at the head, remainder of the segment after.
                let et_index_here = if pre > Ratio::ZERO {
                    None // continuation of an already-started segment
                } else {
                    let idx = next_index;
                    next_index += 1;
                    Some(idx)
                };
                plans.push(ChunkPlan {
                    gate: gate_for_request,
                    kind: ChunkKind::CsPrefix { resource: req.resource.clone(), cs },
                    len: cs + rest,
                    et_index: et_index_here,
                    counts_busy: true,
                });
            }
            LockSemantics::ExemptCs => {
                plans.push(ChunkPlan {
                    gate: gate_for_request,
                    kind: ChunkKind::CsExempt { resource: req.resource.clone() },
                    len: cs,
                    et_index: None,
                    counts_busy: false,
                });
                if rest > Ratio::ZERO {
                    plans.push(ChunkPlan::compute(Gate::Suspension(Ratio::ZERO), rest, next_index));
                    next_index += 1;
                }
            }
            LockSemantics::Distributed => {
                // The request itself is what ends the preceding local part,
                // so the gate delay applies to the remote chunk.
                plans.push(ChunkPlan {
                    gate: std::mem::replace(
                        &mut gate_for_request,
                        Gate::Suspension(Ratio::ZERO),
                    ),
                    kind: ChunkKind::CsRemote { resource: req.resource.clone() },
                    len: cs,
                    et_index: None,
                    counts_busy: true,
                });
                if rest > Ratio::ZERO {
                    plans.push(ChunkPlan::compute(Gate::Suspension(Ratio::ZERO), rest, next_index));
                    next_index += 1;
                }
            }
        }
    }
    plans
}

/// Chunks for a dynamically self-suspending job: the scripted chunk lengths
/// and suspensions are the whole story, and each chunk is enforced under its
/// occurrence index.
fn dynamic_chunks(behavior: &JobBehavior) -> Vec<ChunkPlan> {
    let exec = behavior.exec.as_ref().expect("validated: dynamic behavior has exec");
    let susp = behavior.susp.as_ref().expect("validated: dynamic behavior has susp");
    exec.iter()
        .zip(susp.iter())
        .enumerate()
        .map(|(i, (len, gap))| ChunkPlan::compute(Gate::Suspension(*gap), *len, i as u32 + 1))
        .collect()
}
