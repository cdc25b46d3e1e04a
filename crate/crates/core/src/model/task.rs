//! Task, job-behavior, and system-configuration data model.
//!
//! A task is a segmented self-suspending task: an alternating pattern of
//! computation segments and bounded suspension intervals, released either
//! periodically or along an explicit (sporadic-legal) release script. Each
//! job may deviate below its declared worst case through a [`JobBehavior`]
//! record, either structurally faithful (one actual value per declared
//! segment) or fully dynamic (arbitrary chunk/suspension interleaving within
//! the total budgets).

use super::time::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

pub type ProcessorId = u32;

/// A request for a shared resource issued while executing a segment.
///
/// `offset` is measured in execution time into the segment; the critical
/// section occupies `[offset, offset + cs_length)` of the segment's WCET.
/// All built-in scenarios use `offset = 0`: the request is issued the moment
/// the previous segment completes, so the segment begins with its critical
/// section (or, under distributed semantics, with the remote procedure call
/// that performs it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRequest {
    pub resource: String,
    pub cs_length: Ratio,
    #[serde(default)]
    pub offset: Ratio,
}

/// One computation segment, preceded by a bounded suspension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub wcet: Ratio,
    /// Maximum suspension before this segment begins (zero for the first
    /// segment unless it models release-time self-suspension).
    #[serde(default)]
    pub susp_before: Ratio,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceRequest>,
}

impl Segment {
    pub fn compute(wcet: Ratio) -> Segment {
        Segment { wcet, susp_before: Ratio::ZERO, resource: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalKind {
    /// Releases at `offset, offset + T, offset + 2T, ...` strictly before the
    /// horizon.
    Periodic {
        #[serde(default)]
        offset: Ratio,
    },
    /// Explicit release instants; consecutive gaps must be at least the
    /// period (sporadic legality).
    Scripted { releases: Vec<Ratio> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    /// Lower number = higher priority. Unique per processor.
    pub priority: i64,
    pub period: Ratio,
    pub deadline: Ratio,
    /// Release jitter bound (maximum delay of the first segment's arrival
    /// after the release). Used by the analysis transformations; simulated
    /// jitter is scripted through behaviors.
    #[serde(default)]
    pub jitter: Ratio,
    #[serde(default)]
    pub processor: ProcessorId,
    pub arrival: ArrivalKind,
    pub segments: Vec<Segment>,
}

impl TaskSpec {
    pub fn total_wcet(&self) -> Ratio {
        self.segments.iter().map(|s| s.wcet).sum()
    }

    pub fn total_susp_bound(&self) -> Ratio {
        self.jitter + self.segments.iter().map(|s| s.susp_before).sum()
    }

    pub fn is_segmented(&self) -> bool {
        self.segments.len() > 1
    }
}

/// Scripted deviation of one job from the declared worst case.
///
/// `exec[k]` / `susp[k]` give the actual execution of chunk `k` and the
/// actual suspension *before* chunk `k` (index 0 is the interval between
/// release and the first chunk). For structurally faithful jobs (`dynamic =
/// false`) both lists must match the declared segment count; for dynamic
/// jobs any equal-length pair is accepted as long as the totals stay within
/// the task's budgets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobBehavior {
    pub task: String,
    /// 1-based job index in release order.
    pub job: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exec: Option<Vec<Ratio>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub susp: Option<Vec<Ratio>>,
    #[serde(default)]
    pub dynamic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Enforcement {
    Off,
    On,
    /// Like `On`, but a segment becomes eligible the instant its processor
    /// would otherwise idle.
    OnIdleEligible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LockSemantics {
    /// A request takes effect only once the requesting segment's eligibility
    /// floor has passed.
    AtEligibility,
    /// A request takes effect immediately; ownership can be held while the
    /// critical-section body still waits for eligibility.
    Immediate,
    /// Critical sections execute locally as separate chunks exempt from
    /// enforcement.
    ExemptCs,
    /// Critical sections execute remotely on a dedicated synchronization
    /// processor while the task self-suspends.
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum QueuePolicy {
    /// Requests are served in effective-time order (ties by priority, then
    /// task id).
    Fifo,
    /// The highest-priority effective request is served first.
    Priority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub processors: Vec<ProcessorId>,
    pub enforcement: Enforcement,
    #[serde(default = "default_lock_semantics")]
    pub lock_semantics: LockSemantics,
    /// Required (and only meaningful) for distributed lock semantics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync_processor: Option<ProcessorId>,
    #[serde(default = "default_queue")]
    pub lock_queue: QueuePolicy,
    pub horizon: Ratio,
}

fn default_lock_semantics() -> LockSemantics {
    LockSemantics::AtEligibility
}

fn default_queue() -> QueuePolicy {
    QueuePolicy::Fifo
}

/// A complete simulation input: tasks, scripted deviations, configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub behaviors: Vec<JobBehavior>,
    pub config: SystemConfig,
}

impl Scenario {
    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn behavior(&self, task: &str, job: u32) -> Option<&JobBehavior> {
        self.behaviors.iter().find(|b| b.task == task && b.job == job)
    }
}

/// One validation finding, with enough context to locate the offending
/// field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub context: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

/// Errors and warnings from validating tasks, behaviors, and configuration.
/// Validation never panics; it reports.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, context: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue { context: context.into(), message: message.into() });
    }

    fn warn(&mut self, context: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue { context: context.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("task {task}: scripted releases at {first} and {second} are closer than the period {period}")]
    ScriptedSeparation { task: String, first: Ratio, second: Ratio, period: Ratio },
    #[error("task {task}: scripted release {release} is negative")]
    NegativeRelease { task: String, release: Ratio },
    #[error("task {task}: scripted releases are not sorted")]
    UnsortedReleases { task: String },
}

/// Structural validation of a task set alone (no behaviors/config).
pub fn validate_taskset(tasks: &[TaskSpec]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen_ids = BTreeSet::new();

    for task in tasks {
        let ctx = format!("task {}", task.id);
        if !seen_ids.insert(task.id.clone()) {
            report.error(&ctx, "duplicate task id");
        }
        if task.segments.is_empty() {
            report.error(&ctx, "task has no segments");
        }
        if task.period <= Ratio::ZERO {
            report.error(&ctx, format!("period {} must be positive", task.period));
        }
        if task.deadline <= Ratio::ZERO {
            report.error(&ctx, format!("deadline {} must be positive", task.deadline));
        }
        if task.deadline > task.period {
            report.warn(&ctx, format!("deadline {} exceeds period {} (analyses assume constrained deadlines)", task.deadline, task.period));
        }
        if task.jitter.is_negative() {
            report.error(&ctx, "jitter must be non-negative");
        }
        for (k, seg) in task.segments.iter().enumerate() {
            let sctx = format!("task {} segment {}", task.id, k + 1);
            if seg.wcet <= Ratio::ZERO {
                report.error(&sctx, format!("wcet {} must be positive", seg.wcet));
            }
            if seg.susp_before.is_negative() {
                report.error(&sctx, "susp_before must be non-negative");
            }
            if let Some(req) = &seg.resource {
                if req.cs_length <= Ratio::ZERO {
                    report.error(&sctx, "critical-section length must be positive");
                }
                if req.offset.is_negative() || req.offset + req.cs_length > seg.wcet {
                    report.error(
                        &sctx,
                        format!(
                            "critical section [{}, {}) does not fit in wcet {}",
                            req.offset,
                            req.offset + req.cs_length,
                            seg.wcet
                        ),
                    );
                }
            }
        }
        if let ArrivalKind::Scripted { releases } = &task.arrival {
            for pair in releases.windows(2) {
                if pair[1] < pair[0] {
                    report.error(&ctx, "scripted releases are not sorted");
                } else if pair[1] - pair[0] < task.period {
                    report.error(
                        &ctx,
                        format!(
                            "scripted releases {} and {} are closer than the period {}",
                            pair[0], pair[1], task.period
                        ),
                    );
                }
            }
            if releases.first().is_some_and(|f| f.is_negative()) {
                report.error(&ctx, "scripted release is negative");
            }
        }
    }

    // Priority uniqueness per processor.
    let mut keys = BTreeSet::new();
    for task in tasks {
        if !keys.insert((task.processor, task.priority)) {
            report.error(
                format!("task {}", task.id),
                format!("priority {} is already used on processor {}", task.priority, task.processor),
            );
        }
    }

    report
}

/// Full scenario validation: task set, behaviors against their tasks, and
/// configuration consistency.
pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut report = validate_taskset(&scenario.tasks);

    let cfg = &scenario.config;
    if cfg.processors.is_empty() {
        report.error("config", "at least one processor is required");
    }
    for task in &scenario.tasks {
        if !cfg.processors.contains(&task.processor) {
            report.error(
                format!("task {}", task.id),
                format!("assigned processor {} is not in the configured processor set", task.processor),
            );
        }
    }
    let uses_resources = scenario.tasks.iter().any(|t| t.segments.iter().any(|s| s.resource.is_some()));
    match (cfg.lock_semantics, cfg.sync_processor) {
        (LockSemantics::Distributed, None) if uses_resources => {
            report.error("config", "distributed lock semantics require a sync_processor");
        }
        (LockSemantics::Distributed, Some(sp)) if cfg.processors.contains(&sp) => {
            report.error("config", format!("sync_processor {sp} must be distinct from application processors"));
        }
        (_, Some(_)) if cfg.lock_semantics != LockSemantics::Distributed => {
            report.warn("config", "sync_processor is ignored unless lock semantics are distributed");
        }
        _ => {}
    }
    if cfg.horizon <= Ratio::ZERO {
        report.error("config", "horizon must be positive");
    }

    for b in &scenario.behaviors {
        let ctx = format!("behavior for task {} job {}", b.task, b.job);
        let Some(task) = scenario.task(&b.task) else {
            report.error(&ctx, "references an unknown task");
            continue;
        };
        if b.job == 0 {
            report.error(&ctx, "job indices are 1-based");
        }
        let m = task.segments.len();
        let exec = b.exec.as_deref();
        let susp = b.susp.as_deref();
        if b.dynamic {
            let (Some(exec), Some(susp)) = (exec, susp) else {
                report.error(&ctx, "dynamic behaviors must script both exec and susp");
                continue;
            };
            if exec.is_empty() || exec.len() != susp.len() {
                report.error(&ctx, format!("field exec/susp: dynamic chunk lists must be non-empty and equal-length (got {} and {})", exec.len(), susp.len()));
                continue;
            }
            if exec.iter().any(|e| *e <= Ratio::ZERO) {
                report.error(&ctx, "field exec: dynamic chunks must be positive");
            }
            if susp.iter().any(|s| s.is_negative()) {
                report.error(&ctx, "field susp: suspensions must be non-negative");
            }
            let total_exec: Ratio = exec.iter().copied().sum();
            let total_susp: Ratio = susp.iter().copied().sum();
            if total_exec > task.total_wcet() {
                report.error(&ctx, format!("field exec: total {} exceeds the execution budget {}", total_exec, task.total_wcet()));
            }
            if total_susp > task.total_susp_bound() {
                report.error(&ctx, format!("field susp: total {} exceeds the suspension budget {}", total_susp, task.total_susp_bound()));
            }
            if task.segments.iter().any(|s| s.resource.is_some()) {
                report.error(&ctx, "dynamic behaviors are not supported for tasks with resource requests");
            }
        } else {
            if let Some(exec) = exec {
                if exec.len() != m {
                    report.error(&ctx, format!("field exec: expected {} values (one per segment), got {}", m, exec.len()));
                } else {
                    for (k, (e, seg)) in exec.iter().zip(&task.segments).enumerate() {
                        if *e <= Ratio::ZERO || *e > seg.wcet {
                            report.error(&ctx, format!("field exec[{k}]: {} outside (0, wcet {}]", e, seg.wcet));
                        }
                        if let Some(req) = &seg.resource {
                            if *e < req.offset + req.cs_length {
                                report.error(
                                    &ctx,
                                    format!("field exec[{k}]: {} is shorter than the critical section end {}", e, req.offset + req.cs_length),
                                );
                            }
                        }
                    }
                }
            }
            if let Some(susp) = susp {
                if susp.len() != m {
                    report.error(&ctx, format!("field susp: expected {} values (one per segment, index 0 before the first), got {}", m, susp.len()));
                } else {
                    for (k, s) in susp.iter().enumerate() {
                        let bound = if k == 0 {
                            task.jitter + task.segments[0].susp_before
                        } else {
                            task.segments[k].susp_before
                        };
                        if s.is_negative() || *s > bound {
                            report.error(&ctx, format!("field susp[{k}]: {} outside [0, {}]", s, bound));
                        }
                    }
                }
            }
        }
    }

    report
}

/// All release instants of `task` strictly before `horizon`.
pub fn expand_arrivals(task: &TaskSpec, horizon: Ratio) -> Result<Vec<Ratio>, ModelError> {
    match &task.arrival {
        ArrivalKind::Periodic { offset } => {
            let mut out = Vec::new();
            let mut t = *offset;
            while t < horizon {
                out.push(t);
                t += task.period;
            }
            Ok(out)
        }
        ArrivalKind::Scripted { releases } => {
            for pair in releases.windows(2) {
                if pair[1] < pair[0] {
                    return Err(ModelError::UnsortedReleases { task: task.id.clone() });
                }
                if pair[1] - pair[0] < task.period {
                    return Err(ModelError::ScriptedSeparation {
                        task: task.id.clone(),
                        first: pair[0],
                        second: pair[1],
                        period: task.period,
                    });
                }
            }
            if let Some(first) = releases.first() {
                if first.is_negative() {
                    return Err(ModelError::NegativeRelease { task: task.id.clone(), release: *first });
                }
            }
            Ok(releases.iter().copied().filter(|t| *t < horizon).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::time::{r, ri};

    fn simple_task(id: &str, period: i128) -> TaskSpec {
        TaskSpec {
            id: id.into(),
            priority: 1,
            period: ri(period),
            deadline: ri(period),
            jitter: Ratio::ZERO,
            processor: 1,
            arrival: ArrivalKind::Periodic { offset: Ratio::ZERO },
            segments: vec![Segment::compute(ri(2))],
        }
    }

    #[test]
    fn periodic_arrivals_stop_before_horizon() {
        let task = simple_task("t", 10);
        assert_eq!(expand_arrivals(&task, ri(25)).unwrap(), vec![ri(0), ri(10), ri(20)]);
        // A release exactly at the horizon is excluded.
        let t11 = TaskSpec { period: ri(11), ..simple_task("t", 10) };
        assert_eq!(expand_arrivals(&t11, ri(22)).unwrap(), vec![ri(0), ri(11)]);
    }

    #[test]
    fn scripted_arrivals_enforce_min_separation() {
        let mut task = simple_task("t", 10);
        task.arrival = ArrivalKind::Scripted { releases: vec![ri(0), ri(5)] };
        match expand_arrivals(&task, ri(100)) {
            Err(ModelError::ScriptedSeparation { first, second, .. }) => {
                assert_eq!((first, second), (ri(0), ri(5)));
            }
            other => panic!("expected separation error, got {other:?}"),
        }
        task.arrival = ArrivalKind::Scripted { releases: vec![ri(0), ri(10), ri(31)] };
        assert_eq!(expand_arrivals(&task, ri(31)).unwrap(), vec![ri(0), ri(10)]);
    }

    #[test]
    fn duplicate_priorities_on_one_processor_are_rejected() {
        let a = simple_task("a", 10);
        let b = simple_task("b", 12);
        let report = validate_taskset(&[a.clone(), b.clone()]);
        assert!(!report.is_ok());
        let mut b2 = b;
        b2.processor = 2;
        assert!(validate_taskset(&[a, b2]).is_ok());
    }

    #[test]
    fn critical_section_must_fit_in_segment() {
        let mut task = simple_task("t", 10);
        task.segments = vec![Segment {
            wcet: ri(3),
            susp_before: Ratio::ZERO,
            resource: Some(ResourceRequest { resource: "r".into(), cs_length: ri(4), offset: Ratio::ZERO }),
        }];
        let report = validate_taskset(&[task]);
        assert!(report.errors.iter().any(|e| e.message.contains("does not fit")));
    }

    #[test]
    fn behavior_bounds_are_checked_with_context() {
        let mut task = simple_task("t", 10);
        task.segments = vec![
            Segment::compute(ri(1)),
            Segment { wcet: ri(2), susp_before: ri(4), resource: None },
        ];
        let scenario = Scenario {
            name: "test".into(),
            tasks: vec![task],
            behaviors: vec![JobBehavior {
                task: "t".into(),
                job: 1,
                exec: None,
                susp: Some(vec![Ratio::ZERO, ri(5)]),
                dynamic: false,
            }],
            config: SystemConfig {
                processors: vec![1],
                enforcement: Enforcement::Off,
                lock_semantics: LockSemantics::AtEligibility,
                sync_processor: None,
                lock_queue: QueuePolicy::Fifo,
                horizon: ri(20),
            },
        };
        let report = validate_scenario(&scenario);
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].context.contains("task t job 1"));
        assert!(report.errors[0].message.contains("susp[1]"));
    }

    #[test]
    fn dynamic_behavior_checks_budgets_not_structure() {
        let mut task = simple_task("t", 2);
        task.segments = vec![Segment { wcet: ri(1), susp_before: ri(1), resource: None }];
        let mk = |exec: Vec<Ratio>, susp: Vec<Ratio>| Scenario {
            name: "dyn".into(),
            tasks: vec![task.clone()],
            behaviors: vec![JobBehavior { task: "t".into(), job: 1, exec: Some(exec), susp: Some(susp), dynamic: true }],
            config: SystemConfig {
                processors: vec![1],
                enforcement: Enforcement::On,
                lock_semantics: LockSemantics::AtEligibility,
                sync_processor: None,
                lock_queue: QueuePolicy::Fifo,
                horizon: ri(6),
            },
        };
        // Two chunks summing to the budget: fine even though one segment is declared.
        assert!(validate_scenario(&mk(vec![r(1, 2), r(1, 2)], vec![Ratio::ZERO, ri(1)])).is_ok());
        // Over budget: rejected.
        let report = validate_scenario(&mk(vec![ri(1), ri(1)], vec![Ratio::ZERO, Ratio::ZERO]));
        assert!(report.errors.iter().any(|e| e.message.contains("execution budget")));
    }
}
