//! Curated scenarios with machine-checked expectations.
//!
//! Each case bundles a scenario with assertions about the schedule it must
//! produce: miss instants, dispatch times, stored eligibility times, lock
//! grants, response times. `run_case` simulates and checks; the CLI's
//! `repro` subcommand reports one line per case and fails if any assertion
//! does.

use crate::model::{
    r, ri, ArrivalKind, Enforcement, JobBehavior, LockSemantics, QueuePolicy, Ratio,
    ResourceRequest, Scenario, Segment, SystemConfig, TaskSpec,
};
use crate::sched::{simulate, ScheduleTrace, SimulationError};

/// A checkable expectation about a simulated schedule.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assertion {
    /// The job misses its deadline at exactly this instant.
    DeadlineMissAt { task: String, job: u32, time: Ratio },
    /// No job misses anywhere in the trace.
    NoMisses,
    /// The segment first gets the processor at exactly this instant.
    DispatchAt { task: String, job: u32, seg: u32, time: Ratio },
    /// The stored eligibility time for the job's `index`-th enforced chunk.
    EligibilityEquals { task: String, job: u32, index: u32, time: Ratio },
    ResponseTimeEquals { task: String, job: u32, time: Ratio },
    /// The job is granted some resource at exactly this instant.
    LockGrantAt { task: String, job: u32, time: Ratio },
}

impl std::fmt::Display for Assertion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assertion::DeadlineMissAt { task, job, time } => write!(f, "{task} job {job} misses at {time}"),
            Assertion::NoMisses => write!(f, "no deadline misses"),
            Assertion::DispatchAt { task, job, seg, time } => {
                write!(f, "{task} job {job} segment {seg} dispatches at {time}")
            }
            Assertion::EligibilityEquals { task, job, index, time } => {
                write!(f, "{task} job {job} chunk {index} eligibility = {time}")
            }
            Assertion::ResponseTimeEquals { task, job, time } => write!(f, "{task} job {job} response = {time}"),
            Assertion::LockGrantAt { task, job, time } => write!(f, "{task} job {job} lock granted at {time}"),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AssertionOutcome {
    pub assertion: Assertion,
    pub passed: bool,
    /// What the trace actually showed, for failed assertions.
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub outcomes: Vec<AssertionOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

/// Checks every assertion against a trace.
pub fn check_trace(trace: &ScheduleTrace, assertions: &[Assertion]) -> CheckReport {
    let outcomes = assertions
        .iter()
        .map(|a| {
            let (passed, detail) = check_one(trace, a);
            AssertionOutcome { assertion: a.clone(), passed, detail }
        })
        .collect();
    CheckReport { scenario: trace.scenario.clone(), outcomes }
}

fn check_one(trace: &ScheduleTrace, assertion: &Assertion) -> (bool, String) {
    match assertion {
        Assertion::DeadlineMissAt { task, job, time } => {
            let misses = trace.misses();
            let hit = misses.iter().any(|(t, j, at)| t == task && j == job && at == time);
            (hit, if hit { String::new() } else { format!("misses: {misses:?}") })
        }
        Assertion::NoMisses => {
            let misses = trace.misses();
            (misses.is_empty(), if misses.is_empty() { String::new() } else { format!("misses: {misses:?}") })
        }
        Assertion::DispatchAt { task, job, seg, time } => {
            let got = trace.first_dispatch(task, *job, *seg);
            (got == Some(*time), format!("first dispatch: {got:?}"))
        }
        Assertion::EligibilityEquals { task, job, index, time } => {
            let got = trace.eligibility_of(task, *job, *index);
            (got == Some(*time), format!("stored eligibility: {got:?}"))
        }
        Assertion::ResponseTimeEquals { task, job, time } => {
            let got = trace.job(task, *job).and_then(|j| j.response);
            (got == Some(*time), format!("response: {got:?}"))
        }
        Assertion::LockGrantAt { task, job, time } => {
            let grants = trace.grants_for(task, *job);
            let hit = grants.contains(time);
            (hit, if hit { String::new() } else { format!("grants: {grants:?}") })
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReproCase {
    pub name: &'static str,
    pub summary: &'static str,
    pub scenario: Scenario,
    pub assertions: Vec<Assertion>,
}

/// Simulates the case and checks its assertions.
pub fn run_case(case: &ReproCase) -> Result<(ScheduleTrace, CheckReport), SimulationError> {
    let trace = simulate(&case.scenario)?;
    let report = check_trace(&trace, &case.assertions);
    Ok((trace, report))
}

pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "fig1_no_enforce",
        "fig2_enforce",
        "dyn_incompat",
        "sec3_no_enforce",
        "sec3_enforce",
        "sec3_enforce_idle_variant",
        "fig5_lock_at_eligibility",
        "fig6_lock_immediate",
        "fig7_distributed",
        "fig8_exempt_cs",
    ]
}

pub fn builtin(name: &str) -> Option<ReproCase> {
    match name {
        "fig1_no_enforce" => Some(fig1_no_enforce()),
        "fig2_enforce" => Some(fig2_enforce()),
        "dyn_incompat" => Some(dyn_incompat()),
        "sec3_no_enforce" => Some(sec3_no_enforce()),
        "sec3_enforce" => Some(sec3_enforce()),
        "sec3_enforce_idle_variant" => Some(sec3_enforce_idle_variant()),
        "fig5_lock_at_eligibility" => Some(fig5_lock_at_eligibility()),
        "fig6_lock_immediate" => Some(fig6_with_epsilon(r(1, 100))),
        "fig7_distributed" => Some(fig7_distributed()),
        "fig8_exempt_cs" => Some(fig8_exempt_cs()),
        _ => None,
    }
}

pub fn all_builtins() -> Vec<ReproCase> {
    builtin_names().into_iter().map(|n| builtin(n).unwrap()).collect()
}

// ---- scenario construction helpers -------------------------------------

fn task(id: &str, priority: i64, period: i128, segments: Vec<Segment>) -> TaskSpec {
    TaskSpec {
        id: id.into(),
        priority,
        period: ri(period),
        deadline: ri(period),
        jitter: Ratio::ZERO,
        processor: 1,
        arrival: ArrivalKind::Periodic { offset: Ratio::ZERO },
        segments,
    }
}

fn scripted(releases: Vec<i128>, t: TaskSpec) -> TaskSpec {
    TaskSpec { arrival: ArrivalKind::Scripted { releases: releases.into_iter().map(ri).collect() }, ..t }
}

fn seg(wcet: i128) -> Segment {
    Segment::compute(ri(wcet))
}

fn susp_seg(susp: i128, wcet: i128) -> Segment {
    Segment { wcet: ri(wcet), susp_before: ri(susp), resource: None }
}

fn cs_seg(wcet: i128, resource: &str, cs: i128) -> Segment {
    Segment {
        wcet: ri(wcet),
        susp_before: Ratio::ZERO,
        resource: Some(ResourceRequest { resource: resource.into(), cs_length: ri(cs), offset: Ratio::ZERO }),
    }
}

fn uni_config(horizon: i128, enforcement: Enforcement) -> SystemConfig {
    SystemConfig {
        processors: vec![1],
        enforcement,
        lock_semantics: LockSemantics::AtEligibility,
        sync_processor: None,
        lock_queue: QueuePolicy::Fifo,
        horizon: ri(horizon),
    }
}

fn shortened_susp(task: &str, job: u32, susp: Vec<Ratio>) -> JobBehavior {
    JobBehavior { task: task.into(), job, exec: None, susp: Some(susp), dynamic: false }
}

fn scripted_exec(task: &str, job: u32, exec: Vec<Ratio>) -> JobBehavior {
    JobBehavior { task: task.into(), job, exec: Some(exec), susp: None, dynamic: false }
}

fn a_miss(task: &str, job: u32, time: i128) -> Assertion {
    Assertion::DeadlineMissAt { task: task.into(), job, time: ri(time) }
}

fn a_dispatch(task: &str, job: u32, seg: u32, time: i128) -> Assertion {
    Assertion::DispatchAt { task: task.into(), job, seg, time: ri(time) }
}

fn a_elig(task: &str, job: u32, index: u32, time: i128) -> Assertion {
    Assertion::EligibilityEquals { task: task.into(), job, index, time: ri(time) }
}

fn a_response(task: &str, job: u32, time: i128) -> Assertion {
    Assertion::ResponseTimeEquals { task: task.into(), job, time: ri(time) }
}

fn a_grant(task: &str, job: u32, time: Ratio) -> Assertion {
    Assertion::LockGrantAt { task: task.into(), job, time }
}

// ---- the cases ----------------------------------------------------------

/// Three tasks, no enforcement: the middle-priority task's second job
/// suspends for less time than its first, its second segment lands earlier
/// than one period after the first job's, and the low-priority task pays
/// with a deadline miss.
fn fig1_no_enforce() -> ReproCase {
    let scenario = Scenario {
        name: "fig1_no_enforce".into(),
        tasks: vec![
            scripted(vec![5], task("t1", 1, 10, vec![seg(3)])),
            task("t2", 2, 10, vec![seg(1), susp_seg(4, 2)]),
            scripted(vec![5], task("t3", 3, 10, vec![seg(3)])),
        ],
        behaviors: vec![shortened_susp("t2", 2, vec![Ratio::ZERO, ri(1)])],
        config: uni_config(20, Enforcement::Off),
    };
    ReproCase {
        name: "fig1_no_enforce",
        summary: "shortened suspension lets consecutive segments bunch up; lowest task misses",
        scenario,
        assertions: vec![
            a_response("t1", 1, 3),
            a_response("t2", 1, 10),
            a_dispatch("t2", 2, 2, 12),
            a_miss("t3", 1, 15),
        ],
    }
}

/// The same workload with enforcement on: the second job's second segment
/// is held to one period after the first job's, the low-priority task
/// finishes in the gap, and nobody misses.
fn fig2_enforce() -> ReproCase {
    let mut case = fig1_no_enforce();
    case.scenario.name = "fig2_enforce".into();
    case.scenario.config.enforcement = Enforcement::On;
    ReproCase {
        name: "fig2_enforce",
        summary: "enforcement spaces the segments one period apart; every deadline holds",
        scenario: case.scenario,
        assertions: vec![
            Assertion::NoMisses,
            a_elig("t2", 1, 2, 5),
            a_elig("t2", 2, 2, 15),
            a_dispatch("t2", 2, 2, 15),
            a_response("t3", 1, 9),
        ],
    }
}

/// A single task whose jobs vary their chunk structure at runtime: the
/// second job's first chunk is held one period after the first job's
/// (late-eligible) chunk, and the job misses even though the processor was
/// free the whole time.
fn dyn_incompat() -> ReproCase {
    let scenario = Scenario {
        name: "dyn_incompat".into(),
        tasks: vec![scripted(vec![0, 2], task("t", 1, 2, vec![susp_seg(1, 1)]))],
        behaviors: vec![
            JobBehavior { task: "t".into(), job: 1, exec: Some(vec![ri(1)]), susp: Some(vec![ri(1)]), dynamic: true },
            JobBehavior {
                task: "t".into(),
                job: 2,
                exec: Some(vec![r(1, 2), r(1, 2)]),
                susp: Some(vec![Ratio::ZERO, ri(1)]),
                dynamic: true,
            },
        ],
        config: uni_config(5, Enforcement::On),
    };
    ReproCase {
        name: "dyn_incompat",
        summary: "runtime-varying chunk structure defeats per-chunk release spacing",
        scenario,
        assertions: vec![a_elig("t", 2, 1, 3), a_dispatch("t", 2, 1, 3), a_miss("t", 2, 4)],
    }
}

fn sec3_tasks() -> Vec<TaskSpec> {
    vec![
        task("t1", 1, 10, vec![seg(2)]),
        scripted(vec![0, 11], task("t2", 2, 11, vec![seg(1), susp_seg(6, 1)])),
    ]
}

/// Without enforcement the two-segment task's worst observed response is
/// 10 — under its deadline of 11.
fn sec3_no_enforce() -> ReproCase {
    let scenario = Scenario {
        name: "sec3_no_enforce".into(),
        tasks: sec3_tasks(),
        behaviors: vec![],
        config: uni_config(22, Enforcement::Off),
    };
    ReproCase {
        name: "sec3_no_enforce",
        summary: "baseline: the suspending task meets its deadline without enforcement",
        scenario,
        assertions: vec![
            Assertion::NoMisses,
            a_response("t2", 1, 10),
            a_response("t2", 2, 9),
        ],
    }
}

/// With enforcement the same workload misses: the second job's second
/// segment is held to one period after the first job's, the processor
/// idles in front of it, and the deadline passes first. Enforcement is not
/// response-time-neutral.
fn sec3_enforce() -> ReproCase {
    let scenario = Scenario {
        name: "sec3_enforce".into(),
        tasks: sec3_tasks(),
        behaviors: vec![],
        config: uni_config(22, Enforcement::On),
    };
    ReproCase {
        name: "sec3_enforce",
        summary: "enforcement holds an eligible segment behind an idle processor; deadline lost",
        scenario,
        assertions: vec![
            a_response("t2", 1, 10),
            a_elig("t2", 2, 2, 20),
            a_dispatch("t1", 3, 1, 20),
            a_miss("t2", 2, 22),
        ],
    }
}

/// The idle-variant objection answered: add enough background work that
/// the processor never idles, enable the idle-time eligibility rule, and
/// the miss still happens — idling was not the cause.
fn sec3_enforce_idle_variant() -> ReproCase {
    let mut tasks = sec3_tasks();
    tasks.push(task("t3", 3, 100, vec![seg(13)]));
    let scenario = Scenario {
        name: "sec3_enforce_idle_variant".into(),
        tasks,
        behaviors: vec![],
        config: uni_config(23, Enforcement::OnIdleEligible),
    };
    ReproCase {
        name: "sec3_enforce_idle_variant",
        summary: "with background load and idle-time eligibility the miss persists",
        scenario,
        assertions: vec![
            a_elig("t2", 2, 2, 20),
            a_miss("t2", 2, 22),
            a_response("t3", 1, 20),
        ],
    }
}

fn dual_proc_config(horizon: i128, semantics: LockSemantics, sync: Option<u32>) -> SystemConfig {
    SystemConfig {
        processors: vec![1, 2],
        enforcement: Enforcement::On,
        lock_semantics: semantics,
        sync_processor: sync,
        lock_queue: QueuePolicy::Fifo,
        horizon: ri(horizon),
    }
}

/// Two tasks on two processors sharing one lock, requests deferred to the
/// eligibility time. Each period the low-priority task's request slides
/// further behind the other task's critical section, until the fourth job
/// misses.
fn fig5_lock_at_eligibility() -> ReproCase {
    let scenario = Scenario {
        name: "fig5_lock_at_eligibility".into(),
        tasks: vec![
            TaskSpec { processor: 1, ..task("t1", 1, 8, vec![seg(1), cs_seg(3, "r", 2)]) },
            TaskSpec { processor: 2, ..task("t2", 2, 7, vec![seg(2), cs_seg(2, "r", 1)]) },
        ],
        behaviors: vec![],
        config: dual_proc_config(28, LockSemantics::AtEligibility, None),
    };
    ReproCase {
        name: "fig5_lock_at_eligibility",
        summary: "requests deferred to eligibility drift into the peer's critical section",
        scenario,
        assertions: vec![
            a_elig("t2", 1, 2, 3),
            a_elig("t2", 2, 2, 11),
            a_elig("t2", 3, 2, 19),
            a_elig("t2", 4, 2, 27),
            a_grant("t1", 1, ri(1)),
            a_grant("t2", 1, ri(3)),
            a_grant("t2", 4, ri(27)),
            a_response("t2", 3, 7),
            a_miss("t2", 4, 28),
        ],
    }
}

/// Two symmetric tasks, locks granted at request time but critical
/// sections held back until eligibility — the lock is parked on an
/// ineligible owner and the peer's request stalls behind it.
/// `epsilon` is how much faster than worst case the varying first segments
/// run; the documented schedule uses 1/100.
pub fn fig6_with_epsilon(epsilon: Ratio) -> ReproCase {
    let e = epsilon;
    let seg1 = ri(1) - e;
    let scenario = Scenario {
        name: "fig6_lock_immediate".into(),
        tasks: vec![
            TaskSpec { processor: 1, ..task("t1", 1, 8, vec![seg(1), cs_seg(3, "r", 2)]) },
            TaskSpec { processor: 2, ..task("t2", 2, 8, vec![seg(1), cs_seg(3, "r", 2)]) },
        ],
        behaviors: vec![
            scripted_exec("t2", 1, vec![seg1, ri(3)]),
            scripted_exec("t1", 2, vec![seg1, ri(3)]),
            scripted_exec("t2", 3, vec![seg1, ri(3)]),
        ],
        config: dual_proc_config(24, LockSemantics::Immediate, None),
    };
    ReproCase {
        name: "fig6_lock_immediate",
        summary: "immediately granted lock parks on an ineligible owner; the peer misses",
        scenario,
        assertions: vec![
            a_grant("t2", 1, seg1),
            a_grant("t1", 2, ri(9) - e),
            Assertion::EligibilityEquals { task: "t1".into(), job: 2, index: 2, time: ri(11) - e },
            Assertion::DispatchAt { task: "t1".into(), job: 2, seg: 2, time: ri(11) - e },
            a_grant("t2", 2, ri(13) - e),
            Assertion::ResponseTimeEquals { task: "t2".into(), job: 3, time: ri(8) - e },
            a_miss("t1", 3, 24),
        ],
    }
}

fn remote_tasks() -> Vec<TaskSpec> {
    vec![
        TaskSpec { processor: 1, ..task("t1", 1, 25, vec![seg(1), cs_seg(3, "r", 2)]) },
        TaskSpec { processor: 2, ..task("t2", 2, 15, vec![seg(1), cs_seg(8, "r", 2), cs_seg(3, "r", 2)]) },
    ]
}

/// Critical sections execute on a dedicated synchronization processor in
/// grant order; the requesting task suspends meanwhile. Enforcement delays
/// one local segment, which pushes the next request into contention and
/// costs the second job its deadline.
fn fig7_distributed() -> ReproCase {
    let scenario = Scenario {
        name: "fig7_distributed".into(),
        tasks: remote_tasks(),
        behaviors: vec![],
        config: dual_proc_config(31, LockSemantics::Distributed, Some(3)),
    };
    ReproCase {
        name: "fig7_distributed",
        summary: "enforcement slides a remote-section request into the peer's; miss follows",
        scenario,
        assertions: vec![
            a_response("t2", 1, 14),
            a_elig("t2", 1, 2, 5),
            a_elig("t2", 2, 2, 20),
            a_grant("t1", 2, ri(26)),
            a_grant("t2", 2, ri(28)),
            a_miss("t2", 2, 30),
            a_response("t2", 2, 16),
        ],
    }
}

/// The same workload with critical sections exempt from enforcement and
/// from busy-interval accounting, executing locally. The exemption changes
/// nothing here: the local segment after the section is still held, the
/// next request still collides, the second job still misses.
fn fig8_exempt_cs() -> ReproCase {
    let scenario = Scenario {
        name: "fig8_exempt_cs".into(),
        tasks: remote_tasks(),
        behaviors: vec![],
        config: dual_proc_config(31, LockSemantics::ExemptCs, None),
    };
    ReproCase {
        name: "fig8_exempt_cs",
        summary: "exempting critical sections from enforcement does not save the deadline",
        scenario,
        assertions: vec![
            a_response("t2", 1, 14),
            a_elig("t2", 1, 2, 5),
            a_elig("t2", 2, 2, 20),
            a_grant("t2", 2, ri(28)),
            a_miss("t2", 2, 30),
            a_response("t2", 2, 16),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_scenario_validates_and_passes_its_assertions() {
        for case in all_builtins() {
            let (trace, report) = run_case(&case).unwrap_or_else(|e| panic!("{}: {e}", case.name));
            assert!(
                report.passed(),
                "{} failed:\n{}",
                case.name,
                report
                    .outcomes
                    .iter()
                    .filter(|o| !o.passed)
                    .map(|o| format!("  {} — {}", o.assertion, o.detail))
                    .collect::<Vec<_>>()
                    .join("\n")
            );
            let violations = trace.check_invariants();
            assert!(violations.is_empty(), "{} invariants: {violations:?}", case.name);
        }
    }

    #[test]
    fn builtin_lookup_covers_exactly_the_published_names() {
        for name in builtin_names() {
            assert!(builtin(name).is_some(), "missing builtin {name}");
        }
        assert!(builtin("mystery").is_none());
    }

    #[test]
    fn fig6_assertions_track_the_epsilon_parameter() {
        for eps in [r(1, 10), r(1, 100), r(1, 1000)] {
            let case = fig6_with_epsilon(eps);
            let (_, report) = run_case(&case).unwrap();
            assert!(
                report.passed(),
                "epsilon {eps} failed:\n{:?}",
                report.outcomes.iter().filter(|o| !o.passed).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn failed_assertions_carry_the_observed_value() {
        let case = fig1_no_enforce();
        let trace = simulate(&case.scenario).unwrap();
        let report = check_trace(&trace, &[Assertion::NoMisses, a_response("t1", 1, 99)]);
        assert!(!report.passed());
        assert!(report.outcomes[0].detail.contains("t3"));
        assert!(report.outcomes[1].detail.contains('3'));
    }

    #[test]
    fn enforcement_differences_show_only_where_segments_were_delayed() {
        // The enforced and unenforced runs of the same workload agree on
        // every event up to the first eligibility delay.
        let off = simulate(&fig1_no_enforce().scenario).unwrap();
        let on = simulate(&fig2_enforce().scenario).unwrap();
        let diverge = off
            .events
            .iter()
            .zip(on.events.iter())
            .position(|(a, b)| a != b)
            .expect("the schedules must diverge");
        assert!(off.events[..diverge].iter().all(|e| e.time <= ri(12)));
    }
}
