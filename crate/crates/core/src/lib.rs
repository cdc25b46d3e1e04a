//! Simulation and analysis of fixed-priority real-time task sets whose
//! tasks may self-suspend between computation segments.
//!
//! The crate provides:
//!
//! - an exact (rational-arithmetic) discrete-event simulator for
//!   partitioned preemptive scheduling ([`sched`]),
//! - an inter-release separation enforcer that spaces consecutive jobs'
//!   segments at least one period apart ([`enforcer`]),
//! - shared-resource semantics connecting enforcement and locking
//!   ([`locking`]),
//! - response-time analyses: jitter-aware RTA, a segmented-task-to-
//!   deferrable-task transformation, an exact brute-force bound for a
//!   restricted case, and a coarse bound under locking ([`analysis`]),
//! - curated reproduction scenarios with assertion checking ([`repro`]),
//! - JSON scenario I/O, deterministic trace export, and ASCII schedule
//!   rendering ([`cli_io`]).

pub mod analysis;
pub mod cli_io;
pub mod enforcer;
pub mod locking;
pub mod model;
pub mod repro;
pub mod sched;
