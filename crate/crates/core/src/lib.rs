//! Timed colored Petri net execution with a parameterized non-preemptive
//! single-processor scheduler net.
//!
//! * [`workload`]: process records, policies, workload files.
//! * [`kernel`]: the generic timed CPN engine.
//! * [`sched`]: the scheduler net built on the kernel.
//! * [`metrics`]: waiting/turnaround/idle metrics and Gantt segments.
//! * [`oracle`]: a direct event-driven scheduler for differential testing.
//! * [`gen`]: seeded random workloads.
//! * [`cli`]: the `tcpn` command-line front end.

pub mod cli;
pub mod gen;
pub mod kernel;
pub mod metrics;
pub mod oracle;
pub mod sched;
pub mod workload;

pub use workload::{builtin_table_workload, Policy, PriorityPair, Process, Time, Workload};
