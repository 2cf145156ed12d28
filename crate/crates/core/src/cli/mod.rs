//! Benchmark harness behind the `stochrelax` binary.

pub mod config;
pub mod demo;
pub mod registry;
pub mod run;

pub use config::{AlgorithmKind, AlgorithmSection, BasisChoice, ProblemSpec, RunConfig, RunSection, TraceFormat};
pub use demo::{binomial_demo, mgf_demo, orlicz_demo, DemoReport};
pub use registry::{registry_build, ProblemInstance, PROBLEM_NAMES};
pub use run::{build_basis, run_command, run_replicate, ReplicateSummary, RunOutcome, SUMMARY_COLUMNS};
