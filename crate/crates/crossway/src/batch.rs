//! Batch execution of independent scenarios. Results are keyed by scenario
//! index, so the parallel and sequential paths produce identical output.

use crate::sim::{run_scenario, RunResult, ScenarioSpec};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Run one scenario, converting a panic into a failed result so a batch
/// survives a bad case.
pub fn run_guarded(spec: &ScenarioSpec) -> RunResult {
    catch_unwind(AssertUnwindSafe(|| run_scenario(spec)))
        .unwrap_or_else(|_| RunResult::failed_placeholder(spec.agents.len()))
}

/// Sequential execution, always available.
pub fn run_batch_sequential(specs: &[ScenarioSpec]) -> Vec<RunResult> {
    specs.iter().map(run_guarded).collect()
}

/// Data-parallel execution over the current rayon pool. Order-preserving.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(specs: &[ScenarioSpec]) -> Vec<RunResult> {
    use rayon::prelude::*;
    specs.par_iter().map(run_guarded).collect()
}

/// Run a batch with an optional worker-count override. `jobs = Some(1)`
/// forces the sequential path; without the `parallel` feature every call is
/// sequential.
pub fn run_batch(specs: &[ScenarioSpec], jobs: Option<usize>) -> Vec<RunResult> {
    match jobs {
        Some(0) | Some(1) => run_batch_sequential(specs),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(|| run_batch_parallel(specs)),
        #[cfg(feature = "parallel")]
        None => run_batch_parallel(specs),
        #[cfg(not(feature = "parallel"))]
        _ => run_batch_sequential(specs),
    }
}
