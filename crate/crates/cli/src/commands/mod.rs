pub mod audit;
pub mod compare;
pub mod evolve;
pub mod moments;
pub mod walk;

use std::fmt;

use gaussprop::propagate::ValidityReport;

/// Thresholds a run checked and missed. Artifacts are still written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

/// The grid cannot resolve the requested step.
#[derive(Debug)]
pub struct ValidityFailure(pub ValidityReport);

impl fmt::Display for ValidityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid cannot resolve the step: sampled phase step {:.3} rad exceeds pi",
            self.0.sampled_phase_step
        )
    }
}

impl std::error::Error for ValidityFailure {}
