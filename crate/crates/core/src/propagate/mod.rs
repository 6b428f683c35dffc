//! Stepping a state with the propagator, by dense quadrature or by the
//! spectral factorization, and iterating.

mod dense;
mod real;
mod spectral;
mod validity;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{PropagatorSpec, WaveState};

pub use dense::{
    step_dense, step_dense_with, CorrectionForm, DenseOperator, DenseOptions, QuadratureRule,
    TPlacement,
};
pub use real::{evolve_real, step_real, RealOperator};
pub use spectral::{step_spectral, SpectralOperator};
pub use validity::{validity_check, validity_check_for_state, ValidityReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMethod {
    #[default]
    Dense,
    Spectral,
}

/// Time-ordered states and their norms.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<WaveState>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &WaveState {
        self.states.last().expect("a trajectory holds at least the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time()).collect()
    }
}

enum Stepper {
    Dense(DenseOperator, QuadratureRule),
    Spectral(SpectralOperator),
}

impl Stepper {
    fn step(&self, state: &WaveState, spec: &PropagatorSpec, eps: f64) -> Result<WaveState> {
        state.check_boundary_decay()?;
        match self {
            Self::Dense(op, rule) => {
                dense::ensure_resolved(&validity_check_for_state(state, eps, spec)?, *rule)?;
                op.apply(state)
            }
            Self::Spectral(op) => op.apply(state),
        }
    }
}

pub fn evolve(
    state: &WaveState,
    eps: f64,
    n_steps: usize,
    spec: &PropagatorSpec,
    method: StepMethod,
) -> Result<Trajectory> {
    evolve_with(state, eps, n_steps, spec, method, DenseOptions::default())
}

/// Iterates one operator, built once; aborts on the first step whose input
/// breaks the boundary-decay invariant or is not resolved.
pub fn evolve_with(
    state: &WaveState,
    eps: f64,
    n_steps: usize,
    spec: &PropagatorSpec,
    method: StepMethod,
    options: DenseOptions,
) -> Result<Trajectory> {
    let mut states = vec![state.clone()];
    let mut norms = vec![state.norm()];
    if n_steps == 0 {
        return Ok(Trajectory { states, norms });
    }
    let stepper = match method {
        StepMethod::Dense => Stepper::Dense(
            DenseOperator::build(state.grid(), eps, spec, options)?,
            options.rule,
        ),
        StepMethod::Spectral => Stepper::Spectral(SpectralOperator::build(state.grid(), eps, spec)?),
    };
    for _ in 0..n_steps {
        let next = stepper.step(states.last().unwrap(), spec, eps)?;
        norms.push(next.norm());
        states.push(next);
    }
    Ok(Trajectory { states, norms })
}

/// `sqrt(sum |a - b|^2 dx)`.
pub fn l2_distance(a: &WaveState, b: &WaveState) -> f64 {
    let s: f64 = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    (s * a.grid().dx()).sqrt()
}
