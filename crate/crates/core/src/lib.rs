//! Complex Gaussian propagators on a 1D grid: kernels, stepping, norm audits,
//! Fresnel moment checks, reference solvers and a real random-walk sampler.

pub mod audit;
pub mod error;
pub mod fields;
pub mod kernel;
pub mod moments;
pub mod numerics;
pub mod propagate;
pub mod reference;
pub mod walk;

pub use error::{Error, Result};
pub use fields::{
    gaussian_packet, make_grid, moments, norm, FieldSpec, Grid, Moments, Order, PropagatorSpec,
    RealState, Variant, WaveState,
};
pub use propagate::{evolve, step_dense, step_spectral, validity_check, StepMethod, Trajectory};
