//! Density propagation with the real drift-diffusion kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Grid, PropagatorSpec, RealState};
use crate::kernel::real_kernel;

/// Kernel columns are cut at this many standard deviations.
const CUTOFF_SIGMAS: f64 = 12.0;

/// `P'(x_j) = sum_k dx Pi(x_j - x_k, eps; x_k) P(x_k)`.
///
/// Each column is normalized by its sum over the infinite lattice, so mass
/// is conserved exactly apart from what leaves through the edges.
pub struct RealOperator {
    grid: Grid,
    eps: f64,
    /// Per source column: first target row and the weights from there.
    columns: Vec<(usize, Vec<f64>)>,
}

impl RealOperator {
    pub fn build(grid: &Grid, eps: f64, spec: &PropagatorSpec) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::NonPositiveStep(eps));
        }
        spec.validate()?;
        let dx = grid.dx();
        let sigma = (spec.diffusivity * eps).sqrt();
        if sigma < dx {
            return Err(Error::InvalidArgument(format!(
                "kernel width {sigma} is below the grid spacing {dx}; increase eps or refine"
            )));
        }
        let n = grid.len() as i64;
        let columns = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let y = grid.x(k);
                let centre = k as f64 + spec.drift.value(y) * eps / dx;
                let half = CUTOFF_SIGMAS * sigma / dx;
                let lo = (centre - half).floor() as i64;
                let hi = (centre + half).ceil() as i64;
                let raw: Vec<f64> = (lo..=hi)
                    .map(|j| real_kernel((j - k as i64) as f64 * dx, eps, y, spec).unwrap() * dx)
                    .collect();
                let total: f64 = raw.iter().sum();
                let first = lo.max(0);
                let last = hi.min(n - 1);
                let weights = if first > last {
                    Vec::new()
                } else {
                    raw[(first - lo) as usize..=(last - lo) as usize]
                        .iter()
                        .map(|w| w / total)
                        .collect()
                };
                (first.max(0) as usize, weights)
            })
            .collect();
        Ok(Self {
            grid: *grid,
            eps,
            columns,
        })
    }

    pub fn apply(&self, state: &RealState) -> Result<RealState> {
        if state.grid() != &self.grid {
            return Err(Error::InvalidArgument("state lives on a different grid".into()));
        }
        let mut out = vec![0.0; self.grid.len()];
        for ((first, weights), p) in self.columns.iter().zip(state.density()) {
            for (o, w) in out[*first..].iter_mut().zip(weights) {
                *o += w * p;
            }
        }
        RealState::new(self.grid, out, state.time() + self.eps)
    }
}

pub fn step_real(state: &RealState, eps: f64, spec: &PropagatorSpec) -> Result<RealState> {
    RealOperator::build(state.grid(), eps, spec)?.apply(state)
}

/// `n_steps` real-kernel steps; returns every state including the initial one.
pub fn evolve_real(
    state: &RealState,
    eps: f64,
    n_steps: usize,
    spec: &PropagatorSpec,
) -> Result<Vec<RealState>> {
    let op = RealOperator::build(state.grid(), eps, spec)?;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(state.clone());
    for _ in 0..n_steps {
        let next = op.apply(states.last().unwrap())?;
        states.push(next);
    }
    Ok(states)
}
