//! Whether a grid can carry one propagation step.
//!
//! The quadratic kernel phase `eta^2 / 2 D eps` advances by `|eta| dx / (D eps)`
//! between neighbouring samples; a Riemann sum over the kernel needs that below
//! `pi`. The band-limited rule integrates the chirp exactly and only needs the
//! remaining integrand, drift factor times state, to be resolved.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fields::{Grid, Order, PropagatorSpec, WaveState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Largest displacement considered.
    pub window: f64,
    /// Largest adjacent-sample increment of the quadratic kernel phase (rad).
    pub quadratic_phase_step: f64,
    /// Largest adjacent-sample phase increment of the non-chirp integrand (rad).
    pub sampled_phase_step: f64,
    /// Smallest `eps` for which `quadratic_phase_step <= pi`.
    pub recommended_min_eps: f64,
    pub point_sampled_ok: bool,
    pub band_limited_ok: bool,
    /// The spectral multiplier is exact on the periodic grid.
    pub spectral_ok: bool,
}

impl ValidityReport {
    /// Whether the default dense rule can run.
    pub fn passes(&self) -> bool {
        self.band_limited_ok
    }
}

/// Grid-level diagnostic over the half-window `|eta| <= extent / 2`, with the
/// state's own phase assumed resolved.
pub fn validity_check(grid: &Grid, eps: f64, spec: &PropagatorSpec) -> Result<ValidityReport> {
    let all: Vec<usize> = (0..grid.len()).collect();
    report(grid, eps, spec, grid.extent() / 2.0, &all, grid.extent(), 0.0)
}

/// Diagnostic restricted to where `|psi| > 1e-6 max|psi|`.
///
/// The quadratic step uses the support diameter. The sampled step covers
/// every output point against every source point in the support, and adds
/// the largest phase increment of the state itself.
pub fn validity_check_for_state(
    state: &WaveState,
    eps: f64,
    spec: &PropagatorSpec,
) -> Result<ValidityReport> {
    let grid = state.grid();
    let (lo, hi) = state.support();
    let diameter = (hi - lo) as f64 * grid.dx();
    let reach = (grid.x(hi) - grid.x_min()).max(grid.x_max() - grid.x(lo));
    let psi = state.amplitudes();
    let own = (lo..hi)
        .map(|j| (psi[j + 1] * psi[j].conj()).arg().abs())
        .fold(0.0, f64::max);
    let source: Vec<usize> = (lo..=hi).collect();
    report(grid, eps, spec, diameter, &source, reach, own)
}

fn report(
    grid: &Grid,
    eps: f64,
    spec: &PropagatorSpec,
    window: f64,
    source: &[usize],
    reach: f64,
    own_step: f64,
) -> Result<ValidityReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(crate::error::Error::NonPositiveStep(eps));
    }
    spec.validate()?;
    let dx = grid.dx();
    let d_min = (0..grid.len())
        .map(|j| spec.diffusivity_at(grid.x(j)).norm())
        .fold(f64::INFINITY, f64::min);
    let quadratic = window * dx / (d_min * eps);

    // Local wavenumber of exp(-i (y - x) u(y)/D + i u(y)^2 eps / 2D) exp(-i eps b(y)),
    // bounded over output points x within `reach` of the source y.
    let drift_rate = source
        .iter()
        .map(|&k| {
            let y = grid.x(k);
            let d = spec.diffusivity_at(y);
            let u = spec.drift_at(y);
            let du = Complex64::new(spec.drift.derivative(y), 0.0);
            let b_rate = match spec.order {
                Order::First => eps * spec.phase.derivative(y).abs(),
                Order::Zero => 0.0,
            };
            (u / d).norm() + reach * (du / d).norm() + eps * (u * du / d).norm() + b_rate
        })
        .fold(0.0, f64::max);
    let sampled = drift_rate * dx + own_step;

    Ok(ValidityReport {
        window,
        quadratic_phase_step: quadratic,
        sampled_phase_step: sampled,
        recommended_min_eps: window * dx / (d_min * PI),
        point_sampled_ok: quadratic <= PI,
        band_limited_ok: sampled <= PI,
        spectral_ok: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gaussian_packet, FieldSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn full_window_example() {
        let grid = Grid::new(-20.0, 20.0, 512).unwrap();
        let r = validity_check(&grid, 0.05, &PropagatorSpec::free(1.0)).unwrap();
        assert_abs_diff_eq!(r.quadratic_phase_step, 31.25, epsilon = 1e-12);
        assert!(!r.point_sampled_ok);
        assert!(r.band_limited_ok);
        assert!(r.spectral_ok);
        assert_abs_diff_eq!(r.recommended_min_eps, 0.05 * 31.25 / PI, epsilon = 1e-12);
    }

    #[test]
    fn support_window_is_smaller() {
        let grid = Grid::new(-20.0, 20.0, 512).unwrap();
        let psi = gaussian_packet(&grid, 0.0, 0.5, 0.0).unwrap();
        let spec = PropagatorSpec::free(1.0);
        let full = validity_check(&grid, 0.05, &spec).unwrap();
        let local = validity_check_for_state(&psi, 0.05, &spec).unwrap();
        assert!(local.quadratic_phase_step < full.quadratic_phase_step);
    }

    #[test]
    fn strong_drift_is_unresolved() {
        let grid = Grid::new(-20.0, 20.0, 128).unwrap();
        let spec = PropagatorSpec::new(1.0, FieldSpec::linear(2.0), FieldSpec::zero());
        let r = validity_check(&grid, 0.01, &spec).unwrap();
        assert!(!r.band_limited_ok);
    }
}
