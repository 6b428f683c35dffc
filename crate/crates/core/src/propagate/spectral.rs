//! Gauge-factorized fast path.
//!
//! With `Lambda' = u`, the admissible generator `(iD/2)(d/dx - iu/D)^2 + i u^2 / 2D - i b`
//! is conjugate to the free one by `exp(i Lambda / D)`. One step is therefore
//! a pointwise gauge, the exact free multiplier `exp(-i D eps k^2 / 2)`, and
//! the inverse gauge. Every factor is unimodular, so the step is unitary.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{FftPair, Grid, Order, PropagatorSpec, WaveState};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub struct SpectralOperator {
    grid: Grid,
    eps: f64,
    pre: Vec<Complex64>,
    multiplier: Vec<Complex64>,
    post: Vec<Complex64>,
    fft: FftPair,
}

impl SpectralOperator {
    pub fn build(grid: &Grid, eps: f64, spec: &PropagatorSpec) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::NonPositiveStep(eps));
        }
        spec.validate()?;
        if !spec.is_admissible() {
            return Err(Error::NonAdmissible(format!(
                "spectral stepping supports only the admissible family, got {}",
                spec.variant.name()
            )));
        }
        if !grid.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "spectral stepping needs a power-of-two point count, got {}",
                grid.len()
            )));
        }
        let n = grid.len();
        let d = spec.diffusivity;
        let lambda = spec.drift.antiderivative_on(grid);
        let pre = (0..n)
            .map(|j| {
                let x = grid.x(j);
                let u = spec.drift.value(x);
                let source = match spec.order {
                    Order::First => (-I * eps * spec.phase.value(x)).exp(),
                    Order::Zero => Complex64::new((0.5 * eps * spec.drift.derivative(x)).exp(), 0.0),
                };
                (I * (u * u * eps / 2.0 - lambda[j]) / d).exp() * source / n as f64
            })
            .collect();
        let post = lambda.iter().map(|l| (I * l / d).exp()).collect();
        let multiplier = grid
            .wavenumbers()
            .iter()
            .map(|k| (-I * d * eps * k * k / 2.0).exp())
            .collect();
        Ok(Self {
            grid: *grid,
            eps,
            pre,
            multiplier,
            post,
            fft: FftPair::new(n),
        })
    }

    pub fn apply(&self, state: &WaveState) -> Result<WaveState> {
        if state.grid() != &self.grid {
            return Err(Error::InvalidArgument("state lives on a different grid".into()));
        }
        let mut buf: Vec<Complex64> = state
            .amplitudes()
            .iter()
            .zip(&self.pre)
            .map(|(p, f)| p * f)
            .collect();
        self.fft.forward.process(&mut buf);
        buf.iter_mut().zip(&self.multiplier).for_each(|(v, m)| *v *= m);
        self.fft.inverse.process(&mut buf);
        buf.iter_mut().zip(&self.post).for_each(|(v, g)| *v *= g);
        WaveState::new(self.grid, buf, state.time() + self.eps)
    }
}

/// One spectral step.
pub fn step_spectral(state: &WaveState, eps: f64, spec: &PropagatorSpec) -> Result<WaveState> {
    state.check_boundary_decay()?;
    SpectralOperator::build(state.grid(), eps, spec)?.apply(state)
}
