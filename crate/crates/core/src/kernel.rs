//! Point evaluation of the real and complex Gaussian propagators.
//!
//! The complex kernel is
//!
//! ```text
//! Pi(eta, eps; x) = (2 pi i D eps)^(-1/2) exp(-eps a(x)) exp(-i eps b(x)) exp(i (eta - u(x) eps)^2 / (2 D eps))
//! ```
//!
//! with the correction factors present only at first order. The square root
//! is taken on the principal branch, so `i^(1/2) = exp(i pi/4)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{Order, PropagatorSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A kernel value together with the factors it was assembled from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEvaluation {
    pub value: Complex64,
    /// `K^{-1}` at zero order, `(2 pi i D eps)^{-1/2}`.
    pub normalization: Complex64,
    /// `exp(i (eta - u eps)^2 / (2 D eps))`.
    pub phase_quadratic: Complex64,
    /// `exp(-eps a) exp(-i eps b)`, or 1 at zero order.
    pub t_correction: Complex64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(eps))
    }
}

/// Real drift-diffusion propagator: density of a step `eta` taken from `x` in time `eps`.
pub fn real_kernel(eta: f64, eps: f64, x: f64, spec: &PropagatorSpec) -> Result<f64> {
    check_eps(eps)?;
    let d = spec.diffusivity;
    let u = spec.drift.value(x);
    let var = d * eps;
    Ok((-(eta - u * eps).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// `(2 pi i D eps)^{1/2}` on the principal branch for complex `D`.
pub fn zero_order_constant(diffusivity: Complex64, eps: f64) -> Complex64 {
    (2.0 * PI * I * diffusivity * eps).sqrt()
}

/// The normalization constant `K`, at the requested order.
///
/// First order uses the linear form `K0 (1 + eps T)`.
pub fn normalization_constant(
    spec: &PropagatorSpec,
    eps: f64,
    x: f64,
    order: Order,
) -> Result<Complex64> {
    check_eps(eps)?;
    let k0 = zero_order_constant(spec.diffusivity_at(x), eps);
    Ok(match order {
        Order::Zero => k0,
        Order::First => k0 * (1.0 + eps * t_correction(spec, x)),
    })
}

/// `T = a + i b`, with `a` set by the variant (`u'/2` when admissible).
pub fn t_correction(spec: &PropagatorSpec, x: f64) -> Complex64 {
    Complex64::new(spec.a_at(x), spec.phase.value(x))
}

/// The complex kernel with `u`, `D`, `a` and `b` all evaluated at `x`.
pub fn complex_kernel(eta: f64, eps: f64, x: f64, spec: &PropagatorSpec) -> Result<KernelEvaluation> {
    check_eps(eps)?;
    spec.validate()?;
    let d = spec.diffusivity_at(x);
    let u = spec.drift_at(x);
    let normalization = zero_order_constant(d, eps).inv();
    let phase_quadratic = (I * (eta - u * eps).powi(2) / (2.0 * d * eps)).exp();
    let t_correction = match spec.order {
        Order::Zero => Complex64::new(1.0, 0.0),
        Order::First => (-eps * t_correction(spec, x)).exp(),
    };
    Ok(KernelEvaluation {
        value: normalization * phase_quadratic * t_correction,
        normalization,
        phase_quadratic,
        t_correction,
    })
}
