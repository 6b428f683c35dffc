//! Fresnel moments `integral eta^n exp(i eta^2 / 2 D eps) d eta` by regularized quadrature.
//!
//! The integrals converge only conditionally. Each is computed with a
//! Gaussian regulator `exp(-delta eta^2)` at `delta`, `delta/2` and `delta/4`,
//! by a trapezoid rule on samples paired at `+eta` and `-eta`, and the
//! `delta -> 0` limit is taken by Richardson extrapolation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::PropagatorSpec;
use crate::kernel::zero_order_constant;
use crate::numerics::loglog_slope;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Minimum of `delta L^2` over the regulator ladder.
pub const TAIL_EXPONENT: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularizedQuadrature {
    /// Largest regulator on the ladder.
    pub delta: f64,
    /// Window `[-L, L]`.
    pub half_width: f64,
    /// Trapezoid intervals across the window (even).
    pub samples: usize,
}

impl RegularizedQuadrature {
    /// Checks `(delta / 4) L^2 >= 25`, so the tail is negligible at every rung.
    pub fn new(delta: f64, half_width: f64, samples: usize) -> Result<Self> {
        if !(delta > 0.0 && half_width > 0.0) {
            return Err(Error::Quadrature("regulator and window must be positive".into()));
        }
        if delta / 4.0 * half_width * half_width < TAIL_EXPONENT {
            return Err(Error::Quadrature(format!(
                "delta/4 * L^2 = {} is below {TAIL_EXPONENT}",
                delta / 4.0 * half_width * half_width
            )));
        }
        if samples < 2 || !samples.is_multiple_of(2) {
            return Err(Error::Quadrature("sample count must be even and at least 2".into()));
        }
        Ok(Self {
            delta,
            half_width,
            samples,
        })
    }

    /// Defaults scaled to the chirp `1 / (2 D eps)`: `delta = 0.005 / (2 D eps)`,
    /// `(delta/4) L^2 = 45`, 65536 intervals.
    pub fn for_kernel(diffusivity: f64, eps: f64) -> Result<Self> {
        let alpha = 1.0 / (2.0 * diffusivity * eps);
        let delta = 0.005 * alpha;
        Self::new(delta, (45.0 / (delta / 4.0)).sqrt(), 65_536)
    }

    pub fn ladder(&self) -> [f64; 3] {
        [self.delta, self.delta / 2.0, self.delta / 4.0]
    }

    /// `integral f(eta) exp(i alpha eta^2 - delta eta^2) d eta` at one regulator.
    fn trapezoid(&self, alpha: f64, delta: f64, f: &(dyn Fn(f64) -> Complex64 + Sync)) -> Complex64 {
        let half = self.samples / 2;
        let h = self.half_width / half as f64;
        let c = Complex64::new(-delta, alpha);
        let pair = |j: usize| {
            let eta = j as f64 * h;
            let g = (c * eta * eta).exp();
            (f(eta) + f(-eta)) * g
        };
        let interior: Complex64 = (1..half)
            .into_par_iter()
            .map(pair)
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        (f(0.0) + interior + pair(half) * 0.5) * h
    }

    /// Richardson limit `delta -> 0` from the three rungs.
    fn extrapolate(&self, alpha: f64, f: &(dyn Fn(f64) -> Complex64 + Sync)) -> Complex64 {
        let v: Vec<Complex64> = self
            .ladder()
            .par_iter()
            .map(|&d| self.trapezoid(alpha, d, f))
            .collect();
        // Eliminate the O(delta) and O(delta^2) terms of a halving ladder.
        (v[0] - 6.0 * v[1] + 8.0 * v[2]) / 3.0
    }
}

/// Closed form of the `n`-th Fresnel moment on the principal branch.
pub fn fresnel_closed_form(n: u32, diffusivity: f64, eps: f64) -> Result<Complex64> {
    let k = zero_order_constant(Complex64::new(diffusivity, 0.0), eps);
    let de = diffusivity * eps;
    match n {
        0 => Ok(k),
        1 => Ok(Complex64::new(0.0, 0.0)),
        2 => Ok(k * I * de),
        4 => Ok(k * (-3.0 * de * de)),
        _ => Err(Error::InvalidArgument(format!("moment order {n} is not one of 0, 1, 2, 4"))),
    }
}

/// `integral eta^n exp(i eta^2 / 2 D eps) d eta` for `n` in {0, 1, 2, 4}.
pub fn fresnel_moment(n: u32, diffusivity: f64, eps: f64, quad: &RegularizedQuadrature) -> Result<Complex64> {
    if !matches!(n, 0 | 1 | 2 | 4) {
        return Err(Error::InvalidArgument(format!("moment order {n} is not one of 0, 1, 2, 4")));
    }
    check(diffusivity, eps)?;
    let alpha = 1.0 / (2.0 * diffusivity * eps);
    Ok(quad.extrapolate(alpha, &|eta: f64| Complex64::new(eta.powi(n as i32), 0.0)))
}

/// Square-root branch used for `K`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Branch {
    /// `i^(1/2) = exp(i pi / 4)`.
    #[default]
    Principal,
    /// `i^(1/2) = exp(-i pi / 4)`.
    Other,
}

/// `K^{-1} integral exp(i eta^2 / 2 D eps) d eta`, which is 1 on the principal branch.
pub fn unit_mass_check(diffusivity: f64, eps: f64, quad: &RegularizedQuadrature) -> Result<Complex64> {
    unit_mass_check_on(diffusivity, eps, quad, Branch::Principal)
}

pub fn unit_mass_check_on(
    diffusivity: f64,
    eps: f64,
    quad: &RegularizedQuadrature,
    branch: Branch,
) -> Result<Complex64> {
    let m0 = fresnel_moment(0, diffusivity, eps, quad)?;
    let modulus = (2.0 * PI * diffusivity * eps).sqrt();
    let k = match branch {
        Branch::Principal => Complex64::from_polar(modulus, PI / 4.0),
        Branch::Other => Complex64::from_polar(modulus, -PI / 4.0),
    };
    Ok(m0 / k)
}

/// `K^{-1} integral u+^2 [-eta^2 / 2D^2 + i eps / 2D] exp(i eta^2 / 2 D eps) d eta`
/// with `u+ = u(x) + eta u'(x)`: the second-order drift terms of the
/// normalization expansion, which cancel up to `u'^2 eps^2`.
pub fn cancellation_check(
    spec: &PropagatorSpec,
    x: f64,
    eps: f64,
    quad: &RegularizedQuadrature,
) -> Result<Complex64> {
    let d = spec.diffusivity;
    check(d, eps)?;
    let u = spec.drift.value(x);
    let du = spec.drift.derivative(x);
    let alpha = 1.0 / (2.0 * d * eps);
    let integral = quad.extrapolate(alpha, &|eta: f64| {
        let up = u + eta * du;
        up * up * Complex64::new(-eta * eta / (2.0 * d * d), eps / (2.0 * d))
    });
    Ok(integral / zero_order_constant(Complex64::new(d, 0.0), eps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CancellationLadder {
    pub eps: Vec<f64>,
    pub residual: Vec<f64>,
    /// Least-squares slope of `log |residual|` on `log eps`.
    pub order: f64,
}

/// `cancellation_check` over an `eps` ladder, each rung with its own default quadrature.
pub fn cancellation_ladder(spec: &PropagatorSpec, x: f64, eps: &[f64]) -> Result<CancellationLadder> {
    let residual = eps
        .iter()
        .map(|&e| {
            let q = RegularizedQuadrature::for_kernel(spec.diffusivity, e)?;
            Ok(cancellation_check(spec, x, e, &q)?.norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CancellationLadder {
        eps: eps.to_vec(),
        order: loglog_slope(eps, &residual),
        residual,
    })
}

fn check(diffusivity: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveStep(eps));
    }
    if !(diffusivity > 0.0) {
        return Err(Error::InvalidArgument("diffusivity must be positive".into()));
    }
    Ok(())
}
