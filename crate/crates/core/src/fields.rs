//! Grids, wave and density states, scalar field specifications and the
//! observables computed from them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative amplitude a state may carry at either grid edge before the
/// truncation of the propagation integral at the edge stops being justified.
pub const BOUNDARY_DECAY: f64 = 1e-6;

/// Uniform 1D lattice `x_j = x_min + j*dx`, `j = 0..n`, with `dx = (x_max - x_min)/n`.
///
/// The right end is identified with the left end for the spectral path, so
/// `x_max` itself is not a lattice point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 points, got {n}")));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / n as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n.is_power_of_two()
    }

    /// Angular wavenumbers in FFT order: `0, 1, .., n/2-1, -n/2, .., -1` times `2 pi / (n dx)`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * PI / self.extent();
        (0..n)
            .map(|q| if q < (n + 1) / 2 { q } else { q - n })
            .map(|q| q as f64 * dk)
            .collect()
    }

    /// Largest wavenumber the lattice represents.
    pub fn nyquist(&self) -> f64 {
        PI / self.dx
    }
}

pub fn make_grid(x_min: f64, x_max: f64, n: usize) -> Result<Grid> {
    Grid::new(x_min, x_max, n)
}

/// Complex amplitudes on a grid at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl WaveState {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid,
            amplitudes,
            time,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    /// `|psi_j|^2` at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
            time: self.time,
        }
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        self.scaled(Complex64::from_polar(1.0, theta))
    }

    /// Fails when `|psi|` at either edge is not below `BOUNDARY_DECAY * max|psi|`.
    pub fn check_boundary_decay(&self) -> Result<()> {
        let max = self
            .amplitudes
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        if max == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let left = self.amplitudes[0].norm();
        let right = self.amplitudes[self.amplitudes.len() - 1].norm();
        if left >= BOUNDARY_DECAY * max || right >= BOUNDARY_DECAY * max {
            return Err(Error::BoundaryViolation { left, right, max });
        }
        Ok(())
    }

    /// Expectation of the wavenumber, computed exactly on the periodic grid via FFT.
    pub fn mean_momentum(&self) -> Result<f64> {
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let ks = self.grid.wavenumbers();
        let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let weighted: f64 = buf.iter().zip(&ks).map(|(z, k)| k * z.norm_sqr()).sum();
        Ok(weighted / total)
    }

    /// Index range where `|psi| > BOUNDARY_DECAY * max|psi|`.
    pub fn support(&self) -> (usize, usize) {
        let max = self
            .amplitudes
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        let cut = BOUNDARY_DECAY * max;
        let first = self.amplitudes.iter().position(|z| z.norm() > cut).unwrap_or(0);
        let last = self
            .amplitudes
            .iter()
            .rposition(|z| z.norm() > cut)
            .unwrap_or(self.amplitudes.len() - 1);
        (first, last)
    }
}

/// Nonnegative density on a grid at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealState {
    grid: Grid,
    density: Vec<f64>,
    time: f64,
}

impl RealState {
    pub fn new(grid: Grid, density: Vec<f64>, time: f64) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} density samples for a grid of {} points",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(p) = density.iter().find(|&&p| p < 0.0) {
            return Err(Error::InvalidArgument(format!("negative density {p}")));
        }
        Ok(Self {
            grid,
            density,
            time,
        })
    }

    /// Construct without the sign check, for stepping schemes that may leave
    /// round-off sized negative values.
    pub(crate) fn from_raw(grid: Grid, density: Vec<f64>, time: f64) -> Self {
        Self {
            grid,
            density,
            time,
        }
    }

    /// Normal density `N(mean, variance)` sampled on the grid.
    pub fn gaussian(grid: Grid, mean: f64, variance: f64, time: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument("variance must be positive".into()));
        }
        let norm = (2.0 * PI * variance).sqrt();
        let density = (0..grid.len())
            .map(|j| (-(grid.x(j) - mean).powi(2) / (2.0 * variance)).exp() / norm)
            .collect();
        Self::new(grid, density, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `sum_j P_j dx`.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn min(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Anything that carries a nonnegative density on a grid.
pub trait Density {
    fn grid(&self) -> &Grid;
    fn density_at(&self, j: usize) -> f64;
}

impl Density for WaveState {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn density_at(&self, j: usize) -> f64 {
        self.amplitudes[j].norm_sqr()
    }
}

impl Density for RealState {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn density_at(&self, j: usize) -> f64 {
        self.density[j]
    }
}

/// Discrete `integral psi* psi dx` as the plain Riemann sum.
pub fn norm(state: &WaveState) -> f64 {
    state.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * state.grid.dx()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

pub fn moments<S: Density>(state: &S) -> Result<Moments> {
    let grid = state.grid();
    let (mut m0, mut m1) = (0.0, 0.0);
    for j in 0..grid.len() {
        let rho = state.density_at(j);
        m0 += rho;
        m1 += rho * grid.x(j);
    }
    if m0 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mean = m1 / m0;
    let var = (0..grid.len())
        .map(|j| state.density_at(j) * (grid.x(j) - mean).powi(2))
        .sum::<f64>()
        / m0;
    Ok(Moments {
        mean,
        variance: var,
    })
}

/// Normalized packet `exp(-(x-x0)^2/(4 sigma0^2)) exp(i k0 x)`.
pub fn gaussian_packet(grid: &Grid, x0: f64, sigma0: f64, k0: f64) -> Result<WaveState> {
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidArgument("sigma0 must be positive".into()));
    }
    let amps: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let x = grid.x(j);
            let env = (-(x - x0).powi(2) / (4.0 * sigma0 * sigma0)).exp();
            Complex64::from_polar(env, k0 * x)
        })
        .collect();
    let state = WaveState::new(*grid, amps, 0.0)?;
    state.check_boundary_decay()?;
    let scale = 1.0 / state.norm().sqrt();
    Ok(state.scaled(Complex64::new(scale, 0.0)))
}

/// A real scalar field of position.
///
/// Presets carry analytic derivatives; tabulated fields use central
/// differences on their samples with second-order one-sided stencils at the
/// ends, linearly interpolated between nodes. Sums, scalings and products
/// compose by the usual rules so that potentials can be re-expressed in
/// terms of one another without resampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        c: f64,
    },
    /// `k x`
    Linear {
        k: f64,
    },
    /// `amplitude sin(wavenumber x + phase)`
    Sine {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `sum_i coeffs[i] x^i`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Uniform samples on `[x_min, x_max]` (both ends included).
    Tabulated {
        x_min: f64,
        x_max: f64,
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<FieldSpec>,
    },
    Scaled {
        factor: f64,
        field: Box<FieldSpec>,
    },
    Product {
        factors: Vec<FieldSpec>,
    },
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl FieldSpec {
    pub fn zero() -> Self {
        Self::Constant { c: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self::Constant { c }
    }

    pub fn linear(k: f64) -> Self {
        Self::Linear { k }
    }

    pub fn sine(amplitude: f64, wavenumber: f64) -> Self {
        Self::Sine {
            amplitude,
            wavenumber,
            phase: 0.0,
        }
    }

    pub fn cosine(amplitude: f64, wavenumber: f64) -> Self {
        Self::Sine {
            amplitude,
            wavenumber,
            phase: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::Polynomial { coeffs }
    }

    /// `0.5 * kappa * x^2`
    pub fn harmonic(kappa: f64) -> Self {
        Self::Polynomial {
            coeffs: vec![0.0, 0.0, 0.5 * kappa],
        }
    }

    pub fn tabulated(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidArgument(
                "tabulated field needs at least 3 samples".into(),
            ));
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidArgument(
                "tabulated field needs x_max > x_min".into(),
            ));
        }
        Ok(Self::Tabulated {
            x_min,
            x_max,
            values,
        })
    }

    /// Samples `field` at the grid points and at `x_max`.
    pub fn tabulate(field: &FieldSpec, grid: &Grid) -> Self {
        let values = (0..=grid.len()).map(|j| field.value(grid.x(j))).collect();
        Self::Tabulated {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            values,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::Scaled {
            factor,
            field: Box::new(self),
        }
    }

    pub fn plus(self, other: FieldSpec) -> Self {
        Self::Sum {
            terms: vec![self, other],
        }
    }

    pub fn times(self, other: FieldSpec) -> Self {
        Self::Product {
            factors: vec![self, other],
        }
    }

    /// True if the field is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant { c } => *c == 0.0,
            Self::Linear { k } => *k == 0.0,
            Self::Sine {
                amplitude,
                wavenumber,
                phase,
            } => *amplitude == 0.0 || (*wavenumber == 0.0 && phase.sin() == 0.0),
            Self::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            Self::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
            Self::Sum { terms } => terms.iter().all(Self::is_zero),
            Self::Scaled { factor, field } => *factor == 0.0 || field.is_zero(),
            Self::Product { factors } => factors.iter().any(Self::is_zero),
        }
    }

    /// True if the spatial derivative vanishes identically by construction.
    pub fn is_uniform(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::Polynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            Self::Sum { terms } => terms.iter().all(Self::is_uniform),
            Self::Scaled { factor, field } => *factor == 0.0 || field.is_uniform(),
            Self::Product { factors } => {
                factors.iter().any(Self::is_zero) || factors.iter().all(Self::is_uniform)
            }
            other => other.is_zero(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Constant { c } => *c,
            Self::Linear { k } => k * x,
            Self::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude * (wavenumber * x + phase).sin(),
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Self::Tabulated {
                x_min,
                x_max,
                values,
            } => interpolate(*x_min, *x_max, values, x),
            Self::Sum { terms } => terms.iter().map(|f| f.value(x)).sum(),
            Self::Scaled { factor, field } => factor * field.value(x),
            Self::Product { factors } => factors.iter().map(|f| f.value(x)).product(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Linear { k } => *k,
            Self::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude * wavenumber * (wavenumber * x + phase).cos(),
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c),
            Self::Tabulated {
                x_min,
                x_max,
                values,
            } => {
                let slopes = central_slopes(*x_min, *x_max, values);
                interpolate(*x_min, *x_max, &slopes, x)
            }
            Self::Sum { terms } => terms.iter().map(|f| f.derivative(x)).sum(),
            Self::Scaled { factor, field } => factor * field.derivative(x),
            Self::Product { factors } => {
                let values: Vec<f64> = factors.iter().map(|f| f.value(x)).collect();
                (0..factors.len())
                    .map(|i| {
                        factors[i].derivative(x)
                            * values
                                .iter()
                                .enumerate()
                                .filter(|&(j, _)| j != i)
                                .map(|(_, v)| v)
                                .product::<f64>()
                    })
                    .sum()
            }
        }
    }

    /// Central finite difference `(f(x+h) - f(x-h)) / 2h`.
    pub fn central_difference(&self, x: f64, h: f64) -> f64 {
        (self.value(x + h) - self.value(x - h)) / (2.0 * h)
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|j| self.value(grid.x(j))).collect()
    }

    pub fn sample_derivative(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|j| self.derivative(grid.x(j))).collect()
    }

    /// `integral_{x_min}^{x_j} f dx` at every grid point, by three-point
    /// Gauss-Legendre on each cell.
    pub fn antiderivative_on(&self, grid: &Grid) -> Vec<f64> {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let h = grid.dx();
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        out.push(0.0);
        for j in 0..grid.len() - 1 {
            let mid = grid.x(j) + 0.5 * h;
            let cell: f64 = NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(t, w)| w * self.value(mid + 0.5 * h * t))
                .sum();
            acc += 0.5 * h * cell;
            out.push(acc);
        }
        out
    }
}

fn interpolate(x_min: f64, x_max: f64, values: &[f64], x: f64) -> f64 {
    let last = values.len() - 1;
    let h = (x_max - x_min) / last as f64;
    let s = ((x - x_min) / h).clamp(0.0, last as f64);
    let i = (s.floor() as usize).min(last - 1);
    let w = s - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

fn central_slopes(x_min: f64, x_max: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let h = (x_max - x_min) / (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h),
            i if i == n - 1 => {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
            }
            i => (values[i + 1] - values[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Order of the correction factor in the normalization constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Zero,
    #[default]
    First,
}

/// How a propagator departs from the admissible family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// Real constant `D`, real `u`, `a = u'/2`.
    #[default]
    Admissible,
    /// `D + i*imag` in place of `D`.
    #[serde(rename = "complex_D", alias = "complex_d")]
    ComplexD { imag: f64 },
    /// `u(x) + i*imag` in place of `u(x)`.
    ComplexU { imag: f64 },
    /// `D(x)` in place of the constant `D`.
    #[serde(rename = "x_dependent_D", alias = "x_dependent_d")]
    XDependentD { field: FieldSpec },
    /// `a = u'`, no one-half.
    #[serde(rename = "endpoint_T", alias = "endpoint_t")]
    EndpointT,
    /// `a = 0`, `b` kept.
    #[serde(rename = "no_T", alias = "no_t")]
    NoT,
    /// `a` given explicitly.
    PrescribedA { field: FieldSpec },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Admissible => "admissible",
            Self::ComplexD { .. } => "complex_D",
            Self::ComplexU { .. } => "complex_u",
            Self::XDependentD { .. } => "x_dependent_D",
            Self::EndpointT => "endpoint_T",
            Self::NoT => "no_T",
            Self::PrescribedA { .. } => "prescribed_a",
        }
    }

    /// Variants that only alter the real part of `T`.
    pub fn alters_only_t(&self) -> bool {
        matches!(self, Self::EndpointT | Self::NoT | Self::PrescribedA { .. })
    }
}

/// Every parameter of a complex (or real) Gaussian propagator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSpec {
    /// Real diffusivity; the complex kernel uses `i D`.
    pub diffusivity: f64,
    #[serde(default)]
    pub drift: FieldSpec,
    #[serde(default)]
    pub phase: FieldSpec,
    #[serde(default)]
    pub order: Order,
    #[serde(default)]
    pub variant: Variant,
}

impl PropagatorSpec {
    /// First-order admissible propagator.
    pub fn new(diffusivity: f64, drift: FieldSpec, phase: FieldSpec) -> Self {
        Self {
            diffusivity,
            drift,
            phase,
            order: Order::First,
            variant: Variant::Admissible,
        }
    }

    pub fn free(diffusivity: f64) -> Self {
        Self::new(diffusivity, FieldSpec::zero(), FieldSpec::zero())
    }

    pub fn with_order(mut self, order: Order) -> Self {
        self.order = order;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_phase(mut self, phase: FieldSpec) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_drift(mut self, drift: FieldSpec) -> Self {
        self.drift = drift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "diffusivity must be positive, got {}",
                self.diffusivity
            )));
        }
        if self.order == Order::Zero && self.variant.alters_only_t() {
            return Err(Error::Contradictory(format!(
                "variant {} alters the first-order correction but order is zero",
                self.variant.name()
            )));
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.variant == Variant::Admissible
    }

    /// Diffusivity at `x`, complex for the `complex_D` variant.
    pub fn diffusivity_at(&self, x: f64) -> Complex64 {
        match &self.variant {
            Variant::ComplexD { imag } => Complex64::new(self.diffusivity, *imag),
            Variant::XDependentD { field } => Complex64::new(field.value(x), 0.0),
            _ => Complex64::new(self.diffusivity, 0.0),
        }
    }

    /// Drift at `x`, complex for the `complex_u` variant.
    pub fn drift_at(&self, x: f64) -> Complex64 {
        let re = self.drift.value(x);
        match &self.variant {
            Variant::ComplexU { imag } => Complex64::new(re, *imag),
            _ => Complex64::new(re, 0.0),
        }
    }

    /// Real part of the first-order correction `T` at `x`.
    pub fn a_at(&self, x: f64) -> f64 {
        match &self.variant {
            Variant::EndpointT => self.drift.derivative(x),
            Variant::NoT => 0.0,
            Variant::PrescribedA { field } => field.value(x),
            _ => 0.5 * self.drift.derivative(x),
        }
    }

    /// The real part of `T` as a field.
    pub fn a_field(&self) -> FieldSpec {
        match &self.variant {
            Variant::NoT => FieldSpec::zero(),
            Variant::PrescribedA { field } => field.clone(),
            _ => Derivative::of(&self.drift).scaled(if self.variant == Variant::EndpointT {
                1.0
            } else {
                0.5
            }),
        }
    }
}

/// Builds the derivative of a field as another field, where this is closed
/// under the preset algebra; otherwise tabulates it.
pub(crate) struct Derivative;

impl Derivative {
    pub(crate) fn of(field: &FieldSpec) -> FieldSpec {
        match field {
            FieldSpec::Constant { .. } => FieldSpec::zero(),
            FieldSpec::Linear { k } => FieldSpec::constant(*k),
            FieldSpec::Sine {
                amplitude,
                wavenumber,
                phase,
            } => FieldSpec::Sine {
                amplitude: amplitude * wavenumber,
                wavenumber: *wavenumber,
                phase: phase + std::f64::consts::FRAC_PI_2,
            },
            FieldSpec::Polynomial { coeffs } => FieldSpec::Polynomial {
                coeffs: coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| i as f64 * c)
                    .collect(),
            },
            FieldSpec::Tabulated {
                x_min,
                x_max,
                values,
            } => FieldSpec::Tabulated {
                x_min: *x_min,
                x_max: *x_max,
                values: central_slopes(*x_min, *x_max, values),
            },
            FieldSpec::Sum { terms } => FieldSpec::Sum {
                terms: terms.iter().map(Self::of).collect(),
            },
            FieldSpec::Scaled { factor, field } => Self::of(field).scaled(*factor),
            FieldSpec::Product { factors } => FieldSpec::Sum {
                terms: (0..factors.len())
                    .map(|i| FieldSpec::Product {
                        factors: factors
                            .iter()
                            .enumerate()
                            .map(|(j, f)| if i == j { Self::of(f) } else { f.clone() })
                            .collect(),
                    })
                    .collect(),
            },
        }
    }
}

/// Shared FFT plans for a fixed length.
#[derive(Clone)]
pub(crate) struct FftPair {
    pub forward: Arc<dyn rustfft::Fft<f64>>,
    pub inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl FftPair {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}
