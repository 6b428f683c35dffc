//! Direct quadrature of `psi(x, t+eps) = integral Pi(eta, eps; x+eta) psi(x+eta) d eta`.
//!
//! The kernel splits, with no approximation, into the quadratic chirp
//! `exp(i eta^2 / 2 D eps)` times a factor that varies on the scale of the
//! drift, `exp(-i eta u/D + i u^2 eps / 2D)`, times the correction factors.
//! Under [`QuadratureRule::BandLimited`] the chirp is integrated exactly
//! against the band-limited (sinc) interpolant of everything else, which is
//! sampled on the grid. Under [`QuadratureRule::PointSampled`] the whole
//! kernel is sampled, which needs the chirp resolved by the grid.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fields::{Grid, Order, PropagatorSpec, WaveState};
use crate::kernel::zero_order_constant;
use crate::numerics::composite_gauss_legendre;

use super::validity::{validity_check_for_state, ValidityReport};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Chirp integrated exactly against the sinc interpolant of the remaining factors.
    #[default]
    BandLimited,
    /// Riemann sum of the sampled kernel.
    PointSampled,
}

/// Where the first-order correction factors are evaluated inside the integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TPlacement {
    /// At the source point `x + eta`, where the kernel itself is evaluated.
    #[default]
    Source,
    /// At the output point `x`.
    Target,
}

/// How the first-order correction enters the kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CorrectionForm {
    /// `exp(-eps T)`.
    #[default]
    Exponential,
    /// `1 - eps T`; differs from the exponential at `O(eps^2)`.
    Linear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DenseOptions {
    pub rule: QuadratureRule,
    pub placement: TPlacement,
    pub correction: CorrectionForm,
    /// Treat the grid as a ring: circulant chirp weights and minimum-image
    /// displacements. Off means zero amplitude beyond the grid edges.
    /// Only consistent with zero drift, where it reproduces the spectral step.
    pub periodic: bool,
}

/// The propagation step as an explicit `n x n` matrix, for one grid, `eps` and spec.
pub struct DenseOperator {
    grid: Grid,
    eps: f64,
    options: DenseOptions,
    matrix: Vec<Complex64>,
}

impl DenseOperator {
    pub fn build(grid: &Grid, eps: f64, spec: &PropagatorSpec, options: DenseOptions) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::NonPositiveStep(eps));
        }
        spec.validate()?;
        let n = grid.len();
        let xs = grid.points();
        let d: Vec<Complex64> = xs.iter().map(|&x| spec.diffusivity_at(x)).collect();
        if d.iter().any(|v| !(v.re > 0.0)) {
            return Err(Error::InvalidArgument(
                "diffusivity must have positive real part on the grid".into(),
            ));
        }
        let u: Vec<Complex64> = xs.iter().map(|&x| spec.drift_at(x)).collect();
        let correction: Vec<Complex64> = match spec.order {
            Order::Zero => vec![Complex64::new(1.0, 0.0); n],
            Order::First => xs
                .iter()
                .map(|&x| {
                    let t = Complex64::new(spec.a_at(x), spec.phase.value(x));
                    match options.correction {
                        CorrectionForm::Exponential => (-eps * t).exp(),
                        CorrectionForm::Linear => 1.0 - eps * t,
                    }
                })
                .collect(),
        };
        // Source-side part of the drift factor that does not involve eta.
        let source: Vec<Complex64> = (0..n)
            .map(|k| {
                let c = (I * u[k] * u[k] * eps / (2.0 * d[k])).exp();
                match options.placement {
                    TPlacement::Source => c * correction[k],
                    TPlacement::Target => c,
                }
            })
            .collect();

        let weights = ChirpWeights::new(grid, eps, &d, options)?;
        let dx = grid.dx();
        let extent = grid.extent();
        let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
        matrix.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (k, m) in row.iter_mut().enumerate() {
                let mut eta = (k as f64 - j as f64) * dx;
                if options.periodic {
                    eta -= extent * (eta / extent).round();
                }
                let w = weights.get(j, k, eta);
                *m = w * (-I * eta * u[k] / d[k]).exp() * source[k];
            }
            if options.placement == TPlacement::Target {
                row.iter_mut().for_each(|m| *m *= correction[j]);
            }
        });
        Ok(Self {
            grid: *grid,
            eps,
            options,
            matrix,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn options(&self) -> DenseOptions {
        self.options
    }

    /// Entry `(j, k)`: weight of source point `k` in output point `j`.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.matrix[j * self.grid.len() + k]
    }

    /// One step. Rows are summed in ascending source index, so the result
    /// does not depend on the thread count.
    pub fn apply(&self, state: &WaveState) -> Result<WaveState> {
        if state.grid() != &self.grid {
            return Err(Error::InvalidArgument("state lives on a different grid".into()));
        }
        let n = self.grid.len();
        let psi = state.amplitudes();
        let out: Vec<Complex64> = self
            .matrix
            .par_chunks(n)
            .map(|row| {
                row.iter()
                    .zip(psi)
                    .fold(Complex64::new(0.0, 0.0), |acc, (m, p)| acc + m * p)
            })
            .collect();
        WaveState::new(self.grid, out, state.time() + self.eps)
    }
}

/// Integration weights for the chirp `K^{-1} exp(i eta^2 / 2 D eps)`.
enum ChirpWeights {
    /// One table per distinct diffusivity, indexed by `|k - j|` (or `(k - j) mod n`).
    Tables {
        tables: Vec<Vec<Complex64>>,
        column_table: Vec<usize>,
        periodic: bool,
        n: usize,
    },
    Sampled {
        prefactor: Vec<Complex64>,
        d: Vec<Complex64>,
        eps: f64,
    },
}

impl ChirpWeights {
    fn new(grid: &Grid, eps: f64, d: &[Complex64], options: DenseOptions) -> Result<Self> {
        let n = grid.len();
        match options.rule {
            QuadratureRule::PointSampled => Ok(Self::Sampled {
                prefactor: d
                    .iter()
                    .map(|&dk| grid.dx() * zero_order_constant(dk, eps).inv())
                    .collect(),
                d: d.to_vec(),
                eps,
            }),
            QuadratureRule::BandLimited => {
                let mut index: HashMap<(u64, u64), usize> = HashMap::new();
                let mut distinct = Vec::new();
                let column_table = d
                    .iter()
                    .map(|dk| {
                        *index.entry((dk.re.to_bits(), dk.im.to_bits())).or_insert_with(|| {
                            distinct.push(*dk);
                            distinct.len() - 1
                        })
                    })
                    .collect();
                let tables = if options.periodic {
                    distinct
                        .par_iter()
                        .map(|&dk| periodic_chirp_weights(grid, eps, dk))
                        .collect()
                } else {
                    let basis = SincBasis::new(grid, eps, &distinct);
                    distinct.par_iter().map(|&dk| basis.weights(dk)).collect()
                };
                Ok(Self::Tables {
                    tables,
                    column_table,
                    periodic: options.periodic,
                    n,
                })
            }
        }
    }

    #[inline]
    fn get(&self, j: usize, k: usize, eta: f64) -> Complex64 {
        match self {
            Self::Tables {
                tables,
                column_table,
                periodic,
                n,
            } => {
                let m = if *periodic {
                    (k + n - j) % n
                } else {
                    k.abs_diff(j)
                };
                tables[column_table[k]][m]
            }
            Self::Sampled { prefactor, d, eps } => {
                prefactor[k] * (I * eta * eta / (2.0 * d[k] * eps)).exp()
            }
        }
    }
}

/// Quadrature nodes for `W_m = (dx/pi) int_0^{pi/dx} exp(-i D eps q^2/2) cos(q m dx) dq`.
///
/// `W_m` is the integral of the normalized chirp against the sinc function
/// centred `m` lattice spacings away.
struct SincBasis {
    weights: Vec<f64>,
    nodes: Vec<f64>,
    /// `cos(q_i m dx)` for every `m` (rows) and node `i` (columns).
    cosines: Vec<f64>,
    n: usize,
    eps: f64,
    dx: f64,
}

impl SincBasis {
    const ORDER: usize = 16;

    fn new(grid: &Grid, eps: f64, diffusivities: &[Complex64]) -> Self {
        let n = grid.len();
        let dx = grid.dx();
        let qmax = PI / dx;
        let dmax = diffusivities.iter().map(|d| d.norm()).fold(0.0, f64::max);
        // about one panel per pi radians of the fastest factor
        let phase = (n - 1) as f64 * PI + dmax * eps * qmax * qmax / 2.0;
        let panels = (phase / PI).ceil() as usize + 8;
        let (nodes, weights) = composite_gauss_legendre(0.0, qmax, panels, Self::ORDER);
        let cosines = (0..n)
            .into_par_iter()
            .flat_map_iter(|m| {
                let s = m as f64 * dx;
                nodes.iter().map(move |q| (q * s).cos()).collect::<Vec<_>>()
            })
            .collect();
        Self {
            weights,
            nodes,
            cosines,
            n,
            eps,
            dx,
        }
    }

    fn weights(&self, d: Complex64) -> Vec<Complex64> {
        let f: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&q, &w)| w * (-I * d * self.eps * q * q / 2.0).exp())
            .collect();
        let len = f.len();
        (0..self.n)
            .map(|m| {
                let row = &self.cosines[m * len..(m + 1) * len];
                let s = row
                    .iter()
                    .zip(&f)
                    .fold(Complex64::new(0.0, 0.0), |acc, (c, v)| acc + v * c);
                s * (self.dx / PI)
            })
            .collect()
    }
}

/// Circulant weights: the inverse DFT of the free multiplier `exp(-i D eps k^2 / 2)`.
fn periodic_chirp_weights(grid: &Grid, eps: f64, d: Complex64) -> Vec<Complex64> {
    let n = grid.len();
    let mut buf: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| (-I * d * eps * k * k / 2.0).exp() / n as f64)
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

/// One dense step with default options.
pub fn step_dense(state: &WaveState, eps: f64, spec: &PropagatorSpec) -> Result<WaveState> {
    step_dense_with(state, eps, spec, DenseOptions::default())
}

/// One dense step: checks the boundary invariant and the grid resolution
/// required by the quadrature rule, then applies the operator.
pub fn step_dense_with(
    state: &WaveState,
    eps: f64,
    spec: &PropagatorSpec,
    options: DenseOptions,
) -> Result<WaveState> {
    state.check_boundary_decay()?;
    ensure_resolved(&validity_check_for_state(state, eps, spec)?, options.rule)?;
    DenseOperator::build(state.grid(), eps, spec, options)?.apply(state)
}

pub(crate) fn ensure_resolved(report: &ValidityReport, rule: QuadratureRule) -> Result<()> {
    let step = match rule {
        QuadratureRule::BandLimited => report.sampled_phase_step,
        QuadratureRule::PointSampled => report.quadratic_phase_step,
    };
    if step <= PI {
        Ok(())
    } else {
        Err(Error::Unresolved { phase_step: step })
    }
}
