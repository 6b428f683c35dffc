//! Independent oracles: a Crank-Nicolson solver for
//! `psi_t = (i/2m) psi'' + (A/m) psi' + (1/2m) A' psi - i (A^2/2m) psi - i phi psi`
//! and a finite-volume solver for `P_t = (D/2) P'' - (u P)'`.
//!
//! Amplitudes and densities vanish outside the grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldSpec, Grid, Order, PropagatorSpec, RealState, Variant, WaveState};
use crate::numerics::Tridiagonal;
use crate::propagate::Trajectory;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Mass, vector potential and scalar potential with `hbar = 1` and unit charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub vector_potential: FieldSpec,
    /// Constant imaginary part added to `A`; nonzero breaks hermiticity.
    #[serde(default)]
    pub vector_potential_imag: f64,
    pub scalar_potential: FieldSpec,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, vector_potential: FieldSpec, scalar_potential: FieldSpec) -> Self {
        Self {
            mass,
            vector_potential,
            vector_potential_imag: 0.0,
            scalar_potential,
        }
    }

    /// `m = 1/D`, `A = m u`, `phi = b - A^2 / 2m`.
    pub fn from_propagator(spec: &PropagatorSpec) -> Result<Self> {
        spec.validate()?;
        let imag = match &spec.variant {
            Variant::Admissible => 0.0,
            Variant::ComplexU { imag } => *imag,
            other => {
                return Err(Error::NonAdmissible(format!(
                    "no Hamiltonian counterpart for variant {}",
                    other.name()
                )))
            }
        };
        if spec.order != Order::First {
            return Err(Error::InvalidArgument(
                "only the first-order propagator maps to a Hamiltonian".into(),
            ));
        }
        let m = 1.0 / spec.diffusivity;
        let a = spec.drift.clone().scaled(m);
        let a_sq = spec.drift.clone().times(spec.drift.clone()).scaled(m / 2.0);
        Ok(Self {
            mass: m,
            vector_potential: a,
            vector_potential_imag: imag * m,
            scalar_potential: spec.phase.clone().plus(a_sq.scaled(-1.0)),
        })
    }

    /// `D = 1/m`, `u = A/m`, `b = A^2 / 2m + phi`.
    pub fn to_propagator(&self) -> PropagatorSpec {
        let m = self.mass;
        let u = self.vector_potential.clone().scaled(1.0 / m);
        let a_sq = self
            .vector_potential
            .clone()
            .times(self.vector_potential.clone())
            .scaled(0.5 / m);
        let spec = PropagatorSpec::new(1.0 / m, u, self.scalar_potential.clone().plus(a_sq));
        if self.vector_potential_imag != 0.0 {
            spec.with_variant(Variant::ComplexU {
                imag: self.vector_potential_imag / m,
            })
        } else {
            spec
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    fn a_at(&self, x: f64) -> Complex64 {
        Complex64::new(self.vector_potential.value(x), self.vector_potential_imag)
    }
}

/// Largest pointwise difference in `D`, `u` and `b` after mapping to a
/// Hamiltonian and back.
pub fn round_trip_error(spec: &PropagatorSpec, grid: &Grid) -> Result<f64> {
    let back = HamiltonianSpec::from_propagator(spec)?.to_propagator();
    let mut err = (back.diffusivity - spec.diffusivity).abs();
    for x in grid.points() {
        err = err
            .max((back.drift_at(x) - spec.drift_at(x)).norm())
            .max((back.phase.value(x) - spec.phase.value(x)).abs());
    }
    Ok(err)
}

/// The right-hand side evaluated by a direct stencil, with the drift terms in
/// the symmetrized form `(1/2m)(A psi' + (A psi)')`.
pub fn rhs_apply(state: &WaveState, spec: &HamiltonianSpec) -> Result<WaveState> {
    spec.validate()?;
    state.check_boundary_decay()?;
    let grid = state.grid();
    let n = grid.len();
    let dx = grid.dx();
    let m = spec.mass;
    let psi = state.amplitudes();
    let zero = Complex64::new(0.0, 0.0);
    let at = |j: isize| if j < 0 || j >= n as isize { zero } else { psi[j as usize] };
    let a: Vec<Complex64> = grid.points().iter().map(|&x| spec.a_at(x)).collect();
    let a_at = |j: isize| if j < 0 || j >= n as isize { zero } else { a[j as usize] };
    let out = (0..n as isize)
        .map(|j| {
            let x = grid.x(j as usize);
            let (pm, p0, pp) = (at(j - 1), at(j), at(j + 1));
            let lap = (pp - 2.0 * p0 + pm) / (dx * dx);
            let grad = (pp - pm) / (2.0 * dx);
            let div = (a_at(j + 1) * pp - a_at(j - 1) * pm) / (2.0 * dx);
            let aj = a_at(j);
            I / (2.0 * m) * lap + (aj * grad + div) / (2.0 * m)
                - I * (aj * aj / (2.0 * m) + spec.scalar_potential.value(x)) * p0
        })
        .collect();
    WaveState::new(*grid, out, state.time())
}

/// `H = (1/2m) (p - A)^2 + phi` with `p = -i D0`, assembled as
/// `(1/2m) [-Lap - (p A + A p) + A^2] + phi` from matrix products.
pub fn hamiltonian_matrix(spec: &HamiltonianSpec, grid: &Grid) -> Result<Tridiagonal<Complex64>> {
    spec.validate()?;
    let n = grid.len();
    let dx = grid.dx();
    let m = spec.mass;
    let mut lap = Tridiagonal::<Complex64>::zeros(n);
    let mut d0 = Tridiagonal::<Complex64>::zeros(n);
    for j in 0..n {
        lap.diag[j] = Complex64::new(-2.0 / (dx * dx), 0.0);
        if j > 0 {
            lap.lower[j] = Complex64::new(1.0 / (dx * dx), 0.0);
            d0.lower[j] = Complex64::new(-0.5 / dx, 0.0);
        }
        if j + 1 < n {
            lap.upper[j] = Complex64::new(1.0 / (dx * dx), 0.0);
            d0.upper[j] = Complex64::new(0.5 / dx, 0.0);
        }
    }
    let a: Vec<Complex64> = grid.points().iter().map(|&x| spec.a_at(x)).collect();
    let p = d0.scale(-I);
    let pa_ap = p.mul_diag_right(&a).add(&p.mul_diag_left(&a));
    let a_sq = Tridiagonal::from_diagonal(a.iter().map(|v| v * v).collect());
    let phi = Tridiagonal::from_diagonal(
        grid.points()
            .iter()
            .map(|&x| Complex64::new(spec.scalar_potential.value(x), 0.0))
            .collect(),
    );
    let kinetic = lap
        .scale(Complex64::new(-1.0, 0.0))
        .add(&pa_ap.scale(Complex64::new(-1.0, 0.0)))
        .add(&a_sq)
        .scale(Complex64::new(0.5 / m, 0.0));
    Ok(kinetic.add(&phi))
}

/// `max |H_jk - conj(H_kj)|` over the discrete Hamiltonian.
pub fn hermiticity_check(spec: &HamiltonianSpec, grid: &Grid) -> Result<f64> {
    let h = hamiltonian_matrix(spec, grid)?;
    let n = h.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        worst = worst.max((h.diag[j] - h.diag[j].conj()).norm());
        if j + 1 < n {
            worst = worst.max((h.upper[j] - h.lower[j + 1].conj()).norm());
        }
    }
    Ok(worst)
}

/// Cayley step `(1 + i eps H / 2) psi' = (1 - i eps H / 2) psi`.
pub struct CnStepper {
    grid: Grid,
    eps: f64,
    implicit: Tridiagonal<Complex64>,
    explicit: Tridiagonal<Complex64>,
}

impl CnStepper {
    pub fn new(spec: &HamiltonianSpec, grid: &Grid, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::NonPositiveStep(eps));
        }
        let h = hamiltonian_matrix(spec, grid)?;
        let half = h.scale(I * (eps / 2.0));
        let one = Tridiagonal::identity(grid.len());
        Ok(Self {
            grid: *grid,
            eps,
            implicit: one.add(&half),
            explicit: one.add(&half.scale(Complex64::new(-1.0, 0.0))),
        })
    }

    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        if state.grid() != &self.grid {
            return Err(Error::InvalidArgument("state lives on a different grid".into()));
        }
        let rhs = self.explicit.apply(state.amplitudes());
        let out = self.implicit.solve(&rhs)?;
        WaveState::new(self.grid, out, state.time() + self.eps)
    }
}

pub fn cn_step(state: &WaveState, eps: f64, spec: &HamiltonianSpec) -> Result<WaveState> {
    CnStepper::new(spec, state.grid(), eps)?.step(state)
}

pub fn cn_evolve(state: &WaveState, eps: f64, n_steps: usize, spec: &HamiltonianSpec) -> Result<Trajectory> {
    let stepper = CnStepper::new(spec, state.grid(), eps)?;
    let mut states = vec![state.clone()];
    let mut norms = vec![state.norm()];
    for _ in 0..n_steps {
        let next = stepper.step(states.last().unwrap())?;
        norms.push(next.norm());
        states.push(next);
    }
    Ok(Trajectory { states, norms })
}

/// Time discretization for the density oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    /// Backward Euler; keeps the density nonnegative while `|u| dx <= D`.
    #[default]
    Implicit,
    /// Trapezoidal in time.
    CrankNicolson,
    /// Forward Euler; requires `D eps / dx^2 <= 1/2`.
    Explicit,
}

/// Finite-volume generator for `(D/2) P'' - (u P)'` with central face fluxes
/// and no flux through the outer faces, so `sum P dx` is conserved exactly.
fn diffusion_generator(grid: &Grid, spec: &PropagatorSpec) -> Tridiagonal<f64> {
    let n = grid.len();
    let dx = grid.dx();
    let d = spec.diffusivity;
    let mut l = Tridiagonal::<f64>::zeros(n);
    // Face j+1/2 between cells j and j+1 carries
    // F = -(D/2)(P_{j+1} - P_j)/dx + u_{j+1/2}(P_j + P_{j+1})/2.
    for j in 0..n - 1 {
        let u = spec.drift.value(grid.x(j) + 0.5 * dx);
        let f_j = (0.5 * d / dx + 0.5 * u) / dx; // coefficient of P_j in F / dx
        let f_jp = (-0.5 * d / dx + 0.5 * u) / dx; // coefficient of P_{j+1}
        // cell j loses F, cell j+1 gains F
        l.diag[j] -= f_j;
        l.upper[j] -= f_jp;
        l.lower[j + 1] += f_j;
        l.diag[j + 1] += f_jp;
    }
    l
}

pub fn diffusion_step(
    state: &RealState,
    eps: f64,
    spec: &PropagatorSpec,
    scheme: DiffusionScheme,
) -> Result<RealState> {
    Ok(diffusion_evolve(state, eps, 1, spec, scheme)?.pop().unwrap())
}

/// `n_steps` oracle steps; returns every state including the initial one.
pub fn diffusion_evolve(
    state: &RealState,
    eps: f64,
    n_steps: usize,
    spec: &PropagatorSpec,
    scheme: DiffusionScheme,
) -> Result<Vec<RealState>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveStep(eps));
    }
    spec.validate()?;
    let grid = *state.grid();
    let dx = grid.dx();
    let ratio = spec.diffusivity * eps / (dx * dx);
    if scheme == DiffusionScheme::Explicit && ratio > 0.5 {
        return Err(Error::Unstable { ratio });
    }
    let l = diffusion_generator(&grid, spec);
    let one = Tridiagonal::<f64>::identity(grid.len());
    let (implicit, explicit) = match scheme {
        DiffusionScheme::Implicit => (one.add(&l.scale(-eps)), one),
        DiffusionScheme::CrankNicolson => (one.add(&l.scale(-eps / 2.0)), one.add(&l.scale(eps / 2.0))),
        DiffusionScheme::Explicit => (one.clone(), one.add(&l.scale(eps))),
    };
    let mut states = vec![state.clone()];
    for _ in 0..n_steps {
        let prev = states.last().unwrap();
        let rhs = explicit.apply(prev.density());
        let next = match scheme {
            DiffusionScheme::Explicit => rhs,
            _ => implicit.solve(&rhs)?,
        };
        if next.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        states.push(RealState::from_raw(grid, next, prev.time() + eps));
    }
    Ok(states)
}

/// `sum |P - Q| dx`.
pub fn l1_distance(p: &RealState, q: &RealState) -> f64 {
    p.density()
        .iter()
        .zip(q.density())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * p.grid().dx()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::gaussian_packet;

    fn grid() -> Grid {
        Grid::new(-10.0, 10.0, 256).unwrap()
    }

    #[test]
    fn mapping_round_trip() {
        let spec = PropagatorSpec::new(0.7, FieldSpec::linear(0.3), FieldSpec::harmonic(1.0));
        assert!(round_trip_error(&spec, &grid()).unwrap() < 1e-12);
        let h = HamiltonianSpec::from_propagator(&spec).unwrap();
        assert!((h.mass - 1.0 / 0.7).abs() < 1e-15);
        assert!((h.vector_potential.value(2.0) - 0.6 / 0.7).abs() < 1e-14);
    }

    #[test]
    fn free_hamiltonian_is_symmetric() {
        let h = HamiltonianSpec::new(1.0, FieldSpec::zero(), FieldSpec::zero());
        assert_eq!(hermiticity_check(&h, &grid()).unwrap(), 0.0);
    }

    #[test]
    fn complex_vector_potential_breaks_hermiticity() {
        let mut h = HamiltonianSpec::new(1.0, FieldSpec::linear(0.3), FieldSpec::zero());
        h.vector_potential_imag = 0.1;
        assert!(hermiticity_check(&h, &grid()).unwrap() > 1e-3);
    }

    #[test]
    fn potential_term_is_pointwise() {
        let g = grid();
        let psi = gaussian_packet(&g, 0.0, 1.0, 0.0).unwrap();
        let h = HamiltonianSpec::new(1.0, FieldSpec::zero(), FieldSpec::harmonic(1.0));
        let free = HamiltonianSpec::new(1.0, FieldSpec::zero(), FieldSpec::zero());
        let r = rhs_apply(&psi, &h).unwrap();
        let r0 = rhs_apply(&psi, &free).unwrap();
        for j in 0..g.len() {
            let x = g.x(j);
            let diff = r.amplitudes()[j] - r0.amplitudes()[j];
            assert!((diff + I * 0.5 * x * x * psi.amplitudes()[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn explicit_diffusion_refuses_large_steps() {
        let g = grid();
        let p = RealState::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        let spec = PropagatorSpec::free(1.0);
        let dx = g.dx();
        let r = diffusion_step(&p, dx * dx, &spec, DiffusionScheme::Explicit);
        assert!(matches!(r, Err(Error::Unstable { .. })));
        assert!(diffusion_step(&p, 0.4 * dx * dx, &spec, DiffusionScheme::Explicit).is_ok());
    }
}
