//! Monte-Carlo random walk whose single steps follow the real kernel.
//!
//! Every particle draws from its own ChaCha8 stream, selected by particle id
//! on a generator seeded from the master seed, so the positions do not depend
//! on thread count or scheduling. Normal deviates come from the Box-Muller
//! transform on 53-bit uniforms in `(0, 1]`.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fields::{Grid, PropagatorSpec, RealState};
use crate::reference::{diffusion_evolve, DiffusionScheme};

/// Fewest particles for which a histogram comparison is meaningful.
pub const MIN_PARTICLES: usize = 10_000;

/// Distribution of one step about its mean `u(x) eps`; both have variance `D eps`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepLaw {
    #[default]
    Gaussian,
    /// `sqrt(D eps) (E - 1)` with `E` unit exponential: skewed, finite variance.
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkEnsemble {
    /// Final positions, indexed by particle id.
    pub positions: Vec<f64>,
    pub start: f64,
    pub time: f64,
    pub seed: u64,
    pub steps: usize,
    pub eps: f64,
    pub law: StepLaw,
}

impl WalkEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.positions.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.positions.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (self.len() as f64 - 1.0)
    }
}

struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    fn new(seed: u64, particle: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(particle);
        Self { rng, spare: None }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    fn centred_exponential(&mut self) -> f64 {
        -self.uniform().ln() - 1.0
    }
}

/// Walk from the origin with Gaussian steps.
pub fn sample_paths(
    n_particles: usize,
    n_steps: usize,
    eps: f64,
    spec: &PropagatorSpec,
    seed: u64,
) -> Result<WalkEnsemble> {
    sample_paths_from(0.0, n_particles, n_steps, eps, spec, seed, StepLaw::Gaussian)
}

pub fn sample_paths_from(
    start: f64,
    n_particles: usize,
    n_steps: usize,
    eps: f64,
    spec: &PropagatorSpec,
    seed: u64,
    law: StepLaw,
) -> Result<WalkEnsemble> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveStep(eps));
    }
    spec.validate()?;
    if !spec.is_admissible() {
        return Err(Error::NonAdmissible("the walk needs a real drift and diffusivity".into()));
    }
    let scale = (spec.diffusivity * eps).sqrt();
    let positions = (0..n_particles as u64)
        .into_par_iter()
        .map(|id| {
            let mut stream = Stream::new(seed, id);
            let mut x = start;
            for _ in 0..n_steps {
                let xi = match law {
                    StepLaw::Gaussian => stream.normal(),
                    StepLaw::Exponential => stream.centred_exponential(),
                };
                x += spec.drift.value(x) * eps + scale * xi;
            }
            x
        })
        .collect();
    Ok(WalkEnsemble {
        positions,
        start,
        time: n_steps as f64 * eps,
        seed,
        steps: n_steps,
        eps,
        law,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramComparison {
    pub edges: Vec<f64>,
    /// Normalized histogram: count / (N width).
    pub histogram: Vec<f64>,
    /// Bin average of the target density.
    pub target: Vec<f64>,
    /// `sum |histogram - target| width`, plus ensemble mass outside the bins.
    pub l1: f64,
}

fn check_size(ensemble: &WalkEnsemble) -> Result<()> {
    if ensemble.len() < MIN_PARTICLES {
        Err(Error::TooFewParticles(ensemble.len()))
    } else {
        Ok(())
    }
}

fn compare(ensemble: &WalkEnsemble, lo: f64, hi: f64, bins: usize, cdf: impl Fn(f64) -> f64) -> HistogramComparison {
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in &ensemble.positions {
        let b = ((x - lo) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let n = ensemble.len() as f64;
    let histogram: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let target: Vec<f64> = edges.windows(2).map(|e| (cdf(e[1]) - cdf(e[0])) / width).collect();
    let l1 = histogram
        .iter()
        .zip(&target)
        .map(|(h, t)| (h - t).abs() * width)
        .sum::<f64>()
        + outside as f64 / n;
    HistogramComparison {
        edges,
        histogram,
        target,
        l1,
    }
}

/// Against the exact density `N(x0 + u t, D t)` for a uniform drift, over
/// mean plus or minus five standard deviations.
pub fn histogram_compare(ensemble: &WalkEnsemble, spec: &PropagatorSpec, bins: usize) -> Result<HistogramComparison> {
    check_size(ensemble)?;
    if !spec.drift.is_uniform() {
        return Err(Error::InvalidArgument(
            "no closed form for a position-dependent drift; compare with the density oracle".into(),
        ));
    }
    let mean = ensemble.start + spec.drift.value(0.0) * ensemble.time;
    let sd = (spec.diffusivity * ensemble.time).sqrt();
    let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(compare(ensemble, mean - 5.0 * sd, mean + 5.0 * sd, bins, |x| normal.cdf(x)))
}

/// Against a normal with the ensemble's own mean and variance.
pub fn histogram_compare_fitted(ensemble: &WalkEnsemble, bins: usize) -> Result<HistogramComparison> {
    check_size(ensemble)?;
    let (mean, sd) = (ensemble.mean(), ensemble.variance().sqrt());
    let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(compare(ensemble, mean - 5.0 * sd, mean + 5.0 * sd, bins, |x| normal.cdf(x)))
}

/// Against a density on a grid, over the grid's extent.
pub fn histogram_compare_density(ensemble: &WalkEnsemble, density: &RealState, bins: usize) -> Result<HistogramComparison> {
    check_size(ensemble)?;
    let grid = density.grid();
    let dx = grid.dx();
    let p = density.density();
    // cumulative trapezoid at the grid points
    let mut cum = vec![0.0; p.len()];
    for j in 1..p.len() {
        cum[j] = cum[j - 1] + 0.5 * (p[j - 1] + p[j]) * dx;
    }
    let x0 = grid.x_min();
    let last = grid.x(p.len() - 1);
    let cdf = |x: f64| {
        if x <= x0 {
            return 0.0;
        }
        if x >= last {
            return cum[p.len() - 1];
        }
        let s = (x - x0) / dx;
        let j = s.floor() as usize;
        let f = s - j as f64;
        // exact integral of the linear interpolant over the partial cell
        let pj = p[j];
        let pk = p[j + 1];
        cum[j] + dx * (pj * f + 0.5 * (pk - pj) * f * f)
    };
    Ok(compare(ensemble, x0, last, bins, cdf))
}

/// Density oracle for a walk started at `start`: the exact one-step normal,
/// then `n_steps - 1` implicit steps of the drift-diffusion equation.
pub fn oracle_density(start: f64, n_steps: usize, eps: f64, spec: &PropagatorSpec, grid: &Grid) -> Result<RealState> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("the oracle starts after one step".into()));
    }
    let first = RealState::gaussian(
        *grid,
        start + spec.drift.value(start) * eps,
        spec.diffusivity * eps,
        eps,
    )?;
    let states = diffusion_evolve(&first, eps, n_steps - 1, spec, DiffusionScheme::Implicit)?;
    Ok(states.into_iter().last().unwrap())
}
