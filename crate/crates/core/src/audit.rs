//! Norm-conservation audits.
//!
//! A propagator conserves the norm to first order in `eps` exactly when the
//! per-step norm defect falls off as `eps^2`. Each audit measures the defect
//! over an `eps` ladder, fits its order, and compares the leading rate with
//! the one predicted from the generator the kernel induces,
//! `psi_t = (iD/2) psi'' + u psi' + (u' - a) psi - i b psi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Derivative, FieldSpec, PropagatorSpec, Variant, WaveState};
use crate::numerics::loglog_slope;
use crate::propagate::{
    evolve_with, l2_distance, CorrectionForm, DenseOperator, DenseOptions, StepMethod,
};

/// Fitted order at or above which a propagator is judged to conserve the norm.
pub const CONSERVING_ORDER: f64 = 1.7;

/// Defects below this on every rung are round-off; the propagator conserves.
pub const NOISE_FLOOR: f64 = 1e-12;

/// The halving ladder `{eps0, eps0/2, eps0/4, eps0/8}`.
pub fn default_ladder(eps0: f64) -> Vec<f64> {
    (0..4).map(|k| eps0 / f64::from(1 << k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Conserves,
    Drifts,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub variant: String,
    pub eps: Vec<f64>,
    /// `norm(out) / norm(in) - 1` for one step at each `eps`.
    pub defect: Vec<f64>,
    /// Log-log slope of `|defect|` on `eps`; absent when every defect is round-off.
    pub order: Option<f64>,
    /// `defect / eps` on the finest rung.
    pub measured_rate: f64,
    /// Leading `d/dt` of the norm predicted from the generator, where known.
    pub predicted_rate: Option<f64>,
    pub verdict: Verdict,
}

/// `integral psi* (u' - 2a) psi dx` for a real drift `u`.
pub fn analytic_drift_rate(state: &WaveState, spec: &PropagatorSpec, a_field: &FieldSpec) -> Result<f64> {
    state.check_boundary_decay()?;
    let grid = state.grid();
    let dx = grid.dx();
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let x = grid.x(j);
            (spec.drift.derivative(x) - 2.0 * a_field.value(x)) * z.norm_sqr()
        })
        .sum::<f64>()
        * dx)
}

/// The `a` that makes `analytic_drift_rate` vanish for every state: `u'/2`.
pub fn required_a(spec: &PropagatorSpec) -> FieldSpec {
    Derivative::of(&spec.drift).scaled(0.5)
}

/// Central-difference `psi'` with zero beyond the edges.
fn gradient(state: &WaveState) -> Vec<Complex64> {
    let psi = state.amplitudes();
    let n = psi.len();
    let dx = state.grid().dx();
    let zero = Complex64::new(0.0, 0.0);
    (0..n)
        .map(|j| {
            let up = if j + 1 < n { psi[j + 1] } else { zero };
            let down = if j > 0 { psi[j - 1] } else { zero };
            (up - down) / (2.0 * dx)
        })
        .collect()
}

/// `integral Im(psi* psi') dx`, the mean wavenumber times the norm.
fn current(state: &WaveState, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = state.grid();
    gradient(state)
        .iter()
        .zip(state.amplitudes())
        .enumerate()
        .map(|(j, (g, p))| weight(grid.x(j)) * (p.conj() * g).im)
        .sum::<f64>()
        * grid.dx()
}

/// Leading norm rate predicted for `spec` on `state`, or `None` where the
/// generator's form is not established for that variant.
pub fn predicted_drift_rate(state: &WaveState, spec: &PropagatorSpec) -> Result<Option<f64>> {
    let a = spec.a_field();
    Ok(match &spec.variant {
        Variant::Admissible | Variant::NoT | Variant::EndpointT | Variant::PrescribedA { .. } => {
            Some(analytic_drift_rate(state, spec, &a)?)
        }
        Variant::ComplexU { imag } => {
            let real = analytic_drift_rate(state, spec, &a)?;
            Some(real - 2.0 * imag * current(state, |_| 1.0))
        }
        Variant::ComplexD { imag } if spec.drift.is_zero() => {
            state.check_boundary_decay()?;
            let g = gradient(state);
            Some(imag * g.iter().map(|z| z.norm_sqr()).sum::<f64>() * state.grid().dx())
        }
        Variant::XDependentD { field } if spec.drift.is_zero() => {
            state.check_boundary_decay()?;
            Some(-current(state, |x| field.derivative(x)))
        }
        _ => None,
    })
}

fn one_step_defect(state: &WaveState, eps: f64, spec: &PropagatorSpec, options: DenseOptions) -> Result<f64> {
    let out = DenseOperator::build(state.grid(), eps, spec, options)?.apply(state)?;
    Ok(out.norm() / state.norm() - 1.0)
}

/// Per-step norm defect of the dense propagator over an `eps` ladder.
pub fn variant_audit(state: &WaveState, spec: &PropagatorSpec, eps_ladder: &[f64]) -> Result<AuditReport> {
    if eps_ladder.len() < 2 {
        return Err(Error::InvalidArgument("an eps ladder needs at least two values".into()));
    }
    let mut defect = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        // the unsteppable case is an error, not a verdict
        let step = crate::propagate::step_dense(state, eps, spec)?;
        defect.push(step.norm() / state.norm() - 1.0);
    }
    let abs: Vec<f64> = defect.iter().map(|d| d.abs()).collect();
    let order = if abs.iter().all(|&d| d < NOISE_FLOOR) {
        None
    } else {
        Some(loglog_slope(eps_ladder, &abs.iter().map(|d| d.max(f64::MIN_POSITIVE)).collect::<Vec<_>>()))
    };
    let verdict = match order {
        None => Verdict::Conserves,
        Some(p) if p >= CONSERVING_ORDER => Verdict::Conserves,
        Some(_) => Verdict::Drifts,
    };
    let finest = eps_ladder
        .iter()
        .zip(&defect)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .unwrap();
    Ok(AuditReport {
        variant: spec.variant.name().to_string(),
        eps: eps_ladder.to_vec(),
        measured_rate: finest.1 / finest.0,
        predicted_rate: predicted_drift_rate(state, spec)?,
        defect,
        order,
        verdict,
    })
}

/// Audits one spec on several packets. The spec drifts if it drifts on any.
pub fn audit_packets(
    states: &[WaveState],
    spec: &PropagatorSpec,
    eps_ladder: &[f64],
) -> Result<(Vec<AuditReport>, Verdict)> {
    let reports = states
        .iter()
        .map(|s| variant_audit(s, spec, eps_ladder))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::Drifts) {
        Verdict::Drifts
    } else {
        Verdict::Conserves
    };
    Ok((reports, verdict))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AScan {
    pub candidates: Vec<f64>,
    pub defect: Vec<f64>,
    pub best: f64,
}

/// One-step norm defect with `a` replaced by each constant candidate; returns
/// the candidate closest to conservation. Requires `u'` constant and the
/// candidates to straddle the zero of the defect.
pub fn empirical_a_scan(
    state: &WaveState,
    eps: f64,
    spec: &PropagatorSpec,
    candidates: &[f64],
) -> Result<AScan> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    if !Derivative::of(&spec.drift).is_uniform() {
        return Err(Error::InvalidArgument(
            "the scan needs a drift with constant slope".into(),
        ));
    }
    let defect = candidates
        .iter()
        .map(|&a| {
            let trial = spec.clone().with_variant(Variant::PrescribedA {
                field: FieldSpec::constant(a),
            });
            one_step_defect(state, eps, &trial, DenseOptions::default())
        })
        .collect::<Result<Vec<f64>>>()?;
    let lowest = defect.iter().copied().fold(f64::INFINITY, f64::min);
    let highest = defect.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lowest > NOISE_FLOOR || highest < -NOISE_FLOOR {
        return Err(Error::NoBracket);
    }
    let best = candidates
        .iter()
        .zip(&defect)
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(a, _)| *a)
        .unwrap();
    Ok(AScan {
        candidates: candidates.to_vec(),
        defect,
        best,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseFreedomReport {
    pub steps: usize,
    pub max_density_difference: f64,
    /// `arg sum psi_shifted conj(psi)`, in `(-pi, pi]`.
    pub phase_offset: f64,
    /// `-c N eps` reduced to `(-pi, pi]`.
    pub expected_offset: f64,
    /// Distance between the two on the circle.
    pub phase_error: f64,
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Evolves with `b` and with `b + c` and compares the results.
pub fn phase_freedom_check(
    state: &WaveState,
    eps: f64,
    n_steps: usize,
    spec: &PropagatorSpec,
    c: f64,
    method: StepMethod,
) -> Result<PhaseFreedomReport> {
    let shifted = spec.clone().with_phase(spec.phase.clone().plus(FieldSpec::constant(c)));
    let a = evolve_with(state, eps, n_steps, spec, method, DenseOptions::default())?;
    let b = evolve_with(state, eps, n_steps, &shifted, method, DenseOptions::default())?;
    let (pa, pb) = (a.last(), b.last());
    let max_density_difference = pa
        .amplitudes()
        .iter()
        .zip(pb.amplitudes())
        .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
        .fold(0.0, f64::max);
    let overlap: Complex64 = pb
        .amplitudes()
        .iter()
        .zip(pa.amplitudes())
        .map(|(y, x)| y * x.conj())
        .sum();
    let phase_offset = overlap.arg();
    let expected_offset = wrap(-c * n_steps as f64 * eps);
    Ok(PhaseFreedomReport {
        steps: n_steps,
        max_density_difference,
        phase_offset,
        expected_offset,
        phase_error: wrap(phase_offset - expected_offset).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionGap {
    pub eps: Vec<f64>,
    /// L2 distance between the exponential and linearized correction steps.
    pub gap: Vec<f64>,
    pub order: f64,
}

/// One step with `exp(-eps T)` against one with `1 - eps T`.
pub fn correction_form_gap(state: &WaveState, spec: &PropagatorSpec, eps_ladder: &[f64]) -> Result<CorrectionGap> {
    let gap = eps_ladder
        .iter()
        .map(|&eps| {
            let grid = state.grid();
            let exp = DenseOperator::build(grid, eps, spec, DenseOptions::default())?.apply(state)?;
            let lin_options = DenseOptions {
                correction: CorrectionForm::Linear,
                ..DenseOptions::default()
            };
            let lin = DenseOperator::build(grid, eps, spec, lin_options)?.apply(state)?;
            Ok(l2_distance(&exp, &lin))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CorrectionGap {
        eps: eps_ladder.to_vec(),
        order: loglog_slope(eps_ladder, &gap),
        gap,
    })
}

/// Discrete `integral d/dx (psi* psi' - psi*' psi) dx`; telescopes to edge values.
pub fn boundary_current(state: &WaveState) -> f64 {
    let g = gradient(state);
    let j: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .zip(&g)
        .map(|(p, d)| p.conj() * d - d.conj() * p)
        .collect();
    let n = j.len();
    let dx = state.grid().dx();
    let zero = Complex64::new(0.0, 0.0);
    let total: Complex64 = (0..n)
        .map(|k| {
            let up = if k + 1 < n { j[k + 1] } else { zero };
            let down = if k > 0 { j[k - 1] } else { zero };
            (up - down) / (2.0 * dx)
        })
        .sum();
    (total * dx).norm()
}

/// Discrete `integral (psi* u psi' + psi* u' psi + psi*' u psi) dx`, which
/// equals the edge term `[u |psi|^2]`.
pub fn triple_product(state: &WaveState, u: &FieldSpec) -> f64 {
    let grid = state.grid();
    let g = gradient(state);
    state
        .amplitudes()
        .iter()
        .zip(&g)
        .enumerate()
        .map(|(j, (p, d))| {
            let x = grid.x(j);
            let uj = u.value(x);
            (p.conj() * d * uj + p.conj() * p * u.derivative(x) + d.conj() * p * uj).re
        })
        .sum::<f64>()
        * grid.dx()
}
