use anyhow::Result;
use gaussprop::propagate::{evolve, l2_distance, validity_check_for_state, StepMethod, ValidityReport};
use gaussprop::reference::{cn_evolve, HamiltonianSpec};
use gaussprop::{moments, Moments, PropagatorSpec};
use serde::Serialize;

use super::{Outcome, ValidityFailure};
use crate::output::{Artifacts, Cell, Table};
use crate::scenario::Scenario;

#[derive(Serialize)]
struct Summary<'a> {
    method: StepMethod,
    spec: &'a PropagatorSpec,
    eps: f64,
    n_steps: usize,
    t_final: f64,
    validity: ValidityReport,
    max_norm_deviation: f64,
    initial: Moments,
    last: Moments,
    /// Crank-Nicolson on the same grid and step, when the spec has a Hamiltonian.
    reference: Option<&'static str>,
    final_l2_vs_reference: Option<f64>,
}

pub fn run(scenario: &Scenario, artifacts: &mut Artifacts) -> Result<Outcome> {
    let psi = scenario.initial_state()?;
    let (eps, n) = (scenario.schedule.eps, scenario.schedule.n_steps);
    let spec = &scenario.spec;
    let validity = validity_check_for_state(&psi, eps, spec)?;
    if scenario.method == StepMethod::Dense && !validity.passes() {
        return Err(ValidityFailure(validity).into());
    }
    let trajectory = evolve(&psi, eps, n, spec, scenario.method)?;
    let reference = match HamiltonianSpec::from_propagator(spec) {
        Ok(h) => Some(cn_evolve(&psi, eps, n, &h)?),
        Err(_) => None,
    };

    let mut table = Table::new(&[
        "step",
        "t [time]",
        "norm [1]",
        "mean_x [length]",
        "variance [length^2]",
        "l2_vs_reference [1]",
    ]);
    let mut l2_last = None;
    for (k, state) in trajectory.states.iter().enumerate() {
        let m = moments(state)?;
        let l2 = reference.as_ref().map(|r| l2_distance(state, &r.states[k]));
        l2_last = l2;
        table.row(vec![
            k.into(),
            state.time().into(),
            trajectory.norms[k].into(),
            m.mean.into(),
            m.variance.into(),
            Cell::from(l2),
        ]);
    }
    let summary = Summary {
        method: scenario.method,
        spec,
        eps,
        n_steps: n,
        t_final: trajectory.last().time(),
        validity,
        max_norm_deviation: trajectory
            .norms
            .iter()
            .map(|v| (v - trajectory.norms[0]).abs())
            .fold(0.0, f64::max),
        initial: moments(&psi)?,
        last: moments(trajectory.last())?,
        reference: reference.as_ref().map(|_| "crank_nicolson"),
        final_l2_vs_reference: l2_last,
    };
    artifacts.csv("", table);
    artifacts.json("", &summary)?;
    Ok(Outcome::default())
}
