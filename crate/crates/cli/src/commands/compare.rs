use anyhow::Result;
use gaussprop::numerics::loglog_slope;
use gaussprop::propagate::{evolve, l2_distance, StepMethod};
use gaussprop::reference::{cn_evolve, hermiticity_check, HamiltonianSpec};
use gaussprop::{gaussian_packet, Error, Grid, WaveState};
use serde::Serialize;

use super::Outcome;
use crate::output::{Artifacts, Table};
use crate::scenario::Scenario;

#[derive(Serialize)]
struct Report {
    method: StepMethod,
    t_final: f64,
    reference_grid: usize,
    reference_eps: f64,
    eps: Vec<f64>,
    l2_error: Vec<f64>,
    order: f64,
    order_band: [f64; 2],
    hermiticity: f64,
    pass: bool,
}

fn steps(t: f64, eps: f64) -> usize {
    (t / eps).round() as usize
}

/// Every `refine`-th sample of a fine-grid state.
fn restrict(fine: &WaveState, coarse: &Grid, refine: usize) -> Result<WaveState> {
    let amps = fine.amplitudes().iter().step_by(refine).copied().collect();
    Ok(WaveState::new(*coarse, amps, fine.time())?)
}

pub fn run(scenario: &Scenario, artifacts: &mut Artifacts) -> Result<Outcome> {
    let Some(config) = &scenario.compare else {
        anyhow::bail!(Error::InvalidArgument("the scenario has no compare section".into()));
    };
    let spec = &scenario.spec;
    let hamiltonian = HamiltonianSpec::from_propagator(spec)?;
    let grid = scenario.grid()?;
    let p = scenario.packet;

    let fine_grid = Grid::new(grid.x_min(), grid.x_max(), grid.len() * config.refine)?;
    let fine_psi = gaussian_packet(&fine_grid, p.x0, p.sigma0, p.k0)?;
    let fine = cn_evolve(&fine_psi, config.reference_eps, steps(config.t_final, config.reference_eps), &hamiltonian)?;
    let reference = restrict(fine.last(), &grid, config.refine)?;

    let psi = scenario.initial_state()?;
    let ladder = scenario.schedule.ladder();
    let l2_error = ladder
        .iter()
        .map(|&eps| {
            let tr = evolve(&psi, eps, steps(config.t_final, eps), spec, scenario.method)?;
            Ok(l2_distance(tr.last(), &reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    let order = loglog_slope(&ladder, &l2_error);
    let [lo, hi] = config.order_band;
    let pass = (lo..=hi).contains(&order);
    let mut outcome = Outcome::default();
    outcome.require(pass, || format!("convergence order {order:.3} outside [{lo}, {hi}]"));

    let mut table = Table::new(&["eps [time]", "steps", "l2_error [1]"]);
    for (&eps, &e) in ladder.iter().zip(&l2_error) {
        table.row(vec![eps.into(), steps(config.t_final, eps).into(), e.into()]);
    }
    artifacts.csv("", table);
    artifacts.json(
        "",
        &Report {
            method: scenario.method,
            t_final: config.t_final,
            reference_grid: fine_grid.len(),
            reference_eps: config.reference_eps,
            eps: ladder,
            l2_error,
            order,
            order_band: config.order_band,
            hermiticity: hermiticity_check(&hamiltonian, &grid)?,
            pass,
        },
    )?;
    Ok(outcome)
}
