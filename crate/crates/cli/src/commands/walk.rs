use anyhow::Result;
use gaussprop::walk::{
    histogram_compare, histogram_compare_density, oracle_density, sample_paths_from, HistogramComparison, StepLaw,
};
use gaussprop::{moments, Error};
use serde::Serialize;

use super::Outcome;
use crate::output::{Artifacts, Table};
use crate::scenario::Scenario;

/// Ensemble moments may sit this many standard errors from their targets.
const STANDARD_ERRORS: f64 = 3.0;
const L1_TOLERANCE: f64 = 0.05;

#[derive(Serialize)]
struct Summary {
    particles: usize,
    steps: usize,
    eps: f64,
    time: f64,
    seed: u64,
    law: StepLaw,
    start: f64,
    /// `closed_form` for a uniform drift, otherwise `diffusion_oracle`.
    target: &'static str,
    mean: f64,
    target_mean: f64,
    mean_standard_error: f64,
    variance: f64,
    target_variance: f64,
    variance_standard_error: f64,
    histogram_l1: f64,
    pass: bool,
}

/// Reports agreement with the target density; the walk is not a gate, so a
/// miss is recorded in the summary but does not change the exit code.
pub fn run(scenario: &Scenario, artifacts: &mut Artifacts) -> Result<Outcome> {
    let Some(config) = &scenario.walk else {
        anyhow::bail!(Error::InvalidArgument("the scenario has no walk section".into()));
    };
    let spec = &scenario.spec;
    let (eps, n) = (scenario.schedule.eps, scenario.schedule.n_steps);
    let start = scenario.packet.x0;
    let ensemble = sample_paths_from(start, config.particles, n, eps, spec, scenario.seed, config.law)?;
    let t = ensemble.time;

    let (target, target_mean, target_variance, hist): (_, _, _, HistogramComparison) = if spec.drift.is_uniform() {
        let h = histogram_compare(&ensemble, spec, config.bins)?;
        ("closed_form", start + spec.drift.value(0.0) * t, spec.diffusivity * t, h)
    } else {
        let density = oracle_density(start, n, eps, spec, &scenario.grid()?)?;
        let m = moments(&density)?;
        let h = histogram_compare_density(&ensemble, &density, config.bins)?;
        ("diffusion_oracle", m.mean, m.variance, h)
    };

    let count = ensemble.len() as f64;
    let mean = ensemble.mean();
    let variance = ensemble.variance();
    let mean_standard_error = (target_variance / count).sqrt();
    let variance_standard_error = target_variance * (2.0 / (count - 1.0)).sqrt();
    let pass = (mean - target_mean).abs() <= STANDARD_ERRORS * mean_standard_error
        && (variance - target_variance).abs() <= STANDARD_ERRORS * variance_standard_error
        && hist.l1 <= L1_TOLERANCE;

    let mut table = Table::new(&[
        "bin_left [length]",
        "bin_right [length]",
        "histogram [1/length]",
        "target [1/length]",
    ]);
    for (b, e) in hist.edges.windows(2).enumerate() {
        table.row(vec![e[0].into(), e[1].into(), hist.histogram[b].into(), hist.target[b].into()]);
    }
    artifacts.csv("", table);
    artifacts.json(
        "",
        &Summary {
            particles: ensemble.len(),
            steps: n,
            eps,
            time: t,
            seed: scenario.seed,
            law: config.law,
            start,
            target,
            mean,
            target_mean,
            mean_standard_error,
            variance,
            target_variance,
            variance_standard_error,
            histogram_l1: hist.l1,
            pass,
        },
    )?;
    Ok(Outcome::default())
}
