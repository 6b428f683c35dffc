use anyhow::Result;
use gaussprop::audit::{
    audit_packets, empirical_a_scan, phase_freedom_check, required_a, AScan, AuditReport, PhaseFreedomReport,
    Verdict,
};
use gaussprop::{gaussian_packet, WaveState};
use serde::Serialize;

use super::Outcome;
use crate::output::{Artifacts, Table};
use crate::scenario::Scenario;

/// Tolerances on the phase-freedom comparison.
const DENSITY_TOLERANCE: f64 = 1e-12;
const PHASE_TOLERANCE: f64 = 1e-9;

#[derive(Serialize)]
struct CaseResult {
    variant: String,
    expect: Verdict,
    verdict: Verdict,
    pass: bool,
    /// One report per packet, scenario packet first.
    reports: Vec<AuditReport>,
}

#[derive(Serialize)]
struct ScanResult {
    #[serde(flatten)]
    scan: AScan,
    /// `u'/2`, the value that conserves the norm.
    expected: f64,
    resolution: f64,
    pass: bool,
}

#[derive(Serialize)]
struct PhaseResult {
    shift: f64,
    eps: f64,
    #[serde(flatten)]
    report: PhaseFreedomReport,
    pass: bool,
}

#[derive(Serialize)]
struct Report {
    eps_ladder: Vec<f64>,
    packets: usize,
    cases: Vec<CaseResult>,
    scan: Option<ScanResult>,
    phase_freedom: Option<PhaseResult>,
}

/// Largest gap between neighbouring candidates.
fn resolution(candidates: &[f64]) -> f64 {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub fn run(scenario: &Scenario, artifacts: &mut Artifacts) -> Result<Outcome> {
    let Some(config) = &scenario.audit else {
        anyhow::bail!(gaussprop::Error::InvalidArgument("the scenario has no audit section".into()));
    };
    let grid = scenario.grid()?;
    let mut states: Vec<WaveState> = vec![scenario.initial_state()?];
    for p in &config.packets {
        states.push(gaussian_packet(&grid, p.x0, p.sigma0, p.k0)?);
    }
    let ladder = scenario.schedule.ladder();
    let mut outcome = Outcome::default();

    let mut table = Table::new(&[
        "case",
        "variant",
        "packet",
        "eps [time]",
        "norm_defect [1]",
        "order [1]",
        "verdict",
    ]);
    let mut cases = Vec::new();
    for (i, case) in config.cases.iter().enumerate() {
        let spec = scenario.case_spec(case);
        let (reports, verdict) = audit_packets(&states, &spec, &ladder)?;
        for (p, r) in reports.iter().enumerate() {
            for (eps, defect) in r.eps.iter().zip(&r.defect) {
                table.row(vec![
                    i.into(),
                    r.variant.as_str().into(),
                    p.into(),
                    (*eps).into(),
                    (*defect).into(),
                    r.order.into(),
                    verdict_name(r.verdict).into(),
                ]);
            }
        }
        let pass = verdict == case.expect;
        outcome.require(pass, || {
            format!("case {i} ({}): expected {:?}, got {verdict:?}", spec.variant.name(), case.expect)
        });
        cases.push(CaseResult {
            variant: spec.variant.name().to_string(),
            expect: case.expect,
            verdict,
            pass,
            reports,
        });
    }

    let scan = match &config.scan {
        Some(s) => {
            let scan = empirical_a_scan(&states[0], s.eps, &scenario.spec, &s.candidates)?;
            let expected = required_a(&scenario.spec).value(0.0);
            let resolution = resolution(&s.candidates);
            let pass = (scan.best - expected).abs() <= resolution + 1e-12;
            outcome.require(pass, || format!("a scan found {}, expected {expected}", scan.best));
            Some(ScanResult {
                scan,
                expected,
                resolution,
                pass,
            })
        }
        None => None,
    };

    let phase_freedom = match &config.phase_freedom {
        Some(p) => {
            let report = phase_freedom_check(&states[0], p.eps, p.n_steps, &scenario.spec, p.shift, scenario.method)?;
            let pass = report.max_density_difference <= DENSITY_TOLERANCE && report.phase_error <= PHASE_TOLERANCE;
            outcome.require(pass, || {
                format!(
                    "phase freedom: density difference {:.3e}, phase error {:.3e}",
                    report.max_density_difference, report.phase_error
                )
            });
            Some(PhaseResult {
                shift: p.shift,
                eps: p.eps,
                report,
                pass,
            })
        }
        None => None,
    };

    artifacts.csv("", table);
    artifacts.json(
        "",
        &Report {
            eps_ladder: ladder,
            packets: states.len(),
            cases,
            scan,
            phase_freedom,
        },
    )?;
    Ok(outcome)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Conserves => "conserves",
        Verdict::Drifts => "drifts",
    }
}
