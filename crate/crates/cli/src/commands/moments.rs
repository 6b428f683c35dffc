use anyhow::Result;
use gaussprop::moments::{
    cancellation_ladder, fresnel_closed_form, fresnel_moment, unit_mass_check, RegularizedQuadrature,
};
use gaussprop::{FieldSpec, PropagatorSpec};
use num_complex::Complex64;
use serde::Serialize;

use super::Outcome;
use crate::output::{Artifacts, Table};
use crate::scenario::Scenario;

/// Accepted band on the cancellation residual order.
const CANCELLATION_ORDER: f64 = 2.0;
const ORDER_BAND: f64 = 0.3;

/// Point at which the cancellation is evaluated.
const CANCELLATION_X: f64 = 1.0;

#[derive(Serialize)]
struct Row {
    identity: String,
    diffusivity: f64,
    eps: f64,
    quadrature: [f64; 2],
    closed_form: [f64; 2],
    abs_error: f64,
    rel_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Report {
    tolerance: f64,
    rows: Vec<Row>,
    cancellation_slope: f64,
    cancellation_order: f64,
    cancellation_pass: bool,
}

pub fn run(scenario: &Scenario, artifacts: &mut Artifacts) -> Result<Outcome> {
    let Some(config) = &scenario.moments else {
        anyhow::bail!(gaussprop::Error::InvalidArgument("the scenario has no moments section".into()));
    };
    let tol = config.tolerance;
    let mut rows = Vec::new();
    let mut push = |identity: String, d: f64, eps: f64, q: Complex64, c: Complex64, scale: f64| {
        let abs_error = (q - c).norm();
        let rel_error = abs_error / scale;
        rows.push(Row {
            identity,
            diffusivity: d,
            eps,
            quadrature: [q.re, q.im],
            closed_form: [c.re, c.im],
            abs_error,
            rel_error,
            pass: rel_error <= tol,
        });
    };

    for case in &config.cases {
        let (d, eps) = (case.diffusivity, case.eps);
        let quad = RegularizedQuadrature::for_kernel(d, eps)?;
        let k = fresnel_closed_form(0, d, eps)?;
        for n in [0u32, 1, 2, 4] {
            let q = fresnel_moment(n, d, eps, &quad)?;
            let c = fresnel_closed_form(n, d, eps)?;
            // the odd moment vanishes; measure it against |K| (D eps)^(1/2)
            let scale = if n == 1 { k.norm() * (d * eps).sqrt() } else { c.norm() };
            push(format!("moment_{n}"), d, eps, q, c, scale);
        }
        let m = unit_mass_check(d, eps, &quad)?;
        push("unit_mass".into(), d, eps, m, Complex64::new(1.0, 0.0), 1.0);
    }

    let slope = config.cancellation_slope;
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(slope), FieldSpec::zero());
    let ladder = cancellation_ladder(&spec, CANCELLATION_X, &config.cancellation_ladder)?;
    for (&eps, &r) in ladder.eps.iter().zip(&ladder.residual) {
        let c = slope * slope * eps * eps;
        // already divided by K, so the error is on an O(1) scale
        push("cancellation".into(), 1.0, eps, Complex64::new(r, 0.0), Complex64::new(c, 0.0), 1.0);
    }
    let cancellation_pass = (ladder.order - CANCELLATION_ORDER).abs() <= ORDER_BAND;

    let mut outcome = Outcome::default();
    for r in &rows {
        outcome.require(r.pass, || {
            format!("{} at D={}, eps={}: rel error {:.3e}", r.identity, r.diffusivity, r.eps, r.rel_error)
        });
    }
    outcome.require(cancellation_pass, || format!("cancellation order {:.3}", ladder.order));

    let mut table = Table::new(&[
        "identity",
        "diffusivity [length^2/time]",
        "eps [time]",
        "quadrature_re",
        "quadrature_im",
        "closed_form_re",
        "closed_form_im",
        "abs_error",
        "scaled_error [1]",
        "pass",
    ]);
    for r in &rows {
        table.row(vec![
            r.identity.clone().into(),
            r.diffusivity.into(),
            r.eps.into(),
            r.quadrature[0].into(),
            r.quadrature[1].into(),
            r.closed_form[0].into(),
            r.closed_form[1].into(),
            r.abs_error.into(),
            r.rel_error.into(),
            r.pass.to_string().into(),
        ]);
    }
    artifacts.csv("", table);
    artifacts.json(
        "",
        &Report {
            tolerance: tol,
            rows,
            cancellation_slope: slope,
            cancellation_order: ladder.order,
            cancellation_pass,
        },
    )?;
    Ok(outcome)
}
