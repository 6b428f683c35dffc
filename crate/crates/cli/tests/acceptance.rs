//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gaussprop::audit::{audit_packets, default_ladder, empirical_a_scan, phase_freedom_check, variant_audit, Verdict};
use gaussprop::moments::{
    cancellation_ladder, fresnel_closed_form, fresnel_moment, unit_mass_check, RegularizedQuadrature,
};
use gaussprop::numerics::loglog_slope;
use gaussprop::propagate::{evolve, evolve_real, l2_distance, step_dense, step_spectral, StepMethod};
use gaussprop::reference::{
    cn_evolve, diffusion_evolve, hamiltonian_matrix, hermiticity_check, l1_distance, rhs_apply, DiffusionScheme,
    HamiltonianSpec,
};
use gaussprop::walk::{histogram_compare, sample_paths_from, StepLaw};
use gaussprop::{gaussian_packet, moments, FieldSpec, Grid, PropagatorSpec, RealState, Variant, WaveState};
use num_complex::Complex64;

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
}

fn fresnel_cases() -> Vec<(f64, f64)> {
    vec![(1.0, 1.0), (1.0, 0.1), (0.5, 1.0), (0.5, 0.1)]
}

fn criterion_1() -> Check {
    let mut worst: f64 = 0.0;
    for (d, eps) in fresnel_cases() {
        let quad = RegularizedQuadrature::for_kernel(d, eps).map_err(|e| e.to_string())?;
        let k = fresnel_closed_form(0, d, eps).unwrap();
        for n in [0, 1, 2, 4] {
            let q = fresnel_moment(n, d, eps, &quad).map_err(|e| e.to_string())?;
            let c = fresnel_closed_form(n, d, eps).unwrap();
            let scale = if n == 1 { k.norm() * (d * eps).sqrt() } else { c.norm() };
            worst = worst.max((q - c).norm() / scale);
        }
    }
    verdict(worst <= 1e-6, format!("max relative error {worst:.2e} (tolerance 1e-6)"))
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for (d, eps) in fresnel_cases() {
        let quad = RegularizedQuadrature::for_kernel(d, eps).map_err(|e| e.to_string())?;
        let m = unit_mass_check(d, eps, &quad).map_err(|e| e.to_string())?;
        worst = worst.max((m - Complex64::new(1.0, 0.0)).norm());
    }
    verdict(worst <= 1e-6, format!("max |mass - 1| {worst:.2e} (tolerance 1e-6)"))
}

fn criterion_3() -> Check {
    let k = 0.4;
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(k), FieldSpec::zero());
    let ladder = cancellation_ladder(&spec, 1.0, &[0.1, 0.05, 0.025, 0.0125]).map_err(|e| e.to_string())?;
    // the surviving term is exactly (k eps)^2
    let oracle = ladder
        .eps
        .iter()
        .zip(&ladder.residual)
        .map(|(e, r)| (r / (k * k * e * e) - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(
        (ladder.order - 2.0).abs() <= 0.3,
        format!("residual order {:.4} (band 2 +- 0.3); max deviation from (k eps)^2 {oracle:.1e}", ladder.order),
    )
}

fn audit_grid() -> Grid {
    Grid::new(-16.0, 16.0, 256).unwrap()
}

fn audit_packets_on(grid: &Grid) -> Vec<WaveState> {
    [(1.0, 0.8, 1.0), (0.0, 1.0, 0.0), (-1.5, 1.2, -0.5)]
        .iter()
        .map(|&(x0, s, k)| gaussian_packet(grid, x0, s, k).unwrap())
        .collect()
}

fn criterion_4() -> Check {
    let psi = &audit_packets_on(&audit_grid())[0];
    let base = PropagatorSpec::new(1.0, FieldSpec::linear(0.4), FieldSpec::zero());
    let ladder = default_ladder(0.04);
    let order = |v: Variant| -> Result<f64, String> {
        let r = variant_audit(psi, &base.clone().with_variant(v), &ladder).map_err(|e| e.to_string())?;
        r.order.ok_or_else(|| "defect below the noise floor".to_string())
    };
    let half = order(Variant::Admissible)?;
    let none = order(Variant::NoT)?;
    let full = order(Variant::EndpointT)?;
    let candidates: Vec<f64> = (0..=20).map(|i| 0.02 * f64::from(i)).collect();
    let scan = empirical_a_scan(psi, 0.01, &base, &candidates).map_err(|e| e.to_string())?;
    verdict(
        (half - 2.0).abs() <= 0.3 && (none - 1.0).abs() <= 0.3 && (full - 1.0).abs() <= 0.3
            && (scan.best - 0.2).abs() <= 0.02 + 1e-12,
        format!(
            "orders a=u'/2 {half:.3}, a=0 {none:.3}, a=u' {full:.3}; scan best a = {:.2}",
            scan.best
        ),
    )
}

fn criterion_5() -> Check {
    let states = audit_packets_on(&audit_grid());
    let ladder = default_ladder(0.04);
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in [
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexD { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexU { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::XDependentD {
            field: FieldSpec::constant(1.0).plus(FieldSpec::sine(0.2, 1.0)),
        }),
    ] {
        let (_, v) = audit_packets(&states, &spec, &ladder).map_err(|e| e.to_string())?;
        ok &= v == Verdict::Drifts;
        parts.push(format!("{} {v:?}", spec.variant.name()));
    }
    let admissible = PropagatorSpec::new(1.0, FieldSpec::linear(0.4), FieldSpec::zero());
    let (reports, _) = audit_packets(&states, &admissible, &ladder).map_err(|e| e.to_string())?;
    let all = reports.iter().all(|r| r.verdict == Verdict::Conserves);
    ok &= all;
    parts.push(format!("admissible conserves on all three: {all}"));
    verdict(ok, parts.join(", "))
}

fn criterion_6() -> Check {
    let grid = Grid::new(-10.0, 10.0, 512).unwrap();
    let h = HamiltonianSpec::new(1.0, FieldSpec::linear(0.3), FieldSpec::harmonic(1.0));
    let spec = h.to_propagator();
    let (x0, sigma0) = (1.0, 1.0);
    let refine = 4;
    let fine_grid = Grid::new(-10.0, 10.0, 512 * refine).unwrap();
    let fine_psi = gaussian_packet(&fine_grid, x0, sigma0, 0.0).unwrap();
    let fine = cn_evolve(&fine_psi, 1e-4, 10_000, &h).map_err(|e| e.to_string())?;
    let reference = WaveState::new(
        grid,
        fine.last().amplitudes().iter().step_by(refine).copied().collect(),
        1.0,
    )
    .unwrap();
    let psi = gaussian_packet(&grid, x0, sigma0, 0.0).unwrap();
    let ladder = [0.02, 0.01, 0.005, 0.0025];
    let mut errors = Vec::new();
    for eps in ladder {
        let steps = (1.0_f64 / eps).round() as usize;
        let tr = evolve(&psi, eps, steps, &spec, StepMethod::Dense).map_err(|e| e.to_string())?;
        errors.push(l2_distance(tr.last(), &reference));
    }
    let order = loglog_slope(&ladder, &errors);

    let rhs = rhs_apply(&psi, &h).map_err(|e| e.to_string())?;
    let hpsi = hamiltonian_matrix(&h, &grid).unwrap().apply(psi.amplitudes());
    let identity = rhs
        .amplitudes()
        .iter()
        .zip(&hpsi)
        .map(|(r, hp)| (r + Complex64::i() * hp).norm())
        .fold(0.0, f64::max);
    let hermiticity = hermiticity_check(&h, &grid).unwrap();
    verdict(
        (order - 1.0).abs() <= 0.3 && identity <= 1e-10 && hermiticity <= 1e-12,
        format!(
            "L2 errors [{}], slope {order:.3}; operator identity {identity:.1e}; hermiticity {hermiticity:.1e}",
            sci(&errors)
        ),
    )
}

fn criterion_7() -> Check {
    let grid = Grid::new(-20.0, 20.0, 512).unwrap();
    let psi = gaussian_packet(&grid, 0.0, 1.0, 0.0).unwrap();
    let tr = evolve(&psi, 0.01, 200, &PropagatorSpec::free(1.0), StepMethod::Dense).map_err(|e| e.to_string())?;
    let var = moments(tr.last()).unwrap().variance;
    let (sigma0, d, t) = (1.0_f64, 1.0, 2.0);
    let exact = sigma0 * sigma0 + (d * t / (2.0 * sigma0)).powi(2);
    let rel = (var - exact).abs() / exact;
    verdict(rel <= 0.01, format!("variance {var:.6} vs {exact} (relative {rel:.1e}, tolerance 1e-2)"))
}

fn criterion_8() -> Check {
    let grid = Grid::new(-16.0, 16.0, 256).unwrap();
    let psi = gaussian_packet(&grid, 1.0, 0.8, 1.0).unwrap();
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(0.2), FieldSpec::harmonic(0.5));
    let r = phase_freedom_check(&psi, 0.01, 100, &spec, 1.0, StepMethod::Dense).map_err(|e| e.to_string())?;
    verdict(
        r.max_density_difference <= 1e-12 && r.phase_error <= 1e-9,
        format!(
            "max density difference {:.1e}; phase offset {:.12} vs {:.12}",
            r.max_density_difference, r.phase_offset, r.expected_offset
        ),
    )
}

fn criterion_9() -> Check {
    let (d, u, eps, n) = (1.0, 0.5, 0.01, 100);
    let spec = PropagatorSpec::new(d, FieldSpec::constant(u), FieldSpec::zero());
    let ensemble = sample_paths_from(0.0, 100_000, n, eps, &spec, 42, StepLaw::Gaussian).map_err(|e| e.to_string())?;
    let t = ensemble.time;
    let count = ensemble.len() as f64;
    let se_mean = (d * t / count).sqrt();
    let se_var = d * t * (2.0 / (count - 1.0)).sqrt();
    let z_mean = (ensemble.mean() - u * t) / se_mean;
    let z_var = (ensemble.variance() - d * t) / se_var;
    let hist = histogram_compare(&ensemble, &spec, 50).map_err(|e| e.to_string())?;

    // density propagation by the real kernel against an implicit diffusion solve
    let grid = Grid::new(-8.0, 10.0, 1024).unwrap();
    let p0 = RealState::gaussian(grid, 0.0, 0.1, 0.0).unwrap();
    let small = 1e-3;
    let steps = 1000;
    let kernel = evolve_real(&p0, small, steps, &spec).map_err(|e| e.to_string())?;
    let oracle = diffusion_evolve(&p0, small, steps, &spec, DiffusionScheme::Implicit).map_err(|e| e.to_string())?;
    let l1 = l1_distance(kernel.last().unwrap(), oracle.last().unwrap());
    verdict(
        z_mean.abs() <= 3.0 && z_var.abs() <= 3.0 && hist.l1 <= 0.05 && l1 <= 1e-3,
        format!(
            "mean {z_mean:+.2} SE, variance {z_var:+.2} SE; histogram L1 {:.4}; kernel vs oracle L1 {l1:.1e}",
            hist.l1
        ),
    )
}

fn dense_spectral_gap(n: usize, eps: f64, spec: &PropagatorSpec) -> Result<(f64, f64), String> {
    let grid = Grid::new(-10.0, 10.0, n).unwrap();
    let psi = gaussian_packet(&grid, 1.0, 1.0, 0.0).unwrap();
    let a = step_dense(&psi, eps, spec).map_err(|e| e.to_string())?;
    let b = step_spectral(&psi, eps, spec).map_err(|e| e.to_string())?;
    Ok((l2_distance(&a, &b), grid.dx()))
}

fn criterion_10() -> Check {
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(0.3), FieldSpec::harmonic(0.5));
    let ladder = [0.04, 0.02, 0.01, 0.005];
    let mut gaps = Vec::new();
    let mut c: f64 = 0.0;
    for eps in ladder {
        let (gap, dx) = dense_spectral_gap(512, eps, &spec)?;
        c = c.max(gap / (eps * eps + dx * dx));
        gaps.push(gap);
    }
    let order = loglog_slope(&ladder, &gaps);
    // the same constant must bound the gap as the grid is refined
    let eps = 0.01;
    let mut bounded = true;
    let mut grid_gaps = Vec::new();
    for n in [256, 512, 1024] {
        let (gap, dx) = dense_spectral_gap(n, eps, &spec)?;
        bounded &= gap <= c * (eps * eps + dx * dx);
        grid_gaps.push(gap);
    }
    verdict(
        (order - 2.0).abs() <= 0.3 && bounded,
        format!(
            "eps ladder gaps [{}], order {order:.3}; C = {c:.3} bounds n = 256, 512, 1024 gaps [{}]: {bounded}",
            sci(&gaps),
            sci(&grid_gaps)
        ),
    )
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run_cli(subcommand: &str, scenario: &Path, out: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gaussprop"))
        .arg(subcommand)
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    status.code().ok_or_else(|| "killed by a signal".to_string())
}

fn criterion_11() -> Check {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (sub, file) in [("audit", "variants.json"), ("moments", "default.json"), ("compare", "compare.json")] {
        let code = run_cli(sub, &scenarios().join(file), out.path())?;
        ok &= code == 0;
        parts.push(format!("{sub} {file} -> {code}"));
    }
    // a scenario whose expectation is wrong must fail the gate
    let text = std::fs::read_to_string(scenarios().join("variants.json")).map_err(|e| e.to_string())?;
    let mut broken: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    broken["audit"]["cases"][0]["expect"] = "drifts".into();
    broken["audit"]["cases"].as_array_mut().unwrap().truncate(1);
    let path = out.path().join("broken.json");
    std::fs::write(&path, broken.to_string()).map_err(|e| e.to_string())?;
    let code = run_cli("audit", &path, out.path())?;
    ok &= code == 1;
    parts.push(format!("wrong expectation -> {code}"));
    verdict(ok, parts.join(", "))
}

fn main() {
    let criteria: [(u32, fn() -> Check); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, check) in criteria {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
