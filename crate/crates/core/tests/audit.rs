use gaussprop::audit::*;
use gaussprop::propagate::StepMethod;
use gaussprop::{gaussian_packet, FieldSpec, Grid, PropagatorSpec, Variant, WaveState};

fn grid() -> Grid {
    Grid::new(-16.0, 16.0, 256).unwrap()
}

fn packets() -> Vec<WaveState> {
    [(0.0, 1.0, 0.0), (1.0, 0.8, 1.0), (-1.5, 1.2, -0.5)]
        .iter()
        .map(|&(x0, s, k)| gaussian_packet(&grid(), x0, s, k).unwrap())
        .collect()
}

fn linear(k: f64) -> PropagatorSpec {
    PropagatorSpec::new(1.0, FieldSpec::linear(k), FieldSpec::zero())
}

#[test]
fn midpoint_rule_is_the_only_conserving_choice() {
    let ladder = default_ladder(0.04);
    let psi = &packets()[1];
    let adm = variant_audit(psi, &linear(0.4), &ladder).unwrap();
    assert_eq!(adm.verdict, Verdict::Conserves);
    assert!((adm.order.unwrap() - 2.0).abs() < 0.3);
    for v in [Variant::NoT, Variant::EndpointT] {
        let r = variant_audit(psi, &linear(0.4).with_variant(v), &ladder).unwrap();
        assert_eq!(r.verdict, Verdict::Drifts);
        assert!((r.order.unwrap() - 1.0).abs() < 0.3);
    }
}

#[test]
fn no_t_defect_matches_predicted_rate() {
    let psi = &packets()[1];
    let spec = linear(0.4).with_variant(Variant::NoT);
    let predicted = analytic_drift_rate(psi, &spec, &FieldSpec::zero()).unwrap();
    assert!((predicted - 0.4).abs() < 1e-10);
    for eps in [0.01, 0.005] {
        let r = variant_audit(psi, &spec, &[eps, eps / 2.0]).unwrap();
        let measured = r.defect[0] / eps;
        assert!((measured - predicted).abs() < 0.1 * predicted.abs(), "{measured}");
    }
}

#[test]
fn variant_rates_match_their_generators() {
    let ladder = default_ladder(0.02);
    let cases = [
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexD { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexU { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::XDependentD {
            field: FieldSpec::constant(1.0).plus(FieldSpec::sine(0.2, 1.0)),
        }),
        linear(0.4).with_variant(Variant::EndpointT),
    ];
    for spec in cases {
        let r = variant_audit(&packets()[1], &spec, &ladder).unwrap();
        let p = r.predicted_rate.unwrap();
        assert!((r.measured_rate - p).abs() < 0.05 * p.abs(), "{}: {} vs {p}", r.variant, r.measured_rate);
    }
}

#[test]
fn falsified_variants_drift_on_some_packet() {
    let ladder = default_ladder(0.04);
    let states = packets();
    for spec in [
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexD { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexU { imag: 0.1 }),
        PropagatorSpec::free(1.0).with_variant(Variant::XDependentD {
            field: FieldSpec::constant(1.0).plus(FieldSpec::sine(0.2, 1.0)),
        }),
    ] {
        let (_, verdict) = audit_packets(&states, &spec, &ladder).unwrap();
        assert_eq!(verdict, Verdict::Drifts, "{}", spec.variant.name());
    }
    let (reports, verdict) = audit_packets(&states, &linear(0.4), &ladder).unwrap();
    assert_eq!(verdict, Verdict::Conserves);
    assert!(reports.iter().all(|r| r.verdict == Verdict::Conserves));
}

#[test]
fn phase_field_never_changes_a_verdict() {
    let ladder = default_ladder(0.04);
    let psi = &packets()[2];
    for base in [
        linear(0.4),
        linear(0.4).with_variant(Variant::NoT),
        PropagatorSpec::free(1.0).with_variant(Variant::ComplexD { imag: 0.1 }),
    ] {
        let verdicts: Vec<Verdict> = [FieldSpec::zero(), FieldSpec::constant(2.0), FieldSpec::sine(1.0, 1.0)]
            .into_iter()
            .map(|b| variant_audit(psi, &base.clone().with_phase(b), &ladder).unwrap().verdict)
            .collect();
        assert!(verdicts.iter().all(|v| *v == verdicts[0]), "{verdicts:?}");
    }
}

#[test]
fn required_a_zeroes_the_rate_for_many_drifts() {
    for u in [
        FieldSpec::linear(0.4),
        FieldSpec::sine(0.5, 1.3),
        FieldSpec::polynomial(vec![0.1, -0.2, 0.05]),
        FieldSpec::constant(1.0),
    ] {
        let spec = PropagatorSpec::new(1.0, u, FieldSpec::zero());
        for psi in packets() {
            let r = analytic_drift_rate(&psi, &spec, &required_a(&spec)).unwrap();
            assert!(r.abs() < 1e-10);
        }
    }
}

#[test]
fn scan_recovers_half_the_slope() {
    let candidates: Vec<f64> = (0..=20).map(|i| 0.02 * i as f64).collect();
    let scan = empirical_a_scan(&packets()[1], 0.01, &linear(0.4), &candidates).unwrap();
    assert!((scan.best - 0.2).abs() <= 0.02 + 1e-12, "{}", scan.best);
    let flat = empirical_a_scan(&packets()[0], 0.01, &linear(0.0), &candidates).unwrap();
    assert!(flat.best.abs() < 1e-12);
}

#[test]
fn phase_shift_accumulates() {
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(0.2), FieldSpec::harmonic(0.5));
    let r = phase_freedom_check(&packets()[1], 0.01, 10, &spec, 1.0, StepMethod::Dense).unwrap();
    assert!(r.max_density_difference < 1e-12);
    assert!((r.phase_offset + 0.1).abs() < 1e-9, "{}", r.phase_offset);
}

#[test]
fn exponential_and_linear_corrections_agree_to_second_order() {
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(0.4), FieldSpec::sine(1.0, 1.0));
    let gap = correction_form_gap(&packets()[1], &spec, &default_ladder(0.04)).unwrap();
    assert!((gap.order - 2.0).abs() < 0.3, "{gap:?}");
}

#[test]
fn integration_by_parts_identities() {
    for psi in packets() {
        assert!(boundary_current(&psi) < 1e-10);
    }
    // the discrete triple product vanishes at the rate of the central stencil
    let u = FieldSpec::linear(0.4);
    let at = |n: usize| {
        let g = Grid::new(-16.0, 16.0, n).unwrap();
        triple_product(&gaussian_packet(&g, 1.0, 0.8, 1.0).unwrap(), &u).abs()
    };
    let (coarse, fine) = (at(256), at(512));
    let dx: f64 = 32.0 / 256.0;
    assert!(coarse < dx * dx, "{coarse}");
    assert!((coarse / fine - 4.0).abs() < 0.2, "{coarse} {fine}");
}

#[test]
fn reports_serialize() {
    let r = variant_audit(&packets()[0], &linear(0.4), &default_ladder(0.04)).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"verdict\":\"conserves\""));
}
