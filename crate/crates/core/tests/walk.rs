use gaussprop::walk::*;
use gaussprop::{FieldSpec, Grid, PropagatorSpec};

#[test]
fn free_walk_variance() {
    let n = 100_000;
    let e = sample_paths(n, 100, 0.01, &PropagatorSpec::free(1.0), 11).unwrap();
    assert!((e.variance() - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
    let h = histogram_compare(&e, &PropagatorSpec::free(1.0), 50).unwrap();
    assert!(h.l1 <= 0.05, "{}", h.l1);
}

#[test]
fn drifting_walk_mean() {
    let n = 100_000;
    let spec = PropagatorSpec::new(1.0, FieldSpec::constant(0.5), FieldSpec::zero());
    let e = sample_paths(n, 200, 0.01, &spec, 5).unwrap();
    assert!((e.mean() - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
}

#[test]
fn seeds_reproduce_across_thread_counts() {
    let spec = PropagatorSpec::new(1.0, FieldSpec::sine(0.4, 1.0), FieldSpec::zero());
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_paths(20_000, 30, 0.02, &spec, 99).unwrap())
    };
    assert_eq!(run(1).positions, run(6).positions);
}

#[test]
fn skewed_steps_still_reach_a_gaussian() {
    let spec = PropagatorSpec::free(1.0);
    let single = sample_paths_from(0.0, 100_000, 1, 1.0, &spec, 3, StepLaw::Exponential).unwrap();
    let many = sample_paths_from(0.0, 100_000, 400, 1.0 / 400.0, &spec, 3, StepLaw::Exponential).unwrap();
    let far = histogram_compare_fitted(&single, 50).unwrap().l1;
    let near = histogram_compare_fitted(&many, 50).unwrap().l1;
    assert!(far > 0.2, "{far}");
    assert!(near < 0.05, "{near}");
    assert!((many.variance() - 1.0).abs() < 0.02);
}

#[test]
fn position_dependent_drift_matches_the_density_oracle() {
    let spec = PropagatorSpec::new(1.0, FieldSpec::linear(-0.5), FieldSpec::zero());
    let (eps, steps) = (0.01, 100);
    let e = sample_paths_from(1.0, 100_000, steps, eps, &spec, 21, StepLaw::Gaussian).unwrap();
    let g = Grid::new(-5.0, 5.0, 500).unwrap();
    let oracle = oracle_density(1.0, steps, eps, &spec, &g).unwrap();
    let h = histogram_compare_density(&e, &oracle, 50).unwrap();
    assert!(h.l1 <= 0.05, "{}", h.l1);
    assert!(histogram_compare(&e, &spec, 50).is_err());
}
