use std::f64::consts::PI;

use spikekit::bubble::{make_context, Bubble, BubbleParams};
use spikekit::greens::ball_kernel;
use spikekit::pohozaev::{local_pohozaev_residual, IdentityKind};
use spikekit::quadrature::QuadratureSpec;
use spikekit::reduced::{
    enumerate_q, euler_value, find_critical_point, isolated_height, MultistartSpec, ReducedError, SolveError, SolverOptions,
    SpikeConfiguration,
};

#[test]
fn start_at_the_solution_needs_no_steps() {
    let ctx = make_context(6).unwrap();
    let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
    let start = SpikeConfiguration::new(vec![vec![0.0; 6]], vec![1.0 / 48f64.sqrt()]);
    let r = find_critical_point(&ctx, &k, &start, &SolverOptions::default()).unwrap();
    assert!(r.iterations <= 1);
    assert!((r.psi / -PI.powi(3) - 1.0).abs() < 1e-12);
    assert!(r.nondegenerate && r.m_positive);
}

#[test]
fn nearby_start_converges_quadratically() {
    let ctx = make_context(6).unwrap();
    let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
    let start = SpikeConfiguration::new(vec![vec![0.05, -0.02, 0.0, 0.01, 0.0, 0.0]], vec![0.15]);
    let r = find_critical_point(&ctx, &k, &start, &SolverOptions::default()).unwrap();
    assert!(r.iterations < 20);
    assert!(r.gradient_norm <= 1e-9);
    assert!(r.configuration.points[0].iter().all(|x| x.abs() < 1e-8));
    assert_eq!(r.gradient_steps, 0);
}

#[test]
fn collapsing_start_reports_failure() {
    let ctx = make_context(6).unwrap();
    let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
    let start = SpikeConfiguration::new(vec![vec![0.995, 0.0, 0.0, 0.0, 0.0, 0.0]], vec![1e-5]);
    match find_critical_point(&ctx, &k, &start, &SolverOptions::default()) {
        Err(SolveError::NonConvergence { last, .. }) | Err(SolveError::BoundaryEscape { last, .. }) => {
            assert_eq!(last.k(), 1);
        }
        other => panic!("expected a failure report, got {other:?}"),
    }
}

#[test]
fn invalid_starts_are_refused() {
    let ctx = make_context(6).unwrap();
    let k = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
    let outside = SpikeConfiguration::new(vec![vec![1.5, 0.0, 0.0, 0.0, 0.0, 0.0]], vec![0.1]);
    assert!(matches!(
        find_critical_point(&ctx, &k, &outside, &SolverOptions::default()),
        Err(SolveError::Reduced(ReducedError::InvalidConfiguration(_)))
    ));
    let p = vec![0.1; 6];
    let twin = SpikeConfiguration::new(vec![p.clone(), p], vec![0.1, 0.2]);
    assert!(matches!(
        find_critical_point(&ctx, &k, &twin, &SolverOptions::default()),
        Err(SolveError::Reduced(ReducedError::CoincidentPoints(0, 1)))
    ));
}

#[test]
fn single_spike_enumeration_across_dimensions() {
    for n in 5..=8 {
        let ctx = make_context(n).unwrap();
        let k = ball_kernel(&ctx, &vec![0.0; n], 1.0).unwrap();
        let recs = enumerate_q(&ctx, &k, 1, &MultistartSpec { starts: 32, seed: 7 }, &SolverOptions::default());
        assert_eq!(recs.len(), 1, "N={n}");
        let r = &recs[0];
        let mu = isolated_height(&ctx, &k, &vec![0.0; n]).unwrap();
        assert!((r.configuration.heights[0] - mu).abs() < 1e-8);
        assert!((r.psi / euler_value(&ctx, &r.configuration) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn bubble_satisfies_local_identities() {
    let ctx = make_context(6).unwrap();
    let u = Bubble::new(&ctx, BubbleParams::new(vec![0.0; 6], 2.0).unwrap());
    let spec = QuadratureSpec::uniform(20_000, 3);
    for kind in [IdentityKind::Dilation, IdentityKind::Translation { i: 0 }] {
        let center = [0.1, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = local_pohozaev_residual(&ctx, &u, 0.0, &center, 0.4, kind, &spec, &spec).unwrap();
        assert!(r.value.abs() <= 4.0 * r.stderr + 1e-10, "{kind:?}: {} ± {}", r.value, r.stderr);
    }
}
