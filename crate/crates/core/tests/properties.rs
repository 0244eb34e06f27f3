use proptest::prelude::*;

use spikekit::bubble::{bubble_eval, make_context, Bubble, BubbleParams, DimensionContext};
use spikekit::field::{Affine, Combination};
use spikekit::greens::{ball_kernel, BallKernel, DomainKernel};
use spikekit::normalized::predict_unchecked;
use spikekit::pohozaev::p1_on;
use spikekit::quadrature::{integrate_ball, Ball, QuadratureSpec, SphereSamples};
use spikekit::reduced::{
    classify, deduplicate, interaction_matrix, psi_eval, psi_gradient, psi_hessian, CriticalPointRecord,
    SpikeConfiguration,
};

const N: usize = 6;

fn setup() -> (DimensionContext, BallKernel) {
    let ctx = make_context(N).unwrap();
    let k = ball_kernel(&ctx, &[0.0; N], 1.0).unwrap();
    (ctx, k)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.38f64..0.38, N)
}

/// Up to four spikes inside the ball with distinct points.
fn configuration() -> impl Strategy<Value = SpikeConfiguration> {
    (1usize..=4)
        .prop_flat_map(|k| (prop::collection::vec(point(), k), prop::collection::vec(0.05f64..0.6, k)))
        .prop_filter("distinct points", |(p, _)| {
            p.iter().enumerate().all(|(i, a)| p[i + 1..].iter().all(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() > 1e-2))
        })
        .prop_map(|(p, h)| SpikeConfiguration::new(p, h))
}

fn central_gradient(f: impl Fn(&[f64]) -> f64, z: &[f64]) -> Vec<f64> {
    (0..z.len())
        .map(|i| {
            let h = 1e-5 * z[i].abs().max(1e-2);
            let mut a = z.to_vec();
            let mut b = z.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn relabel(c: &SpikeConfiguration, perm: &[usize]) -> SpikeConfiguration {
    SpikeConfiguration::new(perm.iter().map(|&j| c.points[j].clone()).collect(), perm.iter().map(|&j| c.heights[j]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn psi_is_relabeling_invariant(c in configuration(), seed in any::<u64>()) {
        let (ctx, k) = setup();
        let mut perm: Vec<usize> = (0..c.k()).collect();
        perm.rotate_left((seed as usize) % c.k());
        if seed & 1 == 1 {
            perm.reverse();
        }
        let a = psi_eval(&ctx, &k, &c).unwrap();
        let b = psi_eval(&ctx, &k, &relabel(&c, &perm)).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn interaction_matrix_is_symmetric_with_robin_diagonal(c in configuration()) {
        let (_, k) = setup();
        let m = interaction_matrix(&k, &c.points).unwrap();
        prop_assert_eq!(&m, &m.transpose());
        for j in 0..c.k() {
            prop_assert_eq!(m[(j, j)], k.robin(&c.points[j]).unwrap());
        }
    }

    #[test]
    fn gradient_matches_central_differences(c in configuration()) {
        let (ctx, k) = setup();
        let (n, kk) = (N, c.k());
        let g = psi_gradient(&ctx, &k, &c).unwrap();
        let fd = central_gradient(|z| {
            let cz = SpikeConfiguration::unflatten(&nalgebra::DVector::from_column_slice(z), n, kk);
            psi_eval(&ctx, &k, &cz).unwrap()
        }, c.flatten().as_slice());
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * g.norm().max(1e-8), "err {err:e} vs |g| {:e}", g.norm());
    }

    #[test]
    fn hessian_is_symmetric_and_matches_gradient_differences(c in configuration()) {
        let (ctx, k) = setup();
        let (n, kk) = (N, c.k());
        let h = psi_hessian(&ctx, &k, &c).unwrap();
        prop_assert_eq!(&h, &h.transpose());
        let z = c.flatten();
        let col = (z.len() - 1).min(3);
        let fd = central_gradient(|w| {
            let cw = SpikeConfiguration::unflatten(&nalgebra::DVector::from_column_slice(w), n, kk);
            psi_gradient(&ctx, &k, &cw).unwrap()[col]
        }, z.as_slice());
        let err = (0..z.len()).map(|i| (h[(i, col)] - fd[i]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * h.column(col).norm().max(1e-8));
    }

    #[test]
    fn classification_ignores_labels(c in configuration()) {
        let (ctx, k) = setup();
        let rec = |conf: SpikeConfiguration| CriticalPointRecord {
            psi: 0.0,
            configuration: conf,
            gradient_norm: 0.0,
            hessian_spectrum: vec![],
            m_eigenvalues: vec![],
            nondegenerate: false,
            m_positive: false,
            iterations: 0,
            gradient_steps: 0,
        };
        let perm: Vec<usize> = (0..c.k()).rev().collect();
        let a = classify(&ctx, &k, &rec(c.clone()), 1e-6).unwrap();
        let b = classify(&ctx, &k, &rec(relabel(&c, &perm)), 1e-6).unwrap();
        prop_assert_eq!(a.nondegenerate, b.nondegenerate);
        prop_assert_eq!(a.m_positive, b.m_positive);
        for (x, y) in a.m_eigenvalues.iter().zip(&b.m_eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
        let merged = deduplicate(vec![a, b], 2.0);
        prop_assert_eq!(merged.len(), 1);
        let canon = c.canonical();
        prop_assert_eq!(&canon.canonical(), &canon);
    }

    #[test]
    fn green_is_symmetric_and_vanishes_on_the_sphere(x in point(), y in point(), d in point()) {
        let (_, k) = setup();
        prop_assume!(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-4);
        let gxy = k.green(&x, &y).unwrap();
        let gyx = k.green(&y, &x).unwrap();
        prop_assert!((gxy - gyx).abs() <= 1e-12 * gxy.abs().max(1.0));
        prop_assert!(gxy > 0.0);
        let s = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(s > 1e-3);
        let on: Vec<f64> = d.iter().map(|v| v / s).collect();
        prop_assert!(k.green(&x, &on).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn bubble_scales_with_height(c in point(), y in point(), mu in 0.1f64..20.0) {
        let ctx = make_context(N).unwrap();
        let m = (N as f64 - 2.0) / 2.0;
        let u = bubble_eval(&ctx, &BubbleParams::new(c.clone(), mu).unwrap(), &y);
        let z: Vec<f64> = y.iter().zip(&c).map(|(a, b)| mu * (a - b)).collect();
        let u0 = bubble_eval(&ctx, &BubbleParams::new(vec![0.0; N], 1.0).unwrap(), &z);
        prop_assert!((u - mu.powf(m) * u0).abs() <= 1e-12 * u.abs());
    }

    #[test]
    fn normalized_map_power_laws(mu in prop::collection::vec(0.05f64..0.5, 1..4), r1 in -8.0f64..-2.0, r2 in -8.0f64..-2.0) {
        let ctx = make_context(N).unwrap();
        let (_, k) = setup();
        let points: Vec<Vec<f64>> = (0..mu.len()).map(|j| { let mut p = vec![0.0; N]; p[0] = 0.2 * j as f64 - 0.2; p }).collect();
        let (rho1, rho2) = (10f64.powf(r1), 10f64.powf(r2));
        let a = predict_unchecked(&ctx, &k, &points, &mu, rho1).unwrap();
        let b = predict_unchecked(&ctx, &k, &points, &mu, rho2).unwrap();
        let e = (N as f64 - 4.0) / 2.0;
        prop_assert!(((b.lambda_rho / a.lambda_rho) / (rho2 / rho1).powf(e) - 1.0).abs() <= 1e-12);
        for j in 0..mu.len() {
            prop_assert!(((b.spike_heights[j] / a.spike_heights[j]) / (rho1 / rho2).sqrt() - 1.0).abs() <= 1e-12);
        }
        prop_assert!(a.matching.rate <= 1e-12 && a.matching.mass <= 1e-12);
        if mu.len() == 1 {
            prop_assert!((a.conventions.direct.height_constants[0] / a.conventions.inverted.height_constants[0] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn p1_is_bilinear_and_symmetric_on_shared_samples(
        s1 in prop::collection::vec(-2.0f64..2.0, N),
        s2 in prop::collection::vec(-2.0f64..2.0, N),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        mu in 0.5f64..3.0,
        seed in any::<u64>(),
    ) {
        let ctx = make_context(N).unwrap();
        let center = vec![0.1; N];
        let samples = SphereSamples::new(&center, 0.3, &QuadratureSpec::uniform(512, seed)).unwrap();
        let u = Bubble::new(&ctx, BubbleParams::new(vec![0.0; N], mu).unwrap());
        let v = Affine { offset: 0.5, slope: s1 };
        let w = Affine { offset: -1.0, slope: s2 };
        let mix = Combination { alpha, u: &v, beta, v: &w };
        let lhs = p1_on(&samples, &u, &mix).unwrap().value;
        let pv = p1_on(&samples, &u, &v).unwrap().value;
        let pw = p1_on(&samples, &u, &w).unwrap().value;
        let scale = pv.abs() * alpha.abs() + pw.abs() * beta.abs() + 1e-12;
        prop_assert!((lhs - alpha * pv - beta * pw).abs() <= 1e-11 * scale);
        let swapped = p1_on(&samples, &v, &u).unwrap().value;
        prop_assert!((swapped - pv).abs() <= 1e-12 * pv.abs().max(1e-12));
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), samples in 1usize..5000) {
        let ball = Ball::new(vec![0.0; N], 1.0);
        let spec = QuadratureSpec::uniform(samples, seed);
        let f = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>();
        let a = integrate_ball(f, &ball, &spec).unwrap();
        let b = integrate_ball(f, &ball, &spec).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
