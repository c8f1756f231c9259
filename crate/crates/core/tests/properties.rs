use std::f64::consts::PI;

use decorated_flows::curvature::{curvature, jacobian};
use decorated_flows::flow::{step, uniform_target, FlowConfig, FlowKind};
use decorated_flows::surgery::{delaunay_violations, flip_metric};
use decorated_flows::testkit::{
    oracle_angles_via_layout, oracle_delaunay_via_angles, oracle_flip_length_for, random_zero_sum, RandomMetricSpec,
};
use decorated_flows::{emit_dpm, parse_dpm, DecoratedMetric, Error, Preset};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRESETS: [Preset; 5] = [
    Preset::Tetrahedron,
    Preset::Octahedron,
    Preset::Icosahedron,
    Preset::TorusGrid(3),
    Preset::OneVertexTorus,
];

fn sample(preset: Preset, seed: u64, delaunay: bool) -> DecoratedMetric {
    let mut spec = RandomMetricSpec::new(preset, seed);
    spec.delaunay = delaunay;
    spec.sample(&mut spec.rng()).unwrap()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn preset() -> impl Strategy<Value = Preset> {
    (0..PRESETS.len()).prop_map(|i| PRESETS[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_bonnet_holds(p in preset(), seed in any::<u64>(), delaunay in any::<bool>()) {
        let m = sample(p, seed, delaunay);
        let chi = m.mesh().euler_characteristic();
        let k = curvature(&m).unwrap();
        prop_assert!(k.gauss_bonnet_residual(chi).abs() < 1e-9);
        prop_assert!(k.0.iter().all(|&x| x < 2.0 * PI));
    }

    #[test]
    fn angles_match_layout_oracle(a in 0.5..2.0f64, b in 0.5..2.0f64, t in 0.05..0.95f64) {
        let (lo, hi) = ((a - b).abs(), a + b);
        let c = lo + t * (hi - lo);
        let fast = decorated_flows::geometry::inner_angles(a, b, c).unwrap();
        let slow = oracle_angles_via_layout(a, b, c).unwrap();
        for (x, y) in fast.iter().zip(&slow) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((fast.iter().sum::<f64>() - PI).abs() < 1e-12);
    }

    #[test]
    fn delaunay_test_matches_angle_oracle(p in preset(), seed in any::<u64>()) {
        let m = sample(p, seed, false);
        let violating: Vec<usize> = delaunay_violations(&m).unwrap().iter().map(|v| v.edge).collect();
        for e in 0..m.mesh().num_edges() {
            match oracle_delaunay_via_angles(&m, e) {
                Ok(ok) => prop_assert_eq!(ok, !violating.contains(&e), "edge {}", e),
                // The oracle divides by the half-chord, which may vanish.
                Err(Error::ImaginaryChord { .. }) => {}
                Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
            }
        }
    }

    #[test]
    fn flips_are_isometries(seed in any::<u64>(), which in 0usize..30) {
        let m = sample(Preset::Icosahedron, seed, false);
        let mut flipped = m.clone();
        let expected = oracle_flip_length_for(&m, which).unwrap();
        let Ok(event) = flip_metric(&mut flipped, which) else {
            return Ok(());
        };
        prop_assert!((event.new_length - expected).abs() < 1e-10 * expected);
        let lengths = flipped.effective_lengths().unwrap();
        prop_assert!((lengths[which] - expected).abs() < 1e-10 * expected);
        let (k0, k1) = (curvature(&m).unwrap(), curvature(&flipped).unwrap());
        prop_assert!(k0.max_abs_diff(&k1.0) < 1e-10);
        let (a0, a1) = (m.total_area().unwrap(), flipped.total_area().unwrap());
        prop_assert!((a0 - a1).abs() < 1e-12 * a0);
        prop_assert_eq!(flipped.u(), m.u());

        let mut back = flipped.clone();
        flip_metric(&mut back, which).unwrap();
        let (la, lb) = (m.effective_lengths().unwrap(), back.effective_lengths().unwrap());
        for (x, y) in la.iter().zip(&lb) {
            prop_assert!((x - y).abs() < 1e-10 * x);
        }
        let unordered = |(a, b): (usize, usize)| (a.min(b), a.max(b));
        prop_assert_eq!(
            unordered(back.mesh().edge_endpoints(which)),
            unordered(m.mesh().edge_endpoints(which))
        );
    }

    #[test]
    fn conformal_change_keeps_inversive_distances(p in preset(), seed in any::<u64>(), amp in 0.0..0.3f64) {
        let m = sample(p, seed, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let du = random_zero_sum(&mut rng, m.num_vertices(), amp);
        let u: Vec<f64> = m.u().iter().zip(&du).map(|(a, b)| a + b).collect();
        let Ok(moved) = m.clone().with_u(u) else {
            return Ok(());
        };
        let (i0, i1) = (m.inversive_distances().unwrap(), moved.inversive_distances().unwrap());
        for (x, y) in i0.0.iter().zip(&i1.0) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn constant_shift_leaves_curvature_and_jacobian(p in preset(), seed in any::<u64>(), c in -1.0..1.0f64) {
        let m = sample(p, seed, true);
        let shifted = m.clone().with_u(m.u().iter().map(|x| x + c).collect()).unwrap();
        let (k0, k1) = (curvature(&m).unwrap(), curvature(&shifted).unwrap());
        prop_assert!(k0.max_abs_diff(&k1.0) < 1e-10);
        let (l0, l1) = (jacobian(&m).unwrap(), jacobian(&shifted).unwrap());
        prop_assert!(max_abs((&l0.matrix - &l1.matrix).iter().copied()) < 1e-9);
    }

    #[test]
    fn jacobian_is_symmetric_psd_with_constant_kernel(p in preset(), seed in any::<u64>()) {
        let m = sample(p, seed, true);
        let l = jacobian(&m).unwrap();
        let n = l.dim();
        prop_assert!(max_abs((&l.matrix - l.matrix.transpose()).iter().copied()) < 1e-14);
        prop_assert!(max_abs(l.apply_laplacian(&vec![1.0; n])) < 1e-12);
        let spectral = l.spectral().unwrap();
        let top = spectral.max_eigenvalue();
        prop_assert!(spectral.eigen.values.iter().all(|&x| x >= -1e-9 * top.max(1.0)));
    }

    #[test]
    fn scaling_leaves_curvature_and_weights(p in preset(), seed in any::<u64>(), scale in 0.1..10.0f64) {
        let m = sample(p, seed, true).folded().unwrap();
        let scaled = DecoratedMetric::new(
            m.mesh().clone(),
            m.base_lengths().iter().map(|l| l * scale).collect(),
            m.radii().iter().map(|r| r * scale).collect(),
        )
        .unwrap();
        let (k0, k1) = (curvature(&m).unwrap(), curvature(&scaled).unwrap());
        prop_assert!(k0.max_abs_diff(&k1.0) < 1e-10);
        let (l0, l1) = (jacobian(&m).unwrap(), jacobian(&scaled).unwrap());
        let tol = 1e-9 * max_abs(l0.matrix.iter().copied()).max(1.0);
        prop_assert!(max_abs((&l0.matrix - &l1.matrix).iter().copied()) < tol);
    }

    #[test]
    fn fractional_powers_compose(seed in any::<u64>(), a in 0.1..1.0f64, b in 0.1..1.0f64) {
        let m = sample(Preset::Icosahedron, seed, true);
        let l = jacobian(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_zero_sum(&mut rng, 12, 1.0);
        let inner = l.apply_fractional(b, &f).unwrap();
        let composed = l.apply_fractional(a, &inner).unwrap();
        let direct = l.apply_fractional(a + b, &f).unwrap();
        let scale = max_abs(direct.iter().copied()).max(1e-3);
        for (x, y) in composed.iter().zip(&direct) {
            prop_assert!((x + y).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn p_laplacian_sums_to_zero(p in preset(), seed in any::<u64>(), exponent in 1.1..4.0f64) {
        let m = sample(p, seed, true);
        let l = jacobian(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_zero_sum(&mut rng, l.dim(), 1.0);
        let d = l.apply_p_laplacian(exponent, &f).unwrap();
        let norm = max_abs(f.iter().copied()).max(1e-300);
        prop_assert!(d.iter().sum::<f64>().abs() < 1e-12 * norm * max_abs(l.matrix.iter().copied()).max(1.0) * l.dim() as f64);
    }

    #[test]
    fn dpm_round_trip_is_exact(p in preset(), seed in any::<u64>(), with_target in any::<bool>()) {
        let m = sample(p, seed, true);
        let target = with_target.then(|| uniform_target(&m).unwrap());
        let text = emit_dpm(&m, target.as_deref());
        let back = parse_dpm(&text).unwrap();
        prop_assert_eq!(back.metric.base_lengths(), m.base_lengths());
        prop_assert_eq!(back.metric.radii(), m.radii());
        prop_assert_eq!(back.metric.u(), m.u());
        prop_assert_eq!(back.metric.mesh().gluings(), m.mesh().gluings());
        prop_assert_eq!(back.target, target);
    }

    #[test]
    fn flow_steps_conserve_the_sum_of_u(p in preset(), seed in any::<u64>(), kind in 0usize..4) {
        let m = sample(p, seed, true);
        let kind = [FlowKind::Ricci, FlowKind::Calabi, FlowKind::Fractional(0.5), FlowKind::PCalabi(3.0)][kind];
        let cfg = FlowConfig::new(kind, uniform_target(&m).unwrap());
        let out = step(&m, &cfg, cfg.step).unwrap();
        let (s0, s1) = (m.u().iter().sum::<f64>(), out.metric.u().iter().sum::<f64>());
        prop_assert!((s0 - s1).abs() < 1e-9);
        prop_assert!(out.potential_increment <= 1e-12);
        prop_assert!(delaunay_violations(&out.metric).unwrap().is_empty());
    }
}
