use fosp_core::geometry::Domain;
use fosp_core::instances::{build_instance, HardInstanceSpec};
use fosp_core::problems::*;
use fosp_core::surrogate::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bound_examples() {
    assert_eq!(value_error_bound_raw(2.0, 0.5, 0), 1.0);
    assert_eq!(value_error_bound_raw(6.0, 1.0, 2), 1.0);
    assert_eq!(gradx_error_bound_raw(3.0, 1.0, 1.0, 0), 2.0);
    assert_eq!(gradx_error_bound_raw(2.0, 2.0, 0.5, 1), 2.0);
    assert_eq!(lambda_bar(1.5, 3.0, 0.5, 0), 1.5);
    assert_eq!(lambda_bar(1.5, 3.0, 0.5, 2), 1.5 + 2.0 * 3.0 * 0.25 / 2.0);
}

#[test]
fn low_order_models_have_their_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let q = Quadratic::random(2, 2, &mut rng);
    let p = make_quadratic(q, Domain::boxed(vec![-1.0; 2], vec![1.0; 2]).unwrap(), Domain::ball(vec![0.0; 2], 1.0).unwrap()).unwrap();
    let yh = vec![0.3, -0.2];
    let m0 = SurrogateModel::new(p.clone(), 0, yh.clone()).unwrap();
    let m1 = SurrogateModel::new(p.clone(), 1, yh.clone()).unwrap();
    let m2 = SurrogateModel::new(p.clone(), 2, yh.clone()).unwrap();
    for _ in 0..50 {
        let x = p.sample_x(&mut rng);
        let y = p.sample_y(&mut rng);
        let y2 = p.sample_y(&mut rng);
        let fx = p.oracle.value(&x, &yh);
        assert_eq!(m0.value(&x, &y).unwrap(), fx);
        assert_eq!(m0.grad_x(&x, &y).unwrap(), p.oracle.grad_x(&x, &yh));
        // affine in y: midpoint value is the mean
        let mid: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
        let v = |y: &[f64]| m1.value(&x, y).unwrap();
        assert!((v(&mid) - 0.5 * (v(&y) + v(&y2))).abs() < 1e-12);
        // a quadratic is its own second-order expansion
        assert!((m2.value(&x, &y).unwrap() - p.oracle.value(&x, &y)).abs() < 1e-12);
        let g2 = m2.grad_x(&x, &y).unwrap();
        let g = p.oracle.grad_x(&x, &y);
        assert!(g2.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-12));
        let gc = m2.grad_x(&x, &yh).unwrap();
        assert!(gc.iter().zip(&p.oracle.grad_x(&x, &yh)).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}

#[test]
fn first_order_model_of_hard_family_matches_closed_form() {
    let (l, mu, rho) = (1.3, 0.7, 2.0);
    let spec = HardInstanceSpec::<f64>::f(1, 1, l, mu, rho, 2.0);
    let p = build_instance(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let yh: f64 = rng.gen_range(spec.y_lo()..spec.y_hi());
        let m = SurrogateModel::new(p.clone(), 1, vec![yh]).unwrap();
        let x: f64 = rng.gen_range(-2.0..2.0);
        let y: f64 = rng.gen_range(spec.y_lo()..spec.y_hi());
        let want = -0.5 * l * x * x + (mu * x + rho * yh) * y - 0.5 * rho * yh * yh;
        assert!((m.value(&[x], &[y]).unwrap() - want).abs() < 1e-12);
        assert!((m.grad_x(&[x], &[y]).unwrap()[0] - (-l * x + mu * y)).abs() < 1e-12);
    }
}

#[test]
fn centers_outside_y_and_missing_orders_are_rejected() {
    let p = build_instance(&HardInstanceSpec::<f64>::f(1, 1, 1.0, 1.0, 1.0, 1.0)).unwrap();
    assert!(SurrogateModel::new(p.clone(), 1, vec![5.0]).is_err());
    let m = SurrogateModel::new(p.clone(), 1, vec![0.0]).unwrap();
    assert!(m.value(&[0.0], &[5.0]).is_err());
    let q = Quadratic::random(1, 3, &mut ChaCha8Rng::seed_from_u64(1));
    let quad = make_quadratic(q, Domain::interval(-1.0, 1.0).unwrap(), Domain::ball(vec![0.0; 3], 1.0).unwrap()).unwrap();
    assert!(SurrogateModel::new(quad, 3, vec![0.0; 3]).is_err());
}

/// Hard-family instances on which the error bounds are sampled.
fn sampled_instances() -> Vec<(HardInstanceSpec<f64>, usize)> {
    let mut v = Vec::new();
    for k in 0..=3usize {
        for s in [-1i8, 1] {
            let s = if k == 0 { 0 } else { s };
            v.push((HardInstanceSpec::f(k, s, 1.2, 0.8, 1.7, 1.3), k));
        }
    }
    v.push((HardInstanceSpec::sigmoid(1.0, 2.0, 1.0, 1.0), 0));
    v
}

#[test]
fn error_bounds_hold_on_hard_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for (spec, k) in sampled_instances() {
        let p = build_instance(&spec).unwrap();
        for _ in 0..3 {
            let yh: f64 = rng.gen_range(spec.y_lo()..=spec.y_hi());
            let m = SurrogateModel::new(p.clone(), k, vec![yh]).unwrap();
            let e = sample_errors(&m, 3000, 1e-12, &mut rng).unwrap();
            assert_eq!(e.value_violations, 0, "{spec:?} k={k}: {e:?}");
            assert_eq!(e.gradx_violations, 0, "{spec:?} k={k}: {e:?}");
            assert_eq!(e.lipschitz_violations, 0, "{spec:?} k={k}: {e:?}");
            assert!(e.max_value_error <= m.value_error_bound().unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grad_x_matches_finite_differences(k in 0usize..=3, s in prop_oneof![Just(-1i8), Just(1i8)],
                                         x in -1.5f64..1.5, t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let spec = HardInstanceSpec::<f64>::f(k, if k == 0 { 0 } else { s }, 1.1, 0.9, 1.4, 1.2);
        let p = build_instance(&spec).unwrap();
        let lerp = |a: f64| spec.y_lo() + a * (spec.y_hi() - spec.y_lo());
        let m = SurrogateModel::new(p, k, vec![lerp(t)]).unwrap();
        let y = [lerp(u)];
        let h = 1e-5 * x.abs().max(1.0);
        let fd = (m.value(&[x + h], &y).unwrap() - m.value(&[x - h], &y).unwrap()) / (2.0 * h);
        let g = m.grad_x(&[x], &y).unwrap()[0];
        prop_assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0));
    }

    #[test]
    fn second_order_models_of_quadratics_are_exact(seed in 0u64..10_000, dx in 1usize..4, dy in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Quadratic::<f64>::random(dx, dy, &mut rng);
        let p = make_quadratic(q, Domain::boxed(vec![-1.0; dx], vec![1.0; dx]).unwrap(),
                               Domain::ball(vec![0.0; dy], 1.0).unwrap()).unwrap();
        let yh = p.sample_y(&mut rng);
        let m = SurrogateModel::new(p.clone(), 2, yh).unwrap();
        let x = p.sample_x(&mut rng);
        let y = p.sample_y(&mut rng);
        let err: f64 = (m.value(&x, &y).unwrap() - p.oracle.value(&x, &y)).abs();
        prop_assert!(err <= 1e-12);
    }
}
