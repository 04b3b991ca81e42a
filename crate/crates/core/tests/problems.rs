use fosp_core::brute::brute_force_max;
use fosp_core::geometry::Domain;
use fosp_core::instances::{build_instance, HardInstanceSpec};
use fosp_core::problems::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn builtins(rng: &mut ChaCha8Rng) -> Vec<ProblemInstance<f64>> {
    let mut v = vec![make_intro_example::<f64>()];
    for (dx, dy) in [(1usize, 1usize), (2, 2), (3, 1)] {
        let q = Quadratic::random(dx, dy, rng);
        let dom_x = Domain::boxed(vec![-1.0; dx], vec![1.0; dx]).unwrap();
        let dom_y = Domain::boxed(vec![-0.5; dy], vec![0.5; dy]).unwrap();
        v.push(make_quadratic(q, dom_x, dom_y).unwrap());
    }
    v.push(make_constant(2.5, Domain::interval(-1.0, 1.0).unwrap(), Domain::interval(0.0, 1.0).unwrap()).unwrap());
    let (b, c) = random_ball_cubic_data(6, 1.0, rng);
    v.push(make_ball_cubic(1.0, 1.0, 1.0, 1.0, b, c, 0.5, 1.0).unwrap());
    v
}

#[test]
fn intro_example_facts() {
    let p = make_intro_example::<f64>();
    assert_eq!(p.oracle.value(&[0.0], &[0.0]), 0.0);
    assert_eq!(p.oracle.grad_y(&[0.0], &[0.0]), vec![0.0]);
    assert_eq!(p.oracle.grad_x(&[0.0], &[0.0]), vec![0.0]);
    let (y, v) = brute_force_max(&p, &[1.0], 2001).unwrap();
    assert!((y[0] + 2.0).abs() < 1e-9);
    assert!((v - (-2.0 + 8.0 / 3.0)).abs() < 1e-9);
    // φ is minimized at x = 1 over a grid of X
    let phi = |x: f64| brute_force_max(&p, &[x], 2001).unwrap().1;
    let best = (0..=400).map(|i| i as f64 / 100.0).min_by(|a, b| phi(*a).partial_cmp(&phi(*b)).unwrap()).unwrap();
    assert!((best - 1.0).abs() < 1e-12);
}

#[test]
fn oracles_agree_with_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for p in builtins(&mut rng) {
        let rep = fd_check(&p, 100, &mut rng);
        assert!(rep.max() < 1e-5, "{}: {rep:?}", p.name);
    }
}

#[test]
fn declared_profiles_hold_on_builtins() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for p in builtins(&mut rng) {
        let rep = check_profile_by_sampling(&p, 2000, &mut rng);
        assert!(rep.ok(), "{}: {:?}", p.name, rep.violations.first());
    }
}

#[test]
fn documented_profile_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let f = build_instance(&HardInstanceSpec::<f64>::f(1, 1, 1.0, 1.0, 1.0, 2.0)).unwrap();
    assert_eq!((f.profile.lambda, f.profile.mu), (1.0, 1.0));
    let rep = check_profile_by_sampling(&f, 5000, &mut rng);
    assert!(rep.ok());
    assert!(rep.observed_lambda <= 1.0 + 1e-9 && rep.observed_mu <= 1.0 + 1e-9);

    let c = make_constant(3.0, Domain::interval(-2.0, 2.0).unwrap(), Domain::interval(-1.0, 1.0).unwrap()).unwrap();
    let rep = check_profile_by_sampling(&c, 500, &mut rng);
    assert!(rep.ok());
    assert_eq!(rep.grad_x_ratio, 0.0);
    assert_eq!((rep.observed_lambda, rep.observed_mu), (0.0, 0.0));

    let s = build_instance(&HardInstanceSpec::<f64>::sigmoid(1.0, 2f64.sqrt(), 1.0, 1.0)).unwrap();
    assert!(check_profile_by_sampling(&s, 5000, &mut rng).ok());
}

#[test]
fn bilinear_instances_have_affine_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for k in 1..=3 {
        let p = build_instance(&HardInstanceSpec::<f64>::f(k, 1, 1.0, 0.8, 1.5, 1.0)).unwrap();
        if p.bilinear {
            assert!(affine_coupling_check(&p, &mut rng, 1e-12));
        }
    }
    let q = Quadratic::random(2, 3, &mut rng);
    let p = make_quadratic(q, Domain::whole(2), Domain::ball(vec![0.0; 3], 1.0).unwrap()).unwrap();
    assert!(p.bilinear);
    let p = p.with_probe(Domain::boxed(vec![-1.0; 2], vec![1.0; 2]).unwrap()).unwrap();
    assert!(affine_coupling_check(&p, &mut rng, 1e-12));
    let s = build_instance(&HardInstanceSpec::<f64>::sigmoid(1.0, 2.0, 1.0, 1.0)).unwrap();
    assert!(!s.bilinear);
    assert!(!affine_coupling_check(&s, &mut rng, 1e-6));
}

#[test]
fn profiles_reject_bad_constants() {
    assert!(SmoothnessProfile::<f64>::new(0.0, 1.0, 1, 1.0, 1.0, 0.0).validate().is_err());
    assert!(SmoothnessProfile::<f64>::new(1.0, -1.0, 1, 1.0, 1.0, 0.0).validate().is_err());
    assert!(SmoothnessProfile::<f64>::new(1.0, 1.0, 1, f64::INFINITY, 1.0, 0.0).validate().is_err());
    // bilinear structure demands τ_k = 0 and σ_1 = μ
    assert!(SmoothnessProfile::<f64>::new(1.0, 1.0, 1, 1.0, 1.0, 0.3).check_bilinear().is_err());
    assert!(SmoothnessProfile::<f64>::new(1.0, 1.0, 1, 1.0, 0.5, 0.0).check_bilinear().is_err());
    assert!(SmoothnessProfile::<f64>::new(1.0, 1.0, 1, 1.0, 1.0, 0.0).check_bilinear().is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_quadratics_pass_fd_and_profile(seed in 0u64..10_000, dx in 1usize..4, dy in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Quadratic::random(dx, dy, &mut rng);
        let p = make_quadratic(q, Domain::boxed(vec![-1.0; dx], vec![1.0; dx]).unwrap(),
                               Domain::ball(vec![0.0; dy], 0.7).unwrap()).unwrap();
        prop_assert!(fd_check(&p, 20, &mut rng).max() < 1e-5);
        prop_assert!(check_profile_by_sampling(&p, 200, &mut rng).ok());
    }
}
