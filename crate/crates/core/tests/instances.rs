use fosp_core::instances::*;
use fosp_core::moreau::{moreau_grad, SurrogatePrimal, TruePrimal};
use fosp_core::problems::{check_profile_by_sampling, fd_check};
use fosp_core::surrogate::SurrogateModel;
use fosp_core::geometry::soft_threshold;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn numeric_pair(cert: &Certificate<f64>, x: f64) -> (f64, f64) {
    let inst = build_instance(&cert.instance).unwrap();
    let lam = cert.instance.lambda;
    let tp = TruePrimal::grid(inst.clone()).unwrap();
    let t = moreau_grad(&tp, &[x], lam, 10_000).unwrap()[0];
    let model = SurrogateModel::new(inst, cert.instance.k, vec![cert.y_hat]).unwrap();
    let sp = SurrogatePrimal::new(model);
    let s = moreau_grad(&sp, &[x], lam, 10_000).unwrap()[0];
    (s, t)
}

#[test]
fn certificate_numeric_cross_check() {
    let specs = vec![
        HardInstanceSpec::<f64>::f(0, 0, 1.0, 1.0, 1.0, 2.0),
        HardInstanceSpec::<f64>::sigmoid(1.0, 2.0, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(1, 0, 1.0, 1.0, 8.0, 2.0),
        HardInstanceSpec::<f64>::f(1, 0, 1.0, 3.0, 1.0, 2.0),
        HardInstanceSpec::<f64>::f(2, 0, 1.0, 0.1, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(2, 0, 1.0, 5.0, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(3, 0, 1.0, 5.0, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(3, 0, 1.0, 0.2, 2.0, 1.0),
        HardInstanceSpec::<f64>::f(4, 0, 2.0, 5.0, 3.0, 1.5),
    ];
    for spec in specs {
        let cert = certificate(&spec).unwrap();
        let (s, t) = numeric_pair(&cert, cert.x_star);
        assert!((s - cert.surrogate_moreau_grad).abs() < 1e-4, "{:?}: surrogate {s} vs {}", cert.construction, cert.surrogate_moreau_grad);
        assert!((t - cert.true_moreau_grad).abs() < 1e-4, "{:?}: true {t} vs {}", cert.construction, cert.true_moreau_grad);
    }
}

#[test]
fn closed_forms_match_numeric_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    use rand::Rng;
    let specs = vec![
        HardInstanceSpec::<f64>::f(0, 0, 1.0, 1.0, 1.0, 2.0),
        HardInstanceSpec::<f64>::sigmoid(1.0, 2.0, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(1, 0, 1.0, 1.0, 8.0, 2.0),
        HardInstanceSpec::<f64>::f(2, 0, 1.0, 5.0, 1.0, 1.0),
        HardInstanceSpec::<f64>::f(3, 0, 1.0, 5.0, 1.0, 1.0),
    ];
    for spec in specs {
        let cert = certificate(&spec).unwrap();
        let w = 2.0 * cert.x_star.abs().max(0.1);
        for _ in 0..4 {
            let x: f64 = rng.gen_range(-w..w);
            let (s, t) = numeric_pair(&cert, x);
            let sc = closed_form_moreau_grad(&cert.instance, PrimalKind::Surrogate(cert.y_hat), x).unwrap();
            let tc = closed_form_moreau_grad(&cert.instance, PrimalKind::True, x).unwrap();
            assert!((s - sc).abs() < 1e-4, "{:?} x={x}: {s} vs {sc}", cert.construction);
            assert!((t - tc).abs() < 1e-4, "{:?} x={x}: {t} vs {tc}", cert.construction);
        }
    }
}

/// Independent formulas written out by hand for each construction.
#[test]
fn closed_forms_match_hand_formulas() {
    // zero order quadratic: 2λ(x − [2x]_r) for |x| ≤ r
    let spec = HardInstanceSpec::<f64>::f(0, 0, 1.5, 1.0, 2.0, 2.0);
    let r = spec.r();
    for x in [-0.9 * r, -0.3 * r, 0.0, 0.4 * r, r] {
        let want = 2.0 * 1.5 * (x - soft_threshold(2.0 * x, r));
        let got = closed_form_moreau_grad(&spec, PrimalKind::True, x).unwrap();
        assert!((got - want).abs() < 1e-14);
    }
    // sigmoid: −2λx/3 for |x| ≤ 3r/4
    let spec = HardInstanceSpec::<f64>::sigmoid(1.0, 2.0, 1.0, 1.0);
    for x in [-0.7, -0.2, 0.3, 0.74] {
        let got = closed_form_moreau_grad(&spec, PrimalKind::True, x).unwrap();
        assert!((got + 2.0 * x / 3.0).abs() < 1e-14);
    }
    // first order, weak coupling: 2λx(μ² − λρ)/(λρ + μ²) while μ|u|/ρ ≤ R
    let (l, mu, rho, d) = (1.0, 1.0, 8.0, 2.0);
    let spec = HardInstanceSpec::<f64>::f(1, -1, l, mu, rho, d);
    for x in [-1.0, -0.3, 0.5, 1.0] {
        let want = 2.0 * l * x * (mu * mu - l * rho) / (l * rho + mu * mu);
        let got = closed_form_moreau_grad(&spec, PrimalKind::True, x).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    // shifted soft threshold for F_{1,1} at ŷ = R: 2λ(x + c − [2x + c]_r̄), c = ρR/μ
    let (l, mu, rho, d) = (1.0, 2.0f64.sqrt(), 1.0, 2.0);
    let spec = HardInstanceSpec::<f64>::f(1, 1, l, mu, rho, d);
    let (rr, c) = (mu * 1.0 / l, rho * 1.0 / mu);
    for x in [-1.3, -0.2, 0.4, 2.0] {
        let want = 2.0 * l * (x + c - soft_threshold(2.0 * x + c, rr));
        let got = closed_form_moreau_grad(&spec, PrimalKind::Surrogate(1.0), x).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn documented_example_values() {
    let c = certificate(&HardInstanceSpec::<f64>::f(0, 0, 1.0, 1.0, 1.0, 2.0)).unwrap();
    assert_eq!((c.y_hat, c.x_star), (0.5, 0.5));
    assert!((c.true_moreau_grad.abs() - 1.0).abs() < 1e-15);

    let c = certificate(&HardInstanceSpec::<f64>::f(1, 0, 1.0, 1.0, 8.0, 2.0)).unwrap();
    assert!(c.true_moreau_grad.abs() >= 2.0 / 3.0);

    let spec = HardInstanceSpec::<f64>::f(2, 0, 1.0, 5.0, 1.0, 1.0);
    let c = certificate(&spec).unwrap();
    let k = 2.0;
    let lower = (1.0 - 2f64.powf(-k)) * spec.mu_cr() * spec.d / (k + 1.0);
    assert!(c.true_moreau_grad.abs() >= lower * (1.0 - 1e-12));
    assert!(lower >= spec.mu_cr() * spec.d / (2.0 * k));
}

#[test]
fn hard_family_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = build_instance(&HardInstanceSpec::<f64>::f(1, 1, 1.0, 1.0, 1.0, 2.0)).unwrap();
    assert_eq!((f.profile.rho_k, f.profile.sigma_k, f.profile.tau_k), (1.0, 1.0, 0.0));
    assert!(check_profile_by_sampling(&f, 2000, &mut rng).ok());
    let s = build_instance(&HardInstanceSpec::<f64>::sigmoid(1.0, 2f64.sqrt(), 1.0, 1.0)).unwrap();
    assert!(check_profile_by_sampling(&s, 2000, &mut rng).ok());
    for k in 0..=5 {
        let spec = HardInstanceSpec::<f64>::f(k, if k == 0 { 0 } else { -1 }, 1.3, 0.7, 2.0, 1.1);
        let p = build_instance(&spec).unwrap();
        assert!(check_profile_by_sampling(&p, 2000, &mut rng).ok(), "k={k}");
        assert!(fd_check(&p, 100, &mut rng).max() < 1e-5, "k={k}");
    }
    assert!(fd_check(&s, 100, &mut rng).max() < 1e-5);
}

#[test]
fn odd_k_maximizer_is_unique_on_interval() {
    for k in [3usize, 5, 7] {
        let kf = k as f64;
        // w^k − (w − 1)^k − (2^k − 1) on [−k/(k−1), k/(k−1)] vanishes only at w = −1
        let hi = kf / (kf - 1.0);
        let n = 20001;
        let mut sign_changes = 0;
        let f = |w: f64| w.powi(k as i32) - (w - 1.0).powi(k as i32) - (2f64.powi(k as i32) - 1.0);
        let mut prev = f(-hi);
        for i in 1..n {
            let w = -hi + 2.0 * hi * i as f64 / (n - 1) as f64;
            let v = f(w);
            if (v > 0.0) != (prev > 0.0) {
                sign_changes += 1;
                assert!((w + 1.0).abs() < 1e-3);
            }
            prev = v;
        }
        assert_eq!(sign_changes, 1);
    }
}

fn spec_strategy() -> impl Strategy<Value = HardInstanceSpec<f64>> {
    (0usize..=5, 0.2f64..5.0, 0.05f64..10.0, 0.1f64..5.0, 0.1f64..3.0, any::<bool>()).prop_map(
        |(k, lambda, mu, rho, d, sig)| {
            if k == 0 {
                let mcr = (2.0 * lambda * rho / d).sqrt();
                if sig {
                    HardInstanceSpec::<f64>::sigmoid(lambda, mcr * (1.0 + mu), rho, d)
                } else {
                    HardInstanceSpec::<f64>::f(0, 0, lambda, mcr * mu / 10.0, rho, d)
                }
            } else {
                HardInstanceSpec::<f64>::f(k, 0, lambda, mu, rho, d)
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn certificates_hold_across_regimes(spec in spec_strategy()) {
        let c = certificate(&spec).unwrap();
        prop_assert!(c.surrogate_stationary(), "{:?}", c);
        prop_assert!(c.true_violation(), "{:?}", c);
    }

    #[test]
    fn moreau_grad_is_lipschitz(spec in spec_strategy(), x in -3.0f64..3.0, h in 1e-3f64..0.5) {
        // with ℓ = λ the prox map is 2ℓ/(2ℓ − λ) = 2 Lipschitz, so 2λ(x − x⁺) is 6λ-Lipschitz
        let c = certificate(&spec).unwrap();
        let g = |z| closed_form_moreau_grad(&c.instance, PrimalKind::True, z).unwrap();
        let l = c.instance.lambda;
        prop_assert!((g(x + h) - g(x)).abs() <= 6.0 * l * h * (1.0 + 1e-9));
    }
}
