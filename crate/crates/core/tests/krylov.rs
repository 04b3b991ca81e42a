use fosp_core::krylov::*;
use fosp_core::linalg::{dot, norm};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random symmetric matrix with spectral norm exactly `scale`.
fn random_sym(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = DMatrix::<f64>::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let s = (&a + a.transpose()) * 0.5;
    let n = s.symmetric_eigenvalues().amax();
    let s = s * (scale / n);
    (0..d * d).map(|i| s[(i / d, i % d)]).collect()
}

fn random_vec(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Dense trust-region maximum of `½yᵀHy + gᵀy` over `‖y‖ ≤ r`, by full
/// eigendecomposition and bisection on the secular equation.
fn dense_tr_max(h: &[f64], g: &[f64], r: f64) -> f64 {
    let d = g.len();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, h));
    let gp = eig.eigenvectors.transpose() * DVector::from_column_slice(g);
    let lam: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let top = lam.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let psi = |y: &[f64]| {
        let hy = DMatrix::from_row_slice(d, d, h) * DVector::from_column_slice(y);
        0.5 * dot(y, hy.as_slice()) + dot(g, y)
    };
    let back = |c: &[f64]| -> Vec<f64> { (eig.eigenvectors.clone() * DVector::from_column_slice(c)).as_slice().to_vec() };
    let coeffs = |w: f64| -> Vec<f64> { (0..d).map(|i| gp[i] / (w - lam[i])).collect() };
    let mut best = psi(&vec![0.0; d]);
    // interior stationary point for negative definite H
    if top < 0.0 {
        let c: Vec<f64> = (0..d).map(|i| -gp[i] / lam[i]).collect();
        if norm(&c) <= r {
            return psi(&back(&c)).max(best);
        }
    }
    // boundary: ‖z(ω)‖ = r for ω > max(top, 0), z(ω) = (ωI − H)⁻¹ g
    let lo0 = top.max(0.0);
    let nz = |w: f64| norm(&coeffs(w));
    let mut lo = lo0 + 1e-300_f64.max(lo0 * 1e-15);
    let mut hi = lo0 + 1.0;
    while nz(hi) > r {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    if nz(lo) >= r {
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if nz(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.max(psi(&back(&coeffs(hi))));
    } else {
        // hard case: top eigen-direction fills the remaining radius
        let mut c: Vec<f64> = (0..d).map(|i| if lam[i] < top - 1e-12 { gp[i] / (top - lam[i]) } else { 0.0 }).collect();
        let it = (0..d).find(|&i| lam[i] >= top - 1e-12).unwrap();
        c[it] = (r * r - norm(&c).powi(2)).max(0.0).sqrt();
        best = best.max(psi(&back(&c)));
    }
    best
}

fn mat_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn qt_h_q(h: &[f64], lz: &LanczosResult<f64>) -> Vec<f64> {
    let d = lz.q[0].len();
    let hm = DMatrix::from_row_slice(d, d, h);
    let n = lz.n();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let hq = &hm * DVector::from_column_slice(&lz.q[j]);
        for i in 0..n {
            out[i * n + j] = dot(&lz.q[i], hq.as_slice());
        }
    }
    out
}

fn qt_q(lz: &LanczosResult<f64>) -> f64 {
    let n = lz.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&lz.q[i], &lz.q[j]) - want).abs());
        }
    }
    worst
}

#[test]
fn lanczos_invariants_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &(d, m) in &[(6usize, 3usize), (32, 8), (128, 20)] {
        let h = random_sym(d, 1.0, &mut rng);
        let g = random_vec(d, &mut rng);
        let xi = random_vec(d, &mut rng);
        let q = QuadraticForm::from_dense(h.clone(), g.clone()).unwrap();
        let lz = block_lanczos(&q, &xi, m).unwrap();
        assert_eq!(lz.n(), 2 * m);
        assert!(qt_q(&lz) <= 1e-8);
        assert!(mat_err(&qt_h_q(&h, &lz), &lz.h_tilde) <= 1e-8);
        // pentadiagonal by construction
        let n = lz.n();
        for i in 0..n {
            for j in 0..n {
                if (i as i64 - j as i64).abs() > 3 {
                    assert_eq!(lz.h_tilde[i * n + j], 0.0);
                }
            }
        }
        // exactly one product per column, one more for Ψ in approx_max
        assert_eq!(q.hvp_calls(), 2 * m);
    }
}

#[test]
fn first_block_is_orthonormalized_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = random_sym(10, 1.0, &mut rng);
    let g = random_vec(10, &mut rng);
    let xi = random_vec(10, &mut rng);
    let q = QuadraticForm::from_dense(h, g.clone()).unwrap();
    let lz = block_lanczos(&q, &xi, 2).unwrap();
    // q₁ spans {g, ξ}: its first column is g/‖g‖ and both inputs lie in span(q₁)
    let gn = norm(&g);
    assert!(lz.q[0].iter().zip(&g).all(|(a, b)| (a - b / gn).abs() < 1e-12));
    for v in [&g, &xi] {
        let c0 = dot(&lz.q[0], v);
        let c1 = dot(&lz.q[1], v);
        let resid: f64 = v.iter().enumerate().map(|(i, &x)| (x - c0 * lz.q[0][i] - c1 * lz.q[1][i]).powi(2)).sum();
        assert!(resid.sqrt() < 1e-10 * norm(v));
    }
}

#[test]
fn identity_hessian_breaks_down() {
    let d = 7;
    let mut h = vec![0.0; d * d];
    for i in 0..d {
        h[i * d + i] = 1.0;
    }
    let q = QuadraticForm::from_dense(h, vec![1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let lz = block_lanczos(&q, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 3).unwrap();
    assert!(lz.breakdown);
    assert_eq!(lz.n(), 2);
    assert_eq!(lz.m_used, 1);
}

#[test]
fn reduced_problem_examples() {
    let s = solve_reduced::<f64>(&[-1.0, 0.0, 0.0, -1.0], &[0.3, -0.4], 1.0).unwrap();
    assert_eq!(s.branch, Branch::Interior);
    assert!((s.z[0] - 0.3).abs() < 1e-12 && (s.z[1] + 0.4).abs() < 1e-12);

    // diag(1, −1), g = (0.1, 0), R = 1: compare with an angle sweep of the boundary
    let h = [1.0, 0.0, 0.0, -1.0];
    let g = [0.1, 0.0];
    let s = solve_reduced::<f64>(&h, &g, 1.0).unwrap();
    assert_eq!(s.branch, Branch::Boundary);
    assert!((norm(&s.z) - 1.0).abs() < 1e-9);
    let psi = |z: &[f64]| 0.5 * (z[0] * z[0] - z[1] * z[1]) + 0.1 * z[0];
    let sweep = (0..200_000)
        .map(|i| {
            let t = i as f64 / 200_000.0 * std::f64::consts::TAU;
            psi(&[t.cos(), t.sin()])
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((psi(&s.z) - sweep).abs() < 1e-9);

    // g = 0 with positive top eigenvalue: hard case, R times the top eigenvector
    let s = solve_reduced::<f64>(&[2.0, 0.0, 0.0, 0.5], &[0.0, 0.0], 1.5).unwrap();
    assert_eq!(s.branch, Branch::Boundary);
    assert!(s.hard_case);
    assert!((s.z[0].abs() - 1.5).abs() < 1e-9 && s.z[1].abs() < 1e-9);
}

#[test]
fn two_dimensional_problems_are_solved_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let h = random_sym(2, rng.gen_range(0.1..2.0), &mut rng);
        let g = random_vec(2, &mut rng);
        let r = rng.gen_range(0.1..2.0);
        let q = QuadraticForm::from_dense(h.clone(), g.clone()).unwrap();
        let res = approx_max(&q, r, 1e-3, 2.0, 0.1, &mut rng).unwrap();
        assert_eq!(res.m_requested, 1);
        assert!((res.value - dense_tr_max(&h, &g, r)).abs() < 1e-9);
    }
}

#[test]
fn concave_form_without_linear_term_returns_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 9;
    let mut h = random_sym(d, 1.0, &mut rng);
    for i in 0..d {
        h[i * d + i] -= 1.5;
    }
    let q = QuadraticForm::from_dense(h, vec![0.0; d]).unwrap();
    let res = approx_max(&q, 1.0, 1e-4, 2.5, 0.1, &mut rng).unwrap();
    assert!(norm(&res.y) < 1e-12);
    assert_eq!(res.value, 0.0);
}

#[test]
fn suboptimality_within_predicted_gap_and_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, r, delta, qf) = (32usize, 1.0, 1e-4, 0.1);
    let (mut within_gap, mut within_delta) = (0, 0);
    for _ in 0..100 {
        let h = random_sym(d, 1.0, &mut rng);
        let g = random_vec(d, &mut rng);
        let opt = dense_tr_max(&h, &g, r);
        let q = QuadraticForm::from_dense(h, g).unwrap();
        let res = approx_max(&q, r, delta, 1.0, qf, &mut rng).unwrap();
        assert!(norm(&res.y) <= r + 1e-9);
        assert!((res.value - q.value(&res.y)).abs() < 1e-12);
        assert!(res.value <= opt + 1e-9);
        // the predicted gap at the m actually run
        let gap = predicted_gap(d, r, 1.0, res.m_requested, qf);
        if opt - res.value <= gap {
            within_gap += 1;
        }
        if opt - res.value <= delta {
            within_delta += 1;
        }
        if !res.breakdown {
            assert_eq!(res.hvp_calls, 2 * res.m_requested + 1);
        }
    }
    assert!(within_gap >= 90, "{within_gap}");
    assert!(within_delta >= 90, "{within_delta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_dominates_origin_and_scaled_gradient(seed in 0u64..10_000, d in 3usize..24, r in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_sym(d, rng.gen_range(0.1..3.0), &mut rng);
        let g = random_vec(d, &mut rng);
        let q = QuadraticForm::from_dense(h, g.clone()).unwrap();
        let res = approx_max(&q, r, 1e-2, 3.0, 0.1, &mut rng).unwrap();
        let gn = norm(&g);
        let yg: Vec<f64> = g.iter().map(|v| v * r / gn).collect();
        prop_assert!(res.value >= q.value(&vec![0.0; d]).max(q.value(&yg)) - 1e-9);
        prop_assert!(norm(&res.y) <= r + 1e-9);
    }

    #[test]
    fn improvement_is_monotone_in_m(seed in 0u64..10_000, d in 4usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_sym(d, 1.0, &mut rng);
        let g = random_vec(d, &mut rng);
        let xi = random_vec(d, &mut rng);
        let q = QuadraticForm::from_dense(h, g).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for m in 1..=(d / 2).min(8) {
            let (y, _, _) = krylov_max_with(&q, 1.0, &xi, m).unwrap();
            let v = q.value(&y);
            prop_assert!(v >= prev - 1e-9);
            prev = v;
        }
    }

    #[test]
    fn hvp_is_linear_and_symmetric(seed in 0u64..10_000, d in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_sym(d, 1.0, &mut rng);
        let q = QuadraticForm::from_dense(h, vec![0.0; d]).unwrap();
        let (u, v) = (random_vec(d, &mut rng), random_vec(d, &mut rng));
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = q.hvp(&comb);
        let (hu, hv) = (q.hvp(&u), q.hvp(&v));
        for i in 0..d {
            prop_assert!((lhs[i] - a * hu[i] - b * hv[i]).abs() <= 1e-10);
        }
        prop_assert!((dot(&u, &hv) - dot(&v, &hu)).abs() <= 1e-10);
    }
}
