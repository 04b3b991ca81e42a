//! Approximate maximization of `Ψ(y) = ½yᵀHy + gᵀy` over the ball `‖y‖ ≤ R`
//! through block Lanczos on the joint Krylov subspace `K_2m(H, {g, ξ})`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geometry::unit_sphere;
use crate::linalg::{axpy, dot, matvec, norm};
use crate::Scalar;

type Hvp<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Quadratic `½yᵀHy + gᵀy` with `H` available only through products.
pub struct QuadraticForm<T: Scalar> {
    pub g: Vec<T>,
    hvp: Hvp<T>,
    /// Row-major `H`, kept for test oracles.
    pub dense: Option<Vec<T>>,
    calls: AtomicUsize,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn from_fn(g: Vec<T>, hvp: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        QuadraticForm { g, hvp: Arc::new(hvp), dense: None, calls: AtomicUsize::new(0) }
    }

    pub fn from_dense(h: Vec<T>, g: Vec<T>) -> Result<Self> {
        let d = g.len();
        check_dim(d * d, h.len())?;
        let hh = h.clone();
        let mut q = Self::from_fn(g, move |v| matvec(d, d, &hh, v));
        q.dense = Some(h);
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `H v`; every call is counted.
    pub fn hvp(&self, v: &[T]) -> Vec<T> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.hvp)(v)
    }

    pub fn hvp_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    /// `Ψ(y)`, costing one product.
    pub fn value(&self, y: &[T]) -> T {
        let hy = self.hvp(y);
        T::of(0.5) * dot(y, &hy) + dot(&self.g, y)
    }
}

/// Orthonormal basis `Q` of the Krylov subspace with the projected matrix `H̃ = QᵀHQ`.
#[derive(Debug, Clone)]
pub struct LanczosResult<T: Scalar> {
    /// Columns of `Q`.
    pub q: Vec<Vec<T>>,
    /// `n x n` row-major, `n = q.len()`.
    pub h_tilde: Vec<T>,
    /// Completed block steps.
    pub m_used: usize,
    /// The subspace became invariant before `m` steps.
    pub breakdown: bool,
    /// Number of columns in each block.
    pub block_sizes: Vec<usize>,
}

impl<T: Scalar> LanczosResult<T> {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// `Q z`.
    pub fn lift(&self, z: &[T]) -> Vec<T> {
        let d = self.q.first().map_or(0, |c| c.len());
        let mut y = vec![T::zero(); d];
        for (c, &zi) in self.q.iter().zip(z) {
            y = axpy(&y, zi, c);
        }
        y
    }

    /// `Qᵀ v`.
    pub fn restrict(&self, v: &[T]) -> Vec<T> {
        self.q.iter().map(|c| dot(c, v)).collect()
    }
}

const BREAKDOWN_TOL: f64 = 1e-12;

/// Gram-Schmidt of `cols` against `basis` and each other, twice, dropping
/// columns whose residual norm falls below the breakdown tolerance.
/// Returns the new orthonormal columns and the upper-triangular coefficients
/// expressing the inputs in them (rows = kept columns).
fn orthonormalize<T: Scalar>(basis: &[Vec<T>], cols: &[Vec<T>]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut coef: Vec<Vec<T>> = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        let scale = T::one().max(norm(c));
        let mut w = c.clone();
        for _ in 0..2 {
            for b in basis {
                let a = dot(b, &w);
                w = axpy(&w, -a, b);
            }
            for o in &out {
                let a = dot(o, &w);
                w = axpy(&w, -a, o);
            }
        }
        let n = norm(&w);
        if n > T::of(BREAKDOWN_TOL) * scale {
            let col: Vec<T> = w.iter().map(|&v| v / n).collect();
            let mut row = vec![T::zero(); cols.len()];
            for (jj, cc) in cols.iter().enumerate().skip(j) {
                row[jj] = dot(&col, cc);
            }
            out.push(col);
            coef.push(row);
        }
    }
    (out, coef)
}

/// Block Lanczos with blocks of two columns started from `[g, ξ]`, with full
/// re-orthogonalization. Uses exactly one product per column of `Q`.
pub fn block_lanczos<T: Scalar>(q: &QuadraticForm<T>, xi: &[T], m: usize) -> Result<LanczosResult<T>> {
    let d = q.dim();
    check_dim(d, xi.len())?;
    if m == 0 {
        return Err(Error::InvalidParameter("block_lanczos needs m >= 1".into()));
    }
    let (first, _) = orthonormalize(&[], &[q.g.clone(), xi.to_vec()]);
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut blocks: Vec<usize> = Vec::new();
    // alpha_t = V_tᵀ H V_t; beta_t = V_{t+1}ᵀ H V_t (upper triangular)
    let mut alphas: Vec<Vec<Vec<T>>> = Vec::new();
    let mut betas: Vec<Vec<Vec<T>>> = Vec::new();
    let mut cur = first;
    let mut breakdown = false;
    let mut steps = 0;
    while steps < m {
        if cur.is_empty() {
            breakdown = true;
            break;
        }
        let hv: Vec<Vec<T>> = cur.iter().map(|v| q.hvp(v)).collect();
        let alpha: Vec<Vec<T>> = cur.iter().map(|vi| hv.iter().map(|hj| dot(vi, hj)).collect()).collect();
        cols.extend(cur.iter().cloned());
        blocks.push(cur.len());
        alphas.push(alpha);
        steps += 1;
        if steps == m {
            break;
        }
        let (next, coef) = orthonormalize(&cols, &hv);
        betas.push(coef);
        cur = next;
    }
    if steps == m && cur.is_empty() {
        breakdown = true;
    }
    let n = cols.len();
    let mut h = vec![T::zero(); n * n];
    let mut off = 0;
    for (t, &bs) in blocks.iter().enumerate() {
        for i in 0..bs {
            for j in 0..bs {
                h[(off + i) * n + off + j] = alphas[t][i][j];
            }
        }
        if t + 1 < blocks.len() {
            let nb = blocks[t + 1];
            for i in 0..nb {
                for j in 0..bs {
                    let v = betas[t][i][j];
                    h[(off + bs + i) * n + off + j] = v;
                    h[(off + j) * n + off + bs + i] = v;
                }
            }
        }
        off += bs;
    }
    // symmetrize the diagonal blocks against round-off
    for i in 0..n {
        for j in 0..i {
            let a = T::of(0.5) * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = a;
            h[j * n + i] = a;
        }
    }
    Ok(LanczosResult { q: cols, h_tilde: h, m_used: steps, breakdown, block_sizes: blocks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Interior,
    Boundary,
}

/// Solution of a small trust-region problem.
#[derive(Debug, Clone)]
pub struct ReducedSolution<T: Scalar> {
    pub z: Vec<T>,
    pub branch: Branch,
    pub hard_case: bool,
    /// Multiplier `ω` of the norm constraint.
    pub omega: T,
}

/// Maximizes `½zᵀHz + gᵀz` over `‖z‖ ≤ R` for a small dense symmetric `H`.
pub fn solve_reduced<T: Scalar>(h: &[T], g: &[T], r: T) -> Result<ReducedSolution<T>> {
    let n = g.len();
    check_dim(n * n, h.len())?;
    if n == 0 {
        return Ok(ReducedSolution { z: vec![], branch: Branch::Interior, hard_case: false, omega: T::zero() });
    }
    if !(r >= T::zero()) {
        return Err(Error::InvalidParameter("radius must be >= 0".into()));
    }
    let (w, v) = T::sym_eigen(n, h);
    let vec_i = |i: usize| &v[i * n..(i + 1) * n];
    let gh: Vec<T> = (0..n).map(|i| dot(vec_i(i), g)).collect();
    let gnorm = norm(g);
    let hinf = (0..n).map(|i| (0..n).map(|j| h[i * n + j].abs()).sum::<T>()).fold(T::zero(), T::max);
    let zero_tol = T::of(1e-10) * (T::one() + hinf);
    let w0 = w[n - 1];
    let combine = |coef: &dyn Fn(usize) -> T| {
        let mut z = vec![T::zero(); n];
        for i in 0..n {
            let c = coef(i);
            if c != T::zero() {
                z = axpy(&z, c, vec_i(i));
            }
        }
        z
    };

    // interior candidates
    if w0 < -zero_tol {
        let z = combine(&|i| -gh[i] / w[i]);
        if norm(&z) <= r {
            return Ok(ReducedSolution { z, branch: Branch::Interior, hard_case: false, omega: T::zero() });
        }
    } else if w0.abs() <= zero_tol {
        let null_res = (0..n)
            .filter(|&i| w[i].abs() <= zero_tol)
            .map(|i| gh[i] * gh[i])
            .sum::<T>()
            .sqrt();
        if null_res <= T::of(1e-8) * gnorm {
            let z = combine(&|i| if w[i].abs() <= zero_tol { T::zero() } else { -gh[i] / w[i] });
            if norm(&z) <= r {
                return Ok(ReducedSolution { z, branch: Branch::Interior, hard_case: false, omega: T::zero() });
            }
        }
    }

    if r == T::zero() {
        return Ok(ReducedSolution { z: vec![T::zero(); n], branch: Branch::Boundary, hard_case: false, omega: w0.max(T::zero()) });
    }

    // boundary: ω > max(ω₀, 0) with ‖z_ω‖ = R, z_ω = Σ ĝ_i/(ω - w_i) v_i
    let lo0 = w0.max(T::zero());
    let top_tol = T::of(1e-10) * (T::one() + gnorm);
    let top: Vec<usize> = (0..n).filter(|&i| w[i] >= w0 - zero_tol).collect();
    let top_g = top.iter().map(|&i| gh[i] * gh[i]).sum::<T>().sqrt();
    if w0 >= -zero_tol && top_g <= top_tol {
        // possible hard case: limit of ‖z_ω‖ as ω ↓ ω₀ excluding the top eigenspace
        let rest = |i: usize| !top.contains(&i);
        let lim = (0..n)
            .filter(|&i| rest(i))
            .map(|i| {
                let c = gh[i] / (lo0 - w[i]);
                c * c
            })
            .sum::<T>();
        if lim <= r * r {
            let mut z = combine(&|i| if rest(i) { gh[i] / (lo0 - w[i]) } else { T::zero() });
            let t = (r * r - lim).max(T::zero()).sqrt();
            z = axpy(&z, t, vec_i(n - 1));
            return Ok(ReducedSolution { z, branch: Branch::Boundary, hard_case: true, omega: lo0 });
        }
    }
    let znorm2 = |om: T| (0..n).map(|i| { let c = gh[i] / (om - w[i]); c * c }).sum::<T>();
    let mut lo = lo0;
    let mut hi = lo0 + gnorm / r;
    if !(hi > lo) {
        hi = lo + T::of(1e-300).max(T::epsilon());
    }
    // start from the right end, where Newton on 1/‖z‖ is monotone
    let mut om = hi;
    let mut converged = false;
    for _ in 0..200 {
        let n2 = znorm2(om);
        let zn = n2.sqrt();
        let psi = T::one() / zn - T::one() / r;
        if (zn - r).abs() <= T::of(1e-13) * r {
            converged = true;
            break;
        }
        if psi < T::zero() {
            lo = lo.max(om);
        } else {
            hi = hi.min(om);
        }
        let dn: T = (0..n).map(|i| gh[i] * gh[i] / (om - w[i]).powi(3)).sum();
        let dpsi = dn / (zn * n2);
        let mut next = om - psi / dpsi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = T::of(0.5) * (lo + hi);
        }
        if (hi - lo) <= T::epsilon() * (T::one() + hi.abs()) {
            om = next;
            converged = true;
            break;
        }
        om = next;
    }
    if !converged {
        return Err(Error::Numerical("trust-region root finder did not converge in 200 iterations".into()));
    }
    let mut z = combine(&|i| gh[i] / (om - w[i]));
    let zn = norm(&z);
    if zn > T::zero() {
        z = z.iter().map(|&v| v * r / zn).collect();
    }
    Ok(ReducedSolution { z, branch: Branch::Boundary, hard_case: false, omega: om })
}

/// Output of [`approx_max`].
#[derive(Debug, Clone, Serialize)]
pub struct KrylovResult<T: Scalar> {
    pub y: Vec<T>,
    pub value: T,
    pub branch: Branch,
    pub hard_case: bool,
    pub m_used: usize,
    pub m_requested: usize,
    pub breakdown: bool,
    pub predicted_gap: T,
    pub hvp_calls: usize,
}

/// `2 + log²(2√d / q)`.
pub fn log_factor<T: Scalar>(d: usize, q_fail: T) -> T {
    let l = (T::of(2.0) * T::count(d).sqrt() / q_fail).ln();
    T::of(2.0) + l * l
}

/// `m̄ = ⌈min{2R √(ρ₁/δ · (2 + log²(2√d/q))), d/2}⌉`, at least 1.
pub fn krylov_steps<T: Scalar>(d: usize, r: T, delta: T, rho1: T, q_fail: T) -> usize {
    let full = d.div_ceil(2);
    let m = T::of(2.0) * r * (rho1 / delta * log_factor(d, q_fail)).sqrt();
    let m = if m.is_finite() { m.ceil().to_usize().unwrap_or(full) } else { full };
    m.min(full).max(1)
}

/// `4ρ₁R²/m² · (2 + log²(2√d/q))`.
pub fn predicted_gap<T: Scalar>(d: usize, r: T, rho1: T, m: usize, q_fail: T) -> T {
    T::of(4.0) * rho1 * r * r / T::count(m * m) * log_factor(d, q_fail)
}

/// Runs `m` block steps with the given start vector and solves the reduced problem.
pub fn krylov_max_with<T: Scalar>(q: &QuadraticForm<T>, r: T, xi: &[T], m: usize) -> Result<(Vec<T>, ReducedSolution<T>, LanczosResult<T>)> {
    let lz = block_lanczos(q, xi, m)?;
    let gt = lz.restrict(&q.g);
    let sol = solve_reduced(&lz.h_tilde, &gt, r)?;
    let mut y = lz.lift(&sol.z);
    let yn = norm(&y);
    if yn > r {
        y = y.iter().map(|&v| v * r / yn).collect();
    }
    Ok((y, sol, lz))
}

/// δ-suboptimal maximizer (with probability `1 - q_fail`) of `Ψ` over the centered ball of radius `r`.
pub fn approx_max<T: Scalar, R: Rng + ?Sized>(
    q: &QuadraticForm<T>,
    r: T,
    delta: T,
    rho1: T,
    q_fail: T,
    rng: &mut R,
) -> Result<KrylovResult<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter("delta must be > 0".into()));
    }
    if !(q_fail > T::zero() && q_fail < T::one()) {
        return Err(Error::InvalidParameter("q_fail must lie in (0, 1)".into()));
    }
    let d = q.dim();
    let m = krylov_steps(d, r, delta, rho1, q_fail);
    let xi: Vec<T> = unit_sphere(d, rng);
    let before = q.hvp_calls();
    let (y, sol, lz) = krylov_max_with(q, r, &xi, m)?;
    let value = q.value(&y);
    Ok(KrylovResult {
        y,
        value,
        branch: sol.branch,
        hard_case: sol.hard_case,
        m_used: lz.m_used,
        m_requested: m,
        breakdown: lz.breakdown,
        predicted_gap: predicted_gap(d, r, rho1, m, q_fail),
        hvp_calls: q.hvp_calls() - before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_breaks_down_after_one_block() {
        let q = QuadraticForm::from_dense(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]).unwrap();
        let lz = block_lanczos(&q, &[0.0, 1.0, 1.0], 3).unwrap();
        assert!(lz.breakdown);
        assert_eq!(lz.n(), 2);
        assert_eq!(q.hvp_calls(), 2);
    }

    #[test]
    fn interior_concave() {
        let s = solve_reduced(&[-1.0, 0.0, 0.0, -1.0], &[0.3, 0.4], 1.0).unwrap();
        assert_eq!(s.branch, Branch::Interior);
        assert!((s.z[0] - 0.3f64).abs() < 1e-14 && (s.z[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn zero_gradient_positive_curvature_is_hard_case() {
        let s = solve_reduced(&[2.0f64, 0.0, 0.0, 1.0], &[0.0, 0.0], 1.5).unwrap();
        assert_eq!(s.branch, Branch::Boundary);
        assert!(s.hard_case);
        assert!((s.z[0].abs() - 1.5f64).abs() < 1e-12);
    }

    #[test]
    fn steps_formula() {
        assert_eq!(krylov_steps(2, 1.0, 1e-6, 1.0, 0.1), 1);
        assert_eq!(krylov_steps(32, 1.0, 1e-4, 1.0, 0.1), 16);
        assert!(krylov_steps(1000, 1.0, 1e-1, 1.0, 0.1) < 500);
    }
}
