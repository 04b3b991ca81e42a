//! Primal functions `φ(x) = max_{y∈Y} f(x, y)`, their proximal maps and Moreau
//! envelope gradients, the `S_X` residual and FOSP verification.
//!
//! Conventions: with `lambda_bar = λ̄`, the prox solves
//! `min_{u∈X} φ(u) + λ̄‖u − x‖²` and the envelope gradient is
//! `∇φ_{2λ̄}(x) = 2λ̄(x − x⁺)`. The inner problem is strongly convex as soon
//! as `2λ̄` exceeds the weak-convexity modulus of `φ`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brute::{ascent_max, grid_max, near_maximizers_1d};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Domain;
use crate::krylov::{approx_max, solve_reduced, QuadraticForm};
use crate::linalg::{axpy, dot, norm, scale, sub};
use crate::problems::ProblemInstance;
use crate::surrogate::SurrogateModel;
use crate::Scalar;

/// How `φ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalMode {
    ClosedForm,
    Grid,
    Krylov,
    Ascent,
}

/// `φ`, a Danskin subgradient, and the weak-convexity modulus.
pub trait PrimalOracle<T: Scalar>: Send + Sync {
    /// The constraint set `X`.
    fn domain(&self) -> &Domain<T>;
    fn phi(&self, x: &[T]) -> Result<T>;
    /// An element of `∂φ(x)`.
    fn subgrad(&self, x: &[T]) -> Result<Vec<T>>;
    fn weak_convexity(&self) -> T;
    fn mode(&self) -> PrimalMode;

    /// Gradients `∇_x f(x, y)` at the (near-)maximizers `y`; their convex hull
    /// approximates `∂φ(x)` at kinks. Defaults to the single [`subgrad`](Self::subgrad).
    fn active_subgrads(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        Ok(vec![self.subgrad(x)?])
    }

    /// Analytic prox, when known.
    fn closed_prox(&self, _x: &[T], _lambda_bar: T) -> Option<Result<Vec<T>>> {
        None
    }

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

type PhiFn<T> = Arc<dyn Fn(&[T]) -> Result<T> + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;
type ProxFn<T> = Arc<dyn Fn(&[T], T) -> Result<Vec<T>> + Send + Sync>;

/// Primal oracle from closures.
#[derive(Clone)]
pub struct FnPrimal<T: Scalar> {
    pub domain: Domain<T>,
    pub weak_convexity: T,
    pub mode: PrimalMode,
    phi: PhiFn<T>,
    subgrad: GradFn<T>,
    prox: Option<ProxFn<T>>,
}

impl<T: Scalar> FnPrimal<T> {
    pub fn new(
        domain: Domain<T>,
        weak_convexity: T,
        mode: PrimalMode,
        phi: impl Fn(&[T]) -> Result<T> + Send + Sync + 'static,
        subgrad: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        FnPrimal { domain, weak_convexity, mode, phi: Arc::new(phi), subgrad: Arc::new(subgrad), prox: None }
    }

    pub fn with_prox(mut self, prox: impl Fn(&[T], T) -> Result<Vec<T>> + Send + Sync + 'static) -> Self {
        self.prox = Some(Arc::new(prox));
        self
    }
}

impl<T: Scalar> PrimalOracle<T> for FnPrimal<T> {
    fn domain(&self) -> &Domain<T> {
        &self.domain
    }
    fn phi(&self, x: &[T]) -> Result<T> {
        (self.phi)(x)
    }
    fn subgrad(&self, x: &[T]) -> Result<Vec<T>> {
        (self.subgrad)(x)
    }
    fn weak_convexity(&self) -> T {
        self.weak_convexity
    }
    fn mode(&self) -> PrimalMode {
        self.mode
    }
    fn closed_prox(&self, x: &[T], lambda_bar: T) -> Option<Result<Vec<T>>> {
        self.prox.as_ref().map(|p| p(x, lambda_bar))
    }
}

fn key<T: Scalar>(x: &[T]) -> Vec<u64> {
    x.iter().map(|v| v.as_f64().to_bits()).collect()
}

type MemoMap<T> = HashMap<Vec<u64>, (T, Vec<T>)>;

/// Memo of `x ↦ (φ(x), y*(x))`.
#[derive(Default)]
struct Memo<T: Scalar> {
    map: Mutex<MemoMap<T>>,
}

impl<T: Scalar> Memo<T> {
    fn get_or(&self, x: &[T], f: impl FnOnce() -> Result<(T, Vec<T>)>) -> Result<(T, Vec<T>)> {
        let k = key(x);
        if let Some(v) = self.map.lock().expect("memo lock").get(&k) {
            return Ok(v.clone());
        }
        let v = f()?;
        let mut m = self.map.lock().expect("memo lock");
        if m.len() > 200_000 {
            m.clear();
        }
        m.insert(k, v.clone());
        Ok(v)
    }
}

/// Inner maximization strategy for the true primal function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxMethod {
    /// Grid over `Y` (dimension at most 2), `resolution` points per axis.
    Grid { resolution: usize },
    /// Multi-start projected ascent; one start is the trust-region maximizer of
    /// the second-order expansion at the center of `Y`.
    Ascent { n_random: usize, iters: usize, seed: u64 },
}

/// `φ(x) = max_{y∈Y} f(x, y)` for a problem instance.
pub struct TruePrimal<T: Scalar> {
    pub instance: ProblemInstance<T>,
    pub method: MaxMethod,
    /// Weak-convexity modulus (`λ` by default).
    pub weak_convexity: T,
    memo: Memo<T>,
}

impl<T: Scalar> TruePrimal<T> {
    pub fn new(instance: ProblemInstance<T>, method: MaxMethod) -> Result<Self> {
        if let MaxMethod::Grid { .. } = method {
            if instance.dim_y() > 2 {
                return Err(Error::Unsupported("grid primal needs dim(Y) <= 2".into()));
            }
        }
        let wc = instance.profile.lambda;
        Ok(TruePrimal { instance, method, weak_convexity: wc, memo: Memo::default() })
    }

    pub fn grid(instance: ProblemInstance<T>) -> Result<Self> {
        Self::new(instance, MaxMethod::Grid { resolution: 2001 })
    }

    /// Maximizer and value at `x`.
    pub fn argmax(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        let p = &self.instance;
        self.memo.get_or(x, || match self.method {
            MaxMethod::Grid { resolution } => {
                let (y, v) = grid_max(&p.domain_y, resolution, &|y| p.oracle.value(x, y))?;
                Ok((v, y))
            }
            MaxMethod::Ascent { n_random, iters, seed } => {
                let c = p.domain_y.chebyshev_center();
                let mut seeds = vec![c.clone()];
                if let Domain::Ball { radius, .. } = &p.domain_y {
                    let h = p.hess_yy_dense(x, &c);
                    let g = p.oracle.grad_y(x, &c);
                    let s = solve_reduced(&h, &g, *radius)?;
                    seeds.push(axpy(&c, T::one(), &s.z));
                }
                let lip = p.profile.rho_1.unwrap_or(T::one()).max(T::of(1e-6));
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ hash_point(x));
                let (y, v) = ascent_max(
                    &p.domain_y,
                    &|y| p.oracle.value(x, y),
                    &|y| p.oracle.grad_y(x, y),
                    lip,
                    &seeds,
                    n_random,
                    iters,
                    &mut rng,
                )?;
                Ok((v, y))
            }
        })
    }
}

fn hash_point<T: Scalar>(x: &[T]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key(x) {
        h = (h ^ b).wrapping_mul(0x1000_0000_01b3);
    }
    h
}

impl<T: Scalar> PrimalOracle<T> for TruePrimal<T> {
    fn domain(&self) -> &Domain<T> {
        &self.instance.domain_x
    }
    fn phi(&self, x: &[T]) -> Result<T> {
        Ok(self.argmax(x)?.0)
    }
    fn subgrad(&self, x: &[T]) -> Result<Vec<T>> {
        let (_, y) = self.argmax(x)?;
        Ok(self.instance.oracle.grad_x(x, &y))
    }
    fn active_subgrads(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let p = &self.instance;
        match (&self.method, &p.domain_y) {
            (MaxMethod::Grid { resolution }, Domain::Interval { lo, hi }) => {
                let (v, _) = self.argmax(x)?;
                let tol = T::of(ACTIVE_TOL) * T::one().max(v.abs());
                let ys = near_maximizers_1d(*lo, *hi, *resolution, tol, &|t| p.oracle.value(x, &[t]));
                let mut out = vec![self.subgrad(x)?];
                out.extend(ys.into_iter().map(|(y, _)| p.oracle.grad_x(x, &[y])));
                Ok(out)
            }
            _ => Ok(vec![self.subgrad(x)?]),
        }
    }
    fn weak_convexity(&self) -> T {
        self.weak_convexity
    }
    fn mode(&self) -> PrimalMode {
        match self.method {
            MaxMethod::Grid { .. } => PrimalMode::Grid,
            MaxMethod::Ascent { .. } => PrimalMode::Ascent,
        }
    }
}

/// How the order-2 surrogate is maximized over a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadMethod {
    /// Dense eigendecomposition of `∇²_yy f(x, ŷ)`.
    Dense,
    /// Krylov oracle with accuracy `delta` and failure probability `q_fail`.
    Krylov { delta: f64, q_fail: f64, seed: u64 },
}

/// `φ̂(x) = max_{y∈Y} f̂_k(x, y)`.
pub struct SurrogatePrimal<T: Scalar> {
    pub model: SurrogateModel<T>,
    pub quad: QuadMethod,
    /// Grid resolution for the order ≥ 3 analytic case.
    pub resolution: usize,
    memo: Memo<T>,
}

impl<T: Scalar> SurrogatePrimal<T> {
    pub fn new(model: SurrogateModel<T>) -> Self {
        SurrogatePrimal { model, quad: QuadMethod::Dense, resolution: 2001, memo: Memo::default() }
    }

    pub fn with_quad(mut self, q: QuadMethod) -> Self {
        self.quad = q;
        self
    }

    /// Value and a maximizer of `f̂_k(x, ·)` over `Y`.
    pub fn argmax(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        let m = &self.model;
        let yh = &m.center;
        let dom = &m.base.domain_y;
        self.memo.get_or(x, || match m.k {
            0 => Ok((m.value_unchecked(x, yh), yh.clone())),
            1 => {
                let g = m.base.oracle.grad_y(x, yh);
                let y = dom.linear_argmax(&g, yh)?;
                Ok((m.value_unchecked(x, &y), y))
            }
            2 => {
                let o = &m.base.oracle;
                let g = o.grad_y(x, yh);
                let y = match dom {
                    Domain::Interval { lo, hi } => {
                        let h = o.hess_yy_vec(x, yh, &[T::one()])[0];
                        let mut cands = vec![*lo, *hi];
                        if h < T::zero() {
                            let s = yh[0] - g[0] / h;
                            if s > *lo && s < *hi {
                                cands.push(s);
                            }
                        }
                        let best = cands
                            .into_iter()
                            .map(|c| (m.value_unchecked(x, &[c]), c))
                            .fold(None::<(T, T)>, |b, (v, c)| match b {
                                Some((bv, _)) if bv >= v => b,
                                _ => Some((v, c)),
                            })
                            .expect("nonempty");
                        vec![best.1]
                    }
                    Domain::Ball { center, radius } => {
                        // Ψ(u) over ‖u‖ ≤ R with u = y − c; shift the linear term by H(c − ŷ)
                        let e = sub(center, yh);
                        let he = o.hess_yy_vec(x, yh, &e);
                        let gs = axpy(&g, T::one(), &he);
                        let u = match self.quad {
                            QuadMethod::Dense => {
                                let h = m.base.hess_yy_dense(x, yh);
                                solve_reduced(&h, &gs, *radius)?.z
                            }
                            QuadMethod::Krylov { delta, q_fail, seed } => {
                                let (xx, yy) = (x.to_vec(), yh.clone());
                                let oo = o.clone();
                                let q = QuadraticForm::from_fn(gs, move |v| oo.hess_yy_vec(&xx, &yy, v));
                                let rho1 = m.base.profile.rho_1.unwrap_or(T::one());
                                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ hash_point(x));
                                approx_max(&q, *radius, T::of(delta), rho1, T::of(q_fail), &mut rng)?.y
                            }
                        };
                        axpy(center, T::one(), &u)
                    }
                    _ => {
                        if dom.dim() <= 2 {
                            grid_max(dom, self.resolution, &|y| m.value_unchecked(x, y))?.0
                        } else {
                            return Err(Error::Unsupported("order-2 surrogate maximization needs an interval, a ball, or dim(Y) <= 2".into()));
                        }
                    }
                };
                Ok((m.value_unchecked(x, &y), y))
            }
            _ => {
                let (y, v) = grid_max(dom, self.resolution, &|y| m.value_unchecked(x, y))?;
                Ok((v, y))
            }
        })
    }
}

impl<T: Scalar> PrimalOracle<T> for SurrogatePrimal<T> {
    fn domain(&self) -> &Domain<T> {
        &self.model.base.domain_x
    }
    fn phi(&self, x: &[T]) -> Result<T> {
        Ok(self.argmax(x)?.0)
    }
    fn subgrad(&self, x: &[T]) -> Result<Vec<T>> {
        let (_, y) = self.argmax(x)?;
        self.model.grad_x_unchecked(x, &y)
    }
    fn weak_convexity(&self) -> T {
        self.model.lambda_bar
    }
    fn mode(&self) -> PrimalMode {
        match (self.model.k, self.quad, &self.model.base.domain_y) {
            (0 | 1, _, _) => PrimalMode::ClosedForm,
            (2, _, Domain::Interval { .. }) => PrimalMode::ClosedForm,
            (2, QuadMethod::Krylov { .. }, Domain::Ball { .. }) => PrimalMode::Krylov,
            (2, QuadMethod::Dense, Domain::Ball { .. }) => PrimalMode::ClosedForm,
            _ => PrimalMode::Grid,
        }
    }
}

// ---------------------------------------------------------------------------
// prox and envelope gradient

/// Inner-solver tolerance on the prox residual.
pub const PROX_RESIDUAL_TOL: f64 = 1e-7;

fn check_lambda<T: Scalar>(p: &dyn PrimalOracle<T>, lambda_bar: T) -> Result<T> {
    let m = T::of(2.0) * lambda_bar - p.weak_convexity();
    if !(m > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "prox needs 2*lambda_bar > weak convexity ({}), got lambda_bar = {lambda_bar}",
            p.weak_convexity()
        )));
    }
    Ok(m)
}

/// `argmin_{u∈X} φ(u) + λ̄‖u − x‖²`.
///
/// Closed-form oracles return their analytic prox. Otherwise: in one dimension,
/// bisection on the (monotone) subgradient of the strongly convex objective; in
/// two dimensions, a three-level 201×201 grid refinement; beyond that,
/// projected subgradient descent with step `2/(m(t+2))`, `m = 2λ̄ − wc`.
pub fn prox<T: Scalar>(p: &dyn PrimalOracle<T>, x: &[T], lambda_bar: T, inner_budget: usize) -> Result<Vec<T>> {
    check_dim(p.dim(), x.len())?;
    let m = check_lambda(p, lambda_bar)?;
    if let Some(r) = p.closed_prox(x, lambda_bar) {
        return r;
    }
    let dom = p.domain();
    let x = dom.project(x)?;
    let g = p.subgrad(&x)?;
    let two_lb = T::of(2.0) * lambda_bar;
    // ‖x⁺ − x‖ ≤ ‖g(x)‖ / m by strong convexity
    let rad = norm(&g) / m;
    if rad == T::zero() {
        return Ok(x);
    }
    match x.len() {
        1 => prox_1d(p, x[0], lambda_bar, rad, inner_budget).map(|u| vec![u]),
        2 => prox_grid2(p, &x, lambda_bar, rad),
        _ => {
            let h = |u: &[T]| -> Result<T> { Ok(p.phi(u)? + lambda_bar * norm(&sub(u, &x)).powi(2)) };
            let mut u = x.clone();
            let mut best = (h(&u)?, u.clone());
            for t in 0..inner_budget {
                let gu = axpy(&p.subgrad(&u)?, two_lb, &sub(&u, &x));
                let res = s_x(&u, &gu, two_lb, dom)?;
                if res <= T::of(PROX_RESIDUAL_TOL) {
                    return Ok(u);
                }
                let step = T::of(2.0) / (m * T::count(t + 2));
                u = dom.project(&axpy(&u, -step, &gu))?;
                let hv = h(&u)?;
                if hv < best.0 {
                    best = (hv, u.clone());
                }
            }
            let gb = axpy(&p.subgrad(&best.1)?, two_lb, &sub(&best.1, &x));
            let res = s_x(&best.1, &gb, two_lb, dom)?;
            if res <= T::of(PROX_RESIDUAL_TOL) {
                return Ok(best.1);
            }
            Err(Error::NonConverged {
                iterations: inner_budget,
                residual: res.as_f64(),
                best: best.1.iter().map(|v| v.as_f64()).collect(),
            })
        }
    }
}

fn prox_1d<T: Scalar>(p: &dyn PrimalOracle<T>, x: T, lambda_bar: T, rad: T, budget: usize) -> Result<T> {
    let two_lb = T::of(2.0) * lambda_bar;
    let dh = |u: T| -> Result<T> { Ok(p.subgrad(&[u])?[0] + two_lb * (u - x)) };
    let pad = rad * T::of(1e-6) + T::of(1e-12) * T::one().max(x.abs());
    let mut lo = x - rad - pad;
    let mut hi = x + rad + pad;
    if let Some((blo, bhi)) = p.domain().bounding_box() {
        lo = lo.max(blo[0]);
        hi = hi.min(bhi[0]);
        if lo >= hi {
            return Ok(lo);
        }
        if dh(lo)? >= T::zero() {
            return Ok(lo);
        }
        if dh(hi)? <= T::zero() {
            return Ok(hi);
        }
    }
    let tol = T::epsilon() * T::of(4.0) * T::one().max(x.abs()).max(rad);
    let mut it = 0;
    while hi - lo > tol && it < budget.max(200) {
        let mid = T::of(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dh(mid)? > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    Ok(T::of(0.5) * (lo + hi))
}

fn prox_grid2<T: Scalar>(p: &dyn PrimalOracle<T>, x: &[T], lambda_bar: T, rad: T) -> Result<Vec<T>> {
    let h = |u: &[T]| -> Result<T> { Ok(p.phi(u)? + lambda_bar * norm(&sub(u, x)).powi(2)) };
    let mut c = x.to_vec();
    let mut r = rad * T::of(1.0 + 1e-6);
    let n = 201usize;
    for _ in 0..3 {
        let mut best: Option<(T, Vec<T>)> = None;
        for i in 0..n {
            for j in 0..n {
                let a = c[0] - r + T::of(2.0) * r * T::count(i) / T::count(n - 1);
                let b = c[1] - r + T::of(2.0) * r * T::count(j) / T::count(n - 1);
                let u = p.domain().project(&[a, b])?;
                let v = h(&u)?;
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, u));
                }
            }
        }
        c = best.expect("nonempty grid").1;
        r = r * T::of(4.0) / T::count(n - 1);
    }
    Ok(c)
}

/// `∇φ_{2λ̄}(x) = 2λ̄(x − x⁺)`.
pub fn moreau_grad<T: Scalar>(p: &dyn PrimalOracle<T>, x: &[T], lambda_bar: T, inner_budget: usize) -> Result<Vec<T>> {
    let u = prox(p, x, lambda_bar, inner_budget)?;
    Ok(scale(T::of(2.0) * lambda_bar, &sub(x, &u)))
}

/// `sqrt(2·lam·max_{u∈X} {−⟨ξ, u−x⟩ − (lam/2)‖u−x‖²})`, maximized at `u = Π(x − ξ/lam)`.
pub fn s_x<T: Scalar>(x: &[T], xi: &[T], lam: T, dom: &Domain<T>) -> Result<T> {
    if !(lam > T::zero()) {
        return Err(Error::InvalidParameter("S_X needs lam > 0".into()));
    }
    check_dim(x.len(), xi.len())?;
    let u = dom.project(&axpy(x, -T::one() / lam, xi))?;
    let d = sub(&u, x);
    let inner = -dot(xi, &d) - lam / T::of(2.0) * dot(&d, &d);
    Ok((T::of(2.0) * lam * inner.max(T::zero())).sqrt())
}

/// The same quantity from a projected step: with `x̃ = x − ξ/lam` and
/// `x_next = Π(x̃)`, returns `lam·sqrt(⟨x_next − x, 2x̃ − x − x_next⟩)`.
pub fn s_x_from_step<T: Scalar>(x: &[T], x_tilde: &[T], x_next: &[T], lam: T) -> T {
    let d = sub(x_next, x);
    let w: Vec<T> = (0..x.len()).map(|i| T::of(2.0) * x_tilde[i] - x[i] - x_next[i]).collect();
    lam * dot(&d, &w).max(T::zero()).sqrt()
}

/// Outcome of a stationarity check.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport<T: Scalar> {
    pub moreau_grad_norm: T,
    pub prox_point: Vec<T>,
    /// `min S_X(x⁺, ξ, 2λ̄)` over the hull of the oracle's active subgradients at `x⁺`.
    pub s_x_residual: T,
    pub epsilon: T,
    pub lambda_bar: T,
    pub certified: bool,
}

/// Values within this relative gap of `φ(x)` count as active maximizers.
const ACTIVE_TOL: f64 = 1e-6;

/// `min S_X(x, ξ, lam)` over `ξ` in the convex hull of `gens`, by Frank-Wolfe
/// on `S_X²`, which is convex in `ξ` with gradient `−2lam(u* − x)`.
pub fn min_s_x_over_hull<T: Scalar>(x: &[T], gens: &[Vec<T>], lam: T, dom: &Domain<T>) -> Result<T> {
    let first = gens.first().ok_or_else(|| Error::InvalidParameter("empty generator set".into()))?;
    let mut xi = first.clone();
    let mut best = s_x(x, &xi, lam, dom)?;
    for g in &gens[1..] {
        let v = s_x(x, g, lam, dom)?;
        if v < best {
            best = v;
            xi = g.clone();
        }
    }
    if gens.len() == 1 {
        return Ok(best);
    }
    for t in 0..500 {
        let u = dom.project(&axpy(x, -T::one() / lam, &xi))?;
        let grad = scale(-T::of(2.0) * lam, &sub(&u, x));
        let vert = gens
            .iter()
            .min_by(|a, b| dot(&grad, a).partial_cmp(&dot(&grad, b)).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let step = T::of(2.0) / T::count(t + 2);
        xi = xi.iter().zip(vert).map(|(&a, &b)| a + step * (b - a)).collect();
        best = best.min(s_x(x, &xi, lam, dom)?);
    }
    Ok(best)
}

/// Checks `‖∇φ_{2λ̄}(x)‖ ≤ ε`.
pub fn verify_fosp<T: Scalar>(
    p: &dyn PrimalOracle<T>,
    x: &[T],
    epsilon: T,
    lambda_bar: T,
    inner_budget: usize,
) -> Result<StationarityReport<T>> {
    let u = prox(p, x, lambda_bar, inner_budget)?;
    let two_lb = T::of(2.0) * lambda_bar;
    let gnorm = two_lb * norm(&sub(x, &u));
    let gens = p.active_subgrads(&u)?;
    let res = min_s_x_over_hull(&u, &gens, two_lb, p.domain())?;
    Ok(StationarityReport {
        moreau_grad_norm: gnorm,
        prox_point: u,
        s_x_residual: res,
        epsilon,
        lambda_bar,
        certified: gnorm <= epsilon,
    })
}
