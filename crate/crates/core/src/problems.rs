//! Oracle bundles for `f(x, y)`, smoothness profiles and built-in test problems.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{unit_sphere, Domain};
use crate::linalg::{dot, matvec, norm, sub, sym_norm};
use crate::Scalar;

/// Constants of the smoothness assumptions attached to a problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessProfile<T: Scalar> {
    pub lambda: T,
    pub mu: T,
    pub k: usize,
    pub rho_k: T,
    pub sigma_k: T,
    pub tau_k: T,
    /// x-Lipschitz constant of `f`.
    pub sigma_0: Option<T>,
    /// Lipschitz constant of the y-gradient.
    pub rho_1: Option<T>,
}

impl<T: Scalar> SmoothnessProfile<T> {
    pub fn new(lambda: T, mu: T, k: usize, rho_k: T, sigma_k: T, tau_k: T) -> Self {
        SmoothnessProfile { lambda, mu, k, rho_k, sigma_k, tau_k, sigma_0: None, rho_1: None }
    }

    pub fn with_sigma_0(mut self, s: T) -> Self {
        self.sigma_0 = Some(s);
        self
    }

    pub fn with_rho_1(mut self, r: T) -> Self {
        self.rho_1 = Some(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("rho_k", self.rho_k),
            ("sigma_k", self.sigma_k),
            ("tau_k", self.tau_k),
        ];
        if let Some(s) = self.sigma_0 {
            all.push(("sigma_0", s));
        }
        if let Some(r) = self.rho_1 {
            all.push(("rho_1", r));
        }
        for (name, v) in all {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.lambda > T::zero()) {
            return Err(Error::InvalidParameter("lambda must be > 0".into()));
        }
        Ok(())
    }

    /// Constraints implied by bilinear coupling: `tau_k = 0` and `sigma_k = mu * 1{k = 1}` for `k >= 1`.
    pub fn check_bilinear(&self) -> Result<()> {
        if self.k == 0 {
            return Ok(());
        }
        let want_sigma = if self.k == 1 { self.mu } else { T::zero() };
        if self.tau_k != T::zero() || self.sigma_k != want_sigma {
            return Err(Error::InvalidParameter(format!(
                "bilinear coupling needs tau_k = 0 and sigma_k = {want_sigma}, got tau_k = {}, sigma_k = {}",
                self.tau_k, self.sigma_k
            )));
        }
        Ok(())
    }
}

/// Derivative oracles of `f`.
///
/// `cross_jvp(x, y, v)` is `∇²_xy f(x, y) v`, the x-gradient of `<∇_y f(x, y), v>`.
/// `cross3_jvp(x, y, v)` is `∇³_xyy f(x, y)[·, v, v]`.
pub trait Oracle<T: Scalar>: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn value(&self, x: &[T], y: &[T]) -> T;
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T>;
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T>;
    fn hess_yy_vec(&self, x: &[T], y: &[T], v: &[T]) -> Vec<T>;
    fn cross_jvp(&self, x: &[T], y: &[T], v: &[T]) -> Vec<T>;

    fn cross3_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Option<Vec<T>> {
        None
    }

    fn has_cross3(&self) -> bool {
        false
    }

    /// `j`-th derivative in a scalar `y`, for analytic 1-D families.
    fn deriv_y(&self, _j: usize, _x: &[T], _y: T) -> Option<T> {
        None
    }

    /// x-gradient of the `j`-th scalar y-derivative.
    fn deriv_y_grad_x(&self, _j: usize, _x: &[T], _y: T) -> Option<Vec<T>> {
        None
    }
}

/// Oracle bundle together with its domains and declared constants.
#[derive(Clone)]
pub struct ProblemInstance<T: Scalar> {
    pub name: String,
    pub oracle: Arc<dyn Oracle<T>>,
    pub domain_x: Domain<T>,
    pub domain_y: Domain<T>,
    /// Compact region used whenever `domain_x` must be sampled or gridded.
    pub probe_x: Domain<T>,
    pub profile: SmoothnessProfile<T>,
    /// Declares the form `p(x) + <Ax, y> + q(y)`.
    pub bilinear: bool,
}

impl<T: Scalar> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("domain_x", &self.domain_x)
            .field("domain_y", &self.domain_y)
            .field("profile", &self.profile)
            .finish()
    }
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(
        name: impl Into<String>,
        oracle: Arc<dyn Oracle<T>>,
        domain_x: Domain<T>,
        domain_y: Domain<T>,
        profile: SmoothnessProfile<T>,
    ) -> Result<Self> {
        check_dim(oracle.dim_x(), domain_x.dim())?;
        check_dim(oracle.dim_y(), domain_y.dim())?;
        if !domain_y.is_bounded() {
            return Err(Error::InvalidDomain("Y must be compact".into()));
        }
        profile.validate()?;
        let probe_x = domain_x.clone();
        Ok(ProblemInstance { name: name.into(), oracle, domain_x, domain_y, probe_x, profile, bilinear: false })
    }

    pub fn with_probe(mut self, probe: Domain<T>) -> Result<Self> {
        check_dim(self.domain_x.dim(), probe.dim())?;
        if !probe.is_bounded() {
            return Err(Error::InvalidDomain("probe region must be bounded".into()));
        }
        self.probe_x = probe;
        Ok(self)
    }

    pub fn declare_bilinear(mut self) -> Result<Self> {
        self.profile.check_bilinear()?;
        self.bilinear = true;
        Ok(self)
    }

    pub fn diameter(&self) -> T {
        self.domain_y.diameter()
    }

    pub fn dim_x(&self) -> usize {
        self.oracle.dim_x()
    }

    pub fn dim_y(&self) -> usize {
        self.oracle.dim_y()
    }

    /// Sample of the compact x-probe region.
    pub fn sample_x<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.probe_x.sample(rng).expect("probe region is bounded")
    }

    pub fn sample_y<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.domain_y.sample(rng).expect("Y is bounded")
    }

    /// Dense `∇²_yy f(x, y)`, row-major.
    pub fn hess_yy_dense(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = self.dim_y();
        let mut h = vec![T::zero(); d * d];
        for j in 0..d {
            let mut e = vec![T::zero(); d];
            e[j] = T::one();
            let col = self.oracle.hess_yy_vec(x, y, &e);
            for i in 0..d {
                h[i * d + j] = col[i];
            }
        }
        h
    }

    /// Dense `∇²_xy f(x, y)` as a `dim_x x dim_y` row-major matrix.
    pub fn cross_dense(&self, x: &[T], y: &[T]) -> Vec<T> {
        let (dx, dy) = (self.dim_x(), self.dim_y());
        let mut m = vec![T::zero(); dx * dy];
        for j in 0..dy {
            let mut e = vec![T::zero(); dy];
            e[j] = T::one();
            let col = self.oracle.cross_jvp(x, y, &e);
            for i in 0..dx {
                m[i * dy + j] = col[i];
            }
        }
        m
    }
}

/// Operator norm of a `rows x cols` row-major matrix.
pub fn op_norm<T: Scalar>(rows: usize, cols: usize, m: &[T]) -> T {
    let mut g = vec![T::zero(); cols * cols];
    for i in 0..cols {
        for j in 0..cols {
            g[i * cols + j] = (0..rows).map(|r| m[r * cols + i] * m[r * cols + j]).sum();
        }
    }
    sym_norm(cols, &g).max(T::zero()).sqrt()
}

// ---------------------------------------------------------------------------
// Built-in problems

/// `f(x, y) = x y - y^3 / 3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntroExample;

impl<T: Scalar> Oracle<T> for IntroExample {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn value(&self, x: &[T], y: &[T]) -> T {
        x[0] * y[0] - y[0].powi(3) / T::of(3.0)
    }
    fn grad_x(&self, _x: &[T], y: &[T]) -> Vec<T> {
        vec![y[0]]
    }
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        vec![x[0] - y[0] * y[0]]
    }
    fn hess_yy_vec(&self, _x: &[T], y: &[T], v: &[T]) -> Vec<T> {
        vec![-T::of(2.0) * y[0] * v[0]]
    }
    fn cross_jvp(&self, _x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        vec![v[0]]
    }
    fn cross3_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Option<Vec<T>> {
        Some(vec![T::zero()])
    }
    fn has_cross3(&self) -> bool {
        true
    }
    fn deriv_y(&self, j: usize, x: &[T], y: T) -> Option<T> {
        Some(match j {
            0 => self.value(x, &[y]),
            1 => x[0] - y * y,
            2 => -T::of(2.0) * y,
            3 => -T::of(2.0),
            _ => T::zero(),
        })
    }
    fn deriv_y_grad_x(&self, j: usize, _x: &[T], y: T) -> Option<Vec<T>> {
        Some(vec![match j {
            0 => y,
            1 => T::one(),
            _ => T::zero(),
        }])
    }
}

/// The illustrative problem `x y - y^3/3` on `X = [0, 4]`, `Y = [-2, 2]`.
///
/// Profile (k = 1): `∇_x f = y` gives `mu = 1`; `lambda = 1` is a valid
/// (loose) upper bound. `|∂_y f(x,y') - ∂_y f(x,y)| = |y^2 - y'^2| <= 4|y'-y|`.
pub fn make_intro_example<T: Scalar>() -> ProblemInstance<T> {
    let one = T::one();
    let profile = SmoothnessProfile::new(one, one, 1, T::of(4.0), one, T::zero())
        .with_sigma_0(T::of(2.0))
        .with_rho_1(T::of(4.0));
    ProblemInstance::new(
        "intro",
        Arc::new(IntroExample),
        Domain::interval(T::zero(), T::of(4.0)).expect("valid"),
        Domain::interval(T::of(-2.0), T::of(2.0)).expect("valid"),
        profile,
    )
    .expect("consistent built-in")
}

/// `f(x, y) = ½xᵀAx + xᵀBy + ½yᵀCy + aᵀx + bᵀy` with dense row-major matrices.
#[derive(Debug, Clone)]
pub struct Quadratic<T: Scalar> {
    pub dx: usize,
    pub dy: usize,
    pub a_mat: Vec<T>,
    pub b_mat: Vec<T>,
    pub c_mat: Vec<T>,
    pub a_vec: Vec<T>,
    pub b_vec: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    fn bt_x(&self, x: &[T]) -> Vec<T> {
        (0..self.dy).map(|j| (0..self.dx).map(|i| self.b_mat[i * self.dy + j] * x[i]).sum()).collect()
    }

    /// Random instance with symmetric `A`, `C` of entries in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(dx: usize, dy: usize, rng: &mut R) -> Self {
        let mut u = || T::of(rng.gen_range(-1.0..1.0));
        let sym = |n: usize, u: &mut dyn FnMut() -> T| {
            let mut m = vec![T::zero(); n * n];
            for i in 0..n {
                for j in i..n {
                    let v = u();
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            m
        };
        let a_mat = sym(dx, &mut u);
        let c_mat = sym(dy, &mut u);
        let b_mat = (0..dx * dy).map(|_| u()).collect();
        let a_vec = (0..dx).map(|_| u()).collect();
        let b_vec = (0..dy).map(|_| u()).collect();
        Quadratic { dx, dy, a_mat, b_mat, c_mat, a_vec, b_vec }
    }
}

impl<T: Scalar> Oracle<T> for Quadratic<T> {
    fn dim_x(&self) -> usize {
        self.dx
    }
    fn dim_y(&self) -> usize {
        self.dy
    }
    fn value(&self, x: &[T], y: &[T]) -> T {
        let h = T::of(0.5);
        h * dot(x, &matvec(self.dx, self.dx, &self.a_mat, x))
            + dot(x, &matvec(self.dx, self.dy, &self.b_mat, y))
            + h * dot(y, &matvec(self.dy, self.dy, &self.c_mat, y))
            + dot(&self.a_vec, x)
            + dot(&self.b_vec, y)
    }
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        let ax = matvec(self.dx, self.dx, &self.a_mat, x);
        let by = matvec(self.dx, self.dy, &self.b_mat, y);
        (0..self.dx).map(|i| ax[i] + by[i] + self.a_vec[i]).collect()
    }
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        let btx = self.bt_x(x);
        let cy = matvec(self.dy, self.dy, &self.c_mat, y);
        (0..self.dy).map(|j| btx[j] + cy[j] + self.b_vec[j]).collect()
    }
    fn hess_yy_vec(&self, _x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        matvec(self.dy, self.dy, &self.c_mat, v)
    }
    fn cross_jvp(&self, _x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        matvec(self.dx, self.dy, &self.b_mat, v)
    }
    fn cross3_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Option<Vec<T>> {
        Some(vec![T::zero(); self.dx])
    }
    fn has_cross3(&self) -> bool {
        true
    }
}

/// Wraps a quadratic with its exact profile (k = 2, all third-order constants zero).
pub fn make_quadratic<T: Scalar>(q: Quadratic<T>, domain_x: Domain<T>, domain_y: Domain<T>) -> Result<ProblemInstance<T>> {
    let lambda = sym_norm(q.dx, &q.a_mat).max(T::of(1e-12));
    let mu = op_norm(q.dx, q.dy, &q.b_mat);
    let rho1 = sym_norm(q.dy, &q.c_mat);
    let mut profile = SmoothnessProfile::new(lambda, mu, 2, T::zero(), T::zero(), T::zero()).with_rho_1(rho1);
    // sup ‖∇_x f‖ ≤ ‖A‖·sup‖x‖ + ‖B‖·sup‖y‖ + ‖a‖ over bounded X
    if let (Some(sx), Some(sy)) = (domain_x.max_norm(), domain_y.max_norm()) {
        profile = profile.with_sigma_0(lambda * sx + mu * sy + norm(&q.a_vec));
    }
    ProblemInstance::new("quadratic", Arc::new(q), domain_x, domain_y, profile)?.declare_bilinear()
}

/// `f(x, y) = c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant<T: Scalar> {
    pub c: T,
    pub dx: usize,
    pub dy: usize,
}

impl<T: Scalar> Oracle<T> for Constant<T> {
    fn dim_x(&self) -> usize {
        self.dx
    }
    fn dim_y(&self) -> usize {
        self.dy
    }
    fn value(&self, _x: &[T], _y: &[T]) -> T {
        self.c
    }
    fn grad_x(&self, _x: &[T], _y: &[T]) -> Vec<T> {
        vec![T::zero(); self.dx]
    }
    fn grad_y(&self, _x: &[T], _y: &[T]) -> Vec<T> {
        vec![T::zero(); self.dy]
    }
    fn hess_yy_vec(&self, _x: &[T], _y: &[T], _v: &[T]) -> Vec<T> {
        vec![T::zero(); self.dy]
    }
    fn cross_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Vec<T> {
        vec![T::zero(); self.dx]
    }
    fn cross3_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Option<Vec<T>> {
        Some(vec![T::zero(); self.dx])
    }
    fn has_cross3(&self) -> bool {
        true
    }
    fn deriv_y(&self, j: usize, _x: &[T], _y: T) -> Option<T> {
        Some(if j == 0 { self.c } else { T::zero() })
    }
    fn deriv_y_grad_x(&self, _j: usize, _x: &[T], _y: T) -> Option<Vec<T>> {
        Some(vec![T::zero(); self.dx])
    }
}

/// Constant objective. `lambda` must be positive, so it is set to 1 (any positive value is valid).
pub fn make_constant<T: Scalar>(c: T, domain_x: Domain<T>, domain_y: Domain<T>) -> Result<ProblemInstance<T>> {
    let oracle = Constant { c, dx: domain_x.dim(), dy: domain_y.dim() };
    let z = T::zero();
    let profile = SmoothnessProfile::new(T::one(), z, 1, z, z, z).with_sigma_0(z).with_rho_1(z);
    ProblemInstance::new("constant", Arc::new(oracle), domain_x, domain_y, profile)?.declare_bilinear()
}

/// `f(x, y) = -λx²/2 + μ x <b, y> + ½yᵀCy + s(ρ/6) Σ|y_i|³` with scalar `x`.
#[derive(Debug, Clone)]
pub struct BallCubic<T: Scalar> {
    pub lambda: T,
    pub mu: T,
    pub rho: T,
    pub s: T,
    /// Unit coupling direction.
    pub b: Vec<T>,
    /// Symmetric, row-major.
    pub c: Vec<T>,
}

impl<T: Scalar> BallCubic<T> {
    fn dy(&self) -> usize {
        self.b.len()
    }
}

impl<T: Scalar> Oracle<T> for BallCubic<T> {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        self.dy()
    }
    fn value(&self, x: &[T], y: &[T]) -> T {
        let n = self.dy();
        let cubic: T = y.iter().map(|v| v.abs().powi(3)).sum();
        -self.lambda * x[0] * x[0] / T::of(2.0)
            + self.mu * x[0] * dot(&self.b, y)
            + T::of(0.5) * dot(y, &matvec(n, n, &self.c, y))
            + self.s * self.rho / T::of(6.0) * cubic
    }
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        vec![-self.lambda * x[0] + self.mu * dot(&self.b, y)]
    }
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = self.dy();
        let cy = matvec(n, n, &self.c, y);
        let h = T::of(0.5) * self.s * self.rho;
        (0..n).map(|i| self.mu * x[0] * self.b[i] + cy[i] + h * y[i].abs() * y[i]).collect()
    }
    fn hess_yy_vec(&self, _x: &[T], y: &[T], v: &[T]) -> Vec<T> {
        let n = self.dy();
        let cv = matvec(n, n, &self.c, v);
        (0..n).map(|i| cv[i] + self.s * self.rho * y[i].abs() * v[i]).collect()
    }
    fn cross_jvp(&self, _x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        vec![self.mu * dot(&self.b, v)]
    }
    fn cross3_jvp(&self, _x: &[T], _y: &[T], _v: &[T]) -> Option<Vec<T>> {
        Some(vec![T::zero()])
    }
    fn has_cross3(&self) -> bool {
        true
    }
}

/// Ball-constrained cubic instance: `x ∈ [-x_radius, x_radius]`, `Y` the centered ball of radius `D/2`.
///
/// Profile (k = 2): `ρ₂ = ρ`, `σ₂ = τ₂ = 0`, `ρ₁ = ‖C‖ + ρR`, `σ₀ = λ x_radius + μR`.
pub fn make_ball_cubic<T: Scalar>(
    lambda: T,
    mu: T,
    rho: T,
    s: T,
    b: Vec<T>,
    c: Vec<T>,
    diameter: T,
    x_radius: T,
) -> Result<ProblemInstance<T>> {
    let d = b.len();
    check_dim(d * d, c.len())?;
    let nb = norm(&b);
    if (nb - T::one()).abs() > T::of(1e-9) {
        return Err(Error::InvalidParameter("coupling direction b must be a unit vector".into()));
    }
    for i in 0..d {
        for j in 0..d {
            if (c[i * d + j] - c[j * d + i]).abs() > T::of(1e-12) {
                return Err(Error::InvalidParameter("C must be symmetric".into()));
            }
        }
    }
    let r = diameter / T::of(2.0);
    let rho1 = sym_norm(d, &c) + rho * r;
    let profile = SmoothnessProfile::new(lambda, mu, 2, rho, T::zero(), T::zero())
        .with_rho_1(rho1)
        .with_sigma_0(lambda * x_radius + mu * r);
    let oracle = BallCubic { lambda, mu, rho, s, b, c };
    ProblemInstance::new(
        "ball_cubic",
        Arc::new(oracle),
        Domain::interval(-x_radius, x_radius)?,
        Domain::ball(vec![T::zero(); d], r)?,
        profile,
    )
}

/// Random `BallCubic` ingredients: a unit `b` and a symmetric `C` scaled to spectral norm `c_norm`.
pub fn random_ball_cubic_data<T: Scalar, R: Rng + ?Sized>(d: usize, c_norm: T, rng: &mut R) -> (Vec<T>, Vec<T>) {
    let b = unit_sphere(d, rng);
    let mut c = vec![T::zero(); d * d];
    for i in 0..d {
        for j in i..d {
            let v = T::of(rng.gen_range(-1.0..1.0));
            c[i * d + j] = v;
            c[j * d + i] = v;
        }
    }
    let n = sym_norm(d, &c);
    if n > T::zero() {
        for v in c.iter_mut() {
            *v = *v * c_norm / n;
        }
    }
    (b, c)
}

// ---------------------------------------------------------------------------
// Oracle consistency checks

/// Central-difference step for a point.
pub fn fd_step<T: Scalar>(p: &[T]) -> T {
    T::of(1e-5) * T::one().max(norm(p))
}

/// Largest relative discrepancy between each declared oracle and central
/// differences at one point.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FdReport {
    pub grad_x: f64,
    pub grad_y: f64,
    pub hess_yy: f64,
    pub cross: f64,
}

impl FdReport {
    pub fn max(&self) -> f64 {
        self.grad_x.max(self.grad_y).max(self.hess_yy).max(self.cross)
    }

    fn merge(&mut self, o: &FdReport) {
        self.grad_x = self.grad_x.max(o.grad_x);
        self.grad_y = self.grad_y.max(o.grad_y);
        self.hess_yy = self.hess_yy.max(o.hess_yy);
        self.cross = self.cross.max(o.cross);
    }
}

fn rel_err<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let scale = T::one().max(norm(b)).max(norm(a));
    (norm(&sub(a, b)) / scale).as_f64()
}

/// Checks every oracle of `p` against central differences at `(x, y)`.
pub fn fd_check_at<T: Scalar>(p: &ProblemInstance<T>, x: &[T], y: &[T]) -> FdReport {
    let o = &p.oracle;
    let two = T::of(2.0);
    let hx = fd_step(x);
    let hy = fd_step(y);
    let shift = |v: &[T], i: usize, h: T| {
        let mut w = v.to_vec();
        w[i] += h;
        w
    };
    let gx_fd: Vec<T> = (0..x.len())
        .map(|i| (o.value(&shift(x, i, hx), y) - o.value(&shift(x, i, -hx), y)) / (two * hx))
        .collect();
    let gy_fd: Vec<T> = (0..y.len())
        .map(|i| (o.value(x, &shift(y, i, hy)) - o.value(x, &shift(y, i, -hy))) / (two * hy))
        .collect();
    let mut rng = probe_rng(x, y);
    let v: Vec<T> = unit_sphere(y.len(), &mut rng);
    let yp: Vec<T> = y.iter().zip(&v).map(|(&a, &b)| a + hy * b).collect();
    let ym: Vec<T> = y.iter().zip(&v).map(|(&a, &b)| a - hy * b).collect();
    let hv_fd: Vec<T> = o
        .grad_y(x, &yp)
        .iter()
        .zip(o.grad_y(x, &ym))
        .map(|(&a, b)| (a - b) / (two * hy))
        .collect();
    let cr_fd: Vec<T> = o
        .grad_x(x, &yp)
        .iter()
        .zip(o.grad_x(x, &ym))
        .map(|(&a, b)| (a - b) / (two * hy))
        .collect();
    FdReport {
        grad_x: rel_err(&o.grad_x(x, y), &gx_fd),
        grad_y: rel_err(&o.grad_y(x, y), &gy_fd),
        hess_yy: rel_err(&o.hess_yy_vec(x, y, &v), &hv_fd),
        cross: rel_err(&o.cross_jvp(x, y, &v), &cr_fd),
    }
}

/// Deterministic generator derived from a point, for probe directions.
fn probe_rng<T: Scalar>(x: &[T], y: &[T]) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for v in x.iter().chain(y) {
        h = (h ^ v.as_f64().to_bits()).wrapping_mul(0x1000_0000_01b3);
    }
    rand_chacha::ChaCha8Rng::seed_from_u64(h)
}

/// Worst finite-difference discrepancy over `n` random points of the probe region.
pub fn fd_check<T: Scalar, R: Rng + ?Sized>(p: &ProblemInstance<T>, n: usize, rng: &mut R) -> FdReport {
    let mut rep = FdReport::default();
    for _ in 0..n {
        let x = p.sample_x(rng);
        let y = p.sample_y(rng);
        rep.merge(&fd_check_at(p, &x, &y));
    }
    rep
}

/// Whether `grad_x(x, y) - grad_x(x, y')` is independent of `x` (probed at three x values).
pub fn affine_coupling_check<T: Scalar, R: Rng + ?Sized>(p: &ProblemInstance<T>, rng: &mut R, tol: T) -> bool {
    let y = p.sample_y(rng);
    let y2 = p.sample_y(rng);
    let diff = |x: &[T]| sub(&p.oracle.grad_x(x, &y), &p.oracle.grad_x(x, &y2));
    let x0 = p.sample_x(rng);
    let base = diff(&x0);
    (0..2).all(|_| {
        let x = p.sample_x(rng);
        norm(&sub(&diff(&x), &base)) <= tol * T::one().max(norm(&base))
    })
}

// ---------------------------------------------------------------------------
// Sampling validation of declared constants

/// A pair witnessing a violated assumption.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub assumption: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x2: Vec<f64>,
    pub y2: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Largest difference quotients observed while sampling.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ProfileReport {
    pub n_samples: usize,
    /// `max ‖Δ∇_x f‖ / (λ‖Δx‖ + μ‖Δy‖)`.
    pub grad_x_ratio: f64,
    pub observed_lambda: f64,
    pub observed_mu: f64,
    /// `max ‖Δ∇^k_y f‖ / (ρ_k‖Δy‖ + σ_k‖Δx‖)`; `None` when the tensor is not available.
    pub deriv_k_ratio: Option<f64>,
    pub observed_rho_k: Option<f64>,
    pub observed_sigma_k: Option<f64>,
    /// Lower estimate of the x-Lipschitz constant of `∇_x∇^k_y f` (k >= 1).
    pub observed_tau_k: Option<f64>,
    pub violations: Vec<Violation>,
}

impl ProfileReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// k-th y-derivative tensor flattened, when computable.
fn tensor_k<T: Scalar>(p: &ProblemInstance<T>, x: &[T], y: &[T]) -> Option<(Vec<T>, bool)> {
    let o = &p.oracle;
    match p.profile.k {
        0 => Some((vec![o.value(x, y)], false)),
        1 => Some((o.grad_y(x, y), false)),
        2 => Some((p.hess_yy_dense(x, y), true)),
        k if p.dim_y() == 1 => o.deriv_y(k, x, y[0]).map(|v| (vec![v], false)),
        _ => None,
    }
}

fn tensor_dist<T: Scalar>(p: &ProblemInstance<T>, a: &[T], b: &[T], is_matrix: bool) -> T {
    let d = sub(a, b);
    if is_matrix {
        sym_norm(p.dim_y(), &d)
    } else {
        norm(&d)
    }
}

/// `∇_x ∇^k_y f(x, y)` applied to a probe direction `v` in y (`v` ignored for k = 1 column choice).
fn mixed_k<T: Scalar>(p: &ProblemInstance<T>, x: &[T], y: &[T], v: &[T]) -> Option<Vec<T>> {
    let o = &p.oracle;
    match p.profile.k {
        0 => None,
        1 => Some(p.cross_dense(x, y)),
        2 => o.cross3_jvp(x, y, v),
        k if p.dim_y() == 1 => o.deriv_y_grad_x(k, x, y[0]),
        _ => None,
    }
}

/// Draws `n` random pairs in `probe_x × Y` and compares difference quotients
/// against the declared constants with `1e-9` slack.
pub fn check_profile_by_sampling<T: Scalar, R: Rng + ?Sized>(
    p: &ProblemInstance<T>,
    n: usize,
    rng: &mut R,
) -> ProfileReport {
    let pr = &p.profile;
    let slack = T::of(1e-9);
    let o = &p.oracle;
    let mut rep = ProfileReport { n_samples: n, ..Default::default() };
    let to64 = |v: &[T]| v.iter().map(|a| a.as_f64()).collect::<Vec<_>>();
    let flag = |rep: &mut ProfileReport, name: &str, x: &[T], y: &[T], x2: &[T], y2: &[T], lhs: T, rhs: T| {
        if lhs > rhs + slack * T::one().max(rhs) && rep.violations.len() < 16 {
            rep.violations.push(Violation {
                assumption: name.into(),
                x: to64(x),
                y: to64(y),
                x2: to64(x2),
                y2: to64(y2),
                lhs: lhs.as_f64(),
                rhs: rhs.as_f64(),
            });
        }
    };
    let ratio = |lhs: T, rhs: T| if rhs > T::zero() { (lhs / rhs).as_f64() } else if lhs > T::zero() { f64::INFINITY } else { 0.0 };
    let mut deriv_k_r = 0.0f64;
    let mut rho_obs = 0.0f64;
    let mut sig_obs = 0.0f64;
    let mut tau_obs = 0.0f64;
    let mut have_a2 = true;
    let mut have_a3 = pr.k >= 1;
    for _ in 0..n {
        let (x, y) = (p.sample_x(rng), p.sample_y(rng));
        let (x2, y2) = (p.sample_x(rng), p.sample_y(rng));
        let dx = norm(&sub(&x2, &x));
        let dy = norm(&sub(&y2, &y));

        // ∇_x f Lipschitz, joint and split
        let g = o.grad_x(&x, &y);
        let lhs = norm(&sub(&o.grad_x(&x2, &y2), &g));
        let rhs = pr.lambda * dx + pr.mu * dy;
        rep.grad_x_ratio = rep.grad_x_ratio.max(ratio(lhs, rhs));
        flag(&mut rep, "grad_x_lipschitz", &x, &y, &x2, &y2, lhs, rhs);
        let lx = norm(&sub(&o.grad_x(&x2, &y), &g));
        rep.observed_lambda = rep.observed_lambda.max(ratio(lx, dx));
        flag(&mut rep, "grad_x_lipschitz", &x, &y, &x2, &y, lx, pr.lambda * dx);
        let ly = norm(&sub(&o.grad_x(&x, &y2), &g));
        rep.observed_mu = rep.observed_mu.max(ratio(ly, dy));
        flag(&mut rep, "grad_x_lipschitz", &x, &y, &x, &y2, ly, pr.mu * dy);

        // ∇^k_y f Lipschitz
        if have_a2 {
            match (tensor_k(p, &x, &y), tensor_k(p, &x2, &y2), tensor_k(p, &x, &y2), tensor_k(p, &x2, &y)) {
                (Some((t, m)), Some((t2, _)), Some((ty, _)), Some((tx, _))) => {
                    let lhs = tensor_dist(p, &t2, &t, m);
                    let rhs = pr.rho_k * dy + pr.sigma_k * dx;
                    deriv_k_r = deriv_k_r.max(ratio(lhs, rhs));
                    flag(&mut rep, "deriv_k_lipschitz", &x, &y, &x2, &y2, lhs, rhs);
                    let ly = tensor_dist(p, &ty, &t, m);
                    rho_obs = rho_obs.max(ratio(ly, dy));
                    flag(&mut rep, "deriv_k_lipschitz", &x, &y, &x, &y2, ly, pr.rho_k * dy);
                    let lx = tensor_dist(p, &tx, &t, m);
                    sig_obs = sig_obs.max(ratio(lx, dx));
                    flag(&mut rep, "deriv_k_lipschitz", &x, &y, &x2, &y, lx, pr.sigma_k * dx);
                }
                _ => have_a2 = false,
            }
        }

        // ∇_x ∇^k_y f Lipschitz in x (k >= 1), probed along a random unit direction in y
        if have_a3 {
            let v: Vec<T> = unit_sphere(p.dim_y(), rng);
            match (mixed_k(p, &x, &y, &v), mixed_k(p, &x2, &y, &v)) {
                (Some(a), Some(b)) => {
                    let lhs = if pr.k == 1 { op_norm(p.dim_x(), p.dim_y(), &sub(&b, &a)) } else { norm(&sub(&b, &a)) };
                    tau_obs = tau_obs.max(ratio(lhs, dx));
                    flag(&mut rep, "mixed_k_lipschitz", &x, &y, &x2, &y, lhs, pr.tau_k * dx);
                }
                _ => have_a3 = false,
            }
        }
    }
    if have_a2 {
        rep.deriv_k_ratio = Some(deriv_k_r);
        rep.observed_rho_k = Some(rho_obs);
        rep.observed_sigma_k = Some(sig_obs);
    }
    if have_a3 {
        rep.observed_tau_k = Some(tau_obs);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn intro_values() {
        let p = make_intro_example::<f64>();
        assert_eq!(p.oracle.value(&[0.0], &[0.0]), 0.0);
        assert_eq!(p.oracle.grad_y(&[0.0], &[0.0]), vec![0.0]);
        assert_eq!(p.oracle.grad_x(&[0.0], &[0.0]), vec![0.0]);
    }

    #[test]
    fn intro_fd_consistent() {
        let p = make_intro_example::<f64>();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(fd_check(&p, 200, &mut rng).max() < 1e-5);
    }

    #[test]
    fn constant_has_zero_ratios() {
        let p = make_constant(3.0, Domain::interval(-1.0, 1.0).unwrap(), Domain::interval(0.0, 1.0).unwrap()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let r = check_profile_by_sampling(&p, 100, &mut rng);
        assert!(r.ok());
        assert_eq!(r.observed_lambda, 0.0);
        assert_eq!(r.observed_mu, 0.0);
        assert_eq!(r.observed_rho_k, Some(0.0));
    }

    #[test]
    fn op_norm_of_row() {
        assert!((op_norm(1, 2, &[3.0, 4.0]) - 5.0f64).abs() < 1e-12);
    }

    #[test]
    fn understated_constant_is_flagged() {
        let mut p = make_intro_example::<f64>();
        p.profile.mu = 0.5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = check_profile_by_sampling(&p, 200, &mut rng);
        assert!(!r.ok());
        assert_eq!(r.violations[0].assumption, "grad_x_lipschitz");
    }
}
