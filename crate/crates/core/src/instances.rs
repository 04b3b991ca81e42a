//! Hard one-dimensional instance families, their closed-form primal functions
//! and Moreau gradients, and the lower-bound constructions (center `ŷ` and
//! surrogate-stationary point `x*`).
//!
//! * `F_{k,s,λ,μ,ρ}(x, y) = −λx²/2 + μxy + sρ|y|^{k+1}/(k+1)!`
//! * `S_{λ,ρ,D}(x, y) = −λx²/4 + (ρy/2)(tanh(√(λ/(ρD)) x) − 1)`
//!
//! with `Y = [a, a + D]`. For `F` with `k = 0`, and for `S`, `X = [−r, r]` with
//! `r = μD/(2λ)`; otherwise `X = ℝ`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{soft_threshold, Domain};
use crate::moreau::{PrimalMode, PrimalOracle};
use crate::problems::{Oracle, ProblemInstance, SmoothnessProfile};
use crate::surrogate::factorial;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    F,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    WeakCoupling,
    StrongCoupling,
}

/// Parameters of a hard instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardInstanceSpec<T: Scalar> {
    pub family: Family,
    pub k: usize,
    /// Sign in front of the `|y|^{k+1}` term, in `{−1, 0, 1}`.
    pub s: i8,
    pub lambda: T,
    pub mu: T,
    pub rho: T,
    pub d: T,
    /// Lower end `a` of `Y = [a, a + D]`; `None` means `−D/2` for `F` and `0` for `S`.
    pub shift: Option<T>,
    /// Half-width of `X` for the bounded families; `None` means `r = μD/(2λ)`.
    pub x_radius: Option<T>,
    /// Half-width of the sampling box when `X = ℝ`.
    pub probe_half_width: Option<T>,
}

impl<T: Scalar> HardInstanceSpec<T> {
    pub fn f(k: usize, s: i8, lambda: T, mu: T, rho: T, d: T) -> Self {
        HardInstanceSpec { family: Family::F, k, s, lambda, mu, rho, d, shift: None, x_radius: None, probe_half_width: None }
    }

    pub fn sigmoid(lambda: T, mu: T, rho: T, d: T) -> Self {
        HardInstanceSpec { family: Family::S, k: 0, s: 1, lambda, mu, rho, d, shift: None, x_radius: None, probe_half_width: None }
    }

    pub fn with_shift(mut self, a: T) -> Self {
        self.shift = Some(a);
        self
    }

    pub fn with_x_radius(mut self, r: T) -> Self {
        self.x_radius = Some(r);
        self
    }

    pub fn with_probe(mut self, w: T) -> Self {
        self.probe_half_width = Some(w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [("lambda", self.lambda), ("mu", self.mu), ("rho", self.rho), ("D", self.d)];
        for (n, v) in finite {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParameter(format!("{n} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.lambda > T::zero()) || !(self.d > T::zero()) {
            return Err(Error::InvalidParameter("lambda and D must be > 0".into()));
        }
        if !(-1..=1).contains(&self.s) {
            return Err(Error::InvalidParameter(format!("s must be in {{-1, 0, 1}}, got {}", self.s)));
        }
        for (n, v) in [("shift", self.shift), ("x_radius", self.x_radius), ("probe_half_width", self.probe_half_width)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("{n} must be finite")));
                }
            }
        }
        if let Some(r) = self.x_radius {
            if r < T::zero() {
                return Err(Error::InvalidParameter("x_radius must be >= 0".into()));
            }
        }
        match self.family {
            Family::F if self.k == 0 && self.s != 0 => {
                Err(Error::InvalidParameter("the order-0 F family is F_{0,0}: s must be 0".into()))
            }
            Family::S if self.k != 0 => Err(Error::InvalidParameter("the S family is an order-0 instance".into())),
            Family::S if !(self.rho > T::zero()) => Err(Error::InvalidParameter("the S family needs rho > 0".into())),
            Family::S if self.shift.is_some_and(|a| a != T::zero()) => {
                Err(Error::InvalidParameter("the S family uses Y = [0, D]".into()))
            }
            _ => Ok(()),
        }
    }

    /// `R = D/2`.
    pub fn radius_y(&self) -> T {
        self.d * T::of(0.5)
    }

    pub fn y_lo(&self) -> T {
        self.shift.unwrap_or(match self.family {
            Family::F => -self.radius_y(),
            Family::S => T::zero(),
        })
    }

    pub fn y_hi(&self) -> T {
        self.y_lo() + self.d
    }

    /// `max_{y∈Y} |y|`.
    pub fn y_abs_max(&self) -> T {
        self.y_lo().abs().max(self.y_hi().abs())
    }

    /// `r = μD/(2λ)`.
    pub fn r(&self) -> T {
        self.mu * self.d / (T::of(2.0) * self.lambda)
    }

    /// Half-width of `X` for the bounded families, `None` when `X = ℝ`.
    pub fn x_bound(&self) -> Option<T> {
        match (self.family, self.k) {
            (Family::S, _) | (Family::F, 0) => Some(self.x_radius.unwrap_or_else(|| self.r())),
            _ => None,
        }
    }

    pub fn sig_scale(&self) -> T {
        (self.lambda / (self.rho * self.d)).sqrt()
    }

    /// Coupling threshold separating the two regimes.
    pub fn mu_cr(&self) -> T {
        mu_critical(self.k, self.lambda, self.rho, self.d)
    }

    pub fn regime(&self) -> Regime {
        match self.family {
            Family::S => Regime::StrongCoupling,
            Family::F if self.mu <= self.mu_cr() => Regime::WeakCoupling,
            Family::F => Regime::StrongCoupling,
        }
    }

    fn sign(&self) -> T {
        T::of(self.s as f64)
    }

    /// Constants dictated by the structure of the family.
    pub fn profile(&self) -> Result<SmoothnessProfile<T>> {
        let (l, mu, rho, d) = (self.lambda, self.mu, self.rho, self.d);
        let m = self.y_abs_max();
        let p = match (self.family, self.k) {
            (Family::F, 0) => {
                let xr = self.x_bound().expect("bounded");
                let sigma0 = l * xr + mu * m;
                SmoothnessProfile::new(l, mu, 0, rho, sigma0, l).with_sigma_0(sigma0).with_rho_1(T::zero())
            }
            (Family::S, _) => {
                let xr = self.x_bound().expect("bounded");
                let sigma0 = (mu * d).max(l * xr * T::of(0.5) + rho * m * self.sig_scale() * T::of(0.5));
                SmoothnessProfile::new(l, mu, 0, rho, sigma0, l).with_sigma_0(sigma0).with_rho_1(T::zero())
            }
            (Family::F, k) => {
                let sigma = if k == 1 { mu } else { T::zero() };
                let rho1 = if k == 1 { rho } else { rho * m.powi(k as i32 - 1) / factorial::<T>(k - 1) };
                SmoothnessProfile::new(l, mu, k, rho, sigma, T::zero()).with_rho_1(rho1)
            }
        };
        Ok(p)
    }
}

/// `√(2λρ/D)` for `k = 0`, `√(λρ/2)` for `k = 1`, `√(λρD^{k−1}/k!)` for `k ≥ 2`.
pub fn mu_critical<T: Scalar>(k: usize, lambda: T, rho: T, d: T) -> T {
    match k {
        0 => (T::of(2.0) * lambda * rho / d).sqrt(),
        1 => (lambda * rho * T::of(0.5)).sqrt(),
        _ => (lambda * rho * d.powi(k as i32 - 1) / factorial::<T>(k)).sqrt(),
    }
}

fn sgn<T: Scalar>(y: T) -> T {
    if y > T::zero() {
        T::one()
    } else if y < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `g^{(j)}(y)` for `g(y) = |y|^{k+1}/(k+1)!`: `|y|^{k+1−j} sign(y)^j/(k+1−j)!` for `j ≤ k+1`, else 0.
pub fn g_deriv<T: Scalar>(k: usize, j: usize, y: T) -> T {
    if j > k + 1 {
        return T::zero();
    }
    let e = k + 1 - j;
    let sj = if j == 0 { T::one() } else { sgn(y).powi(j as i32) };
    y.abs().powi(e as i32) * sj / factorial::<T>(e)
}

/// Exact oracle for `F_{k,s,λ,μ,ρ}`.
#[derive(Debug, Clone)]
pub struct FFamily<T: Scalar> {
    pub k: usize,
    pub s: T,
    pub lambda: T,
    pub mu: T,
    pub rho: T,
}

impl<T: Scalar> FFamily<T> {
    fn g(&self, j: usize, y: T) -> T {
        self.s * self.rho * g_deriv(self.k, j, y)
    }
}

impl<T: Scalar> Oracle<T> for FFamily<T> {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn value(&self, x: &[T], y: &[T]) -> T {
        -self.lambda * x[0] * x[0] * T::of(0.5) + self.mu * x[0] * y[0] + self.g(0, y[0])
    }
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        vec![-self.lambda * x[0] + self.mu * y[0]]
    }
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        vec![self.mu * x[0] + self.g(1, y[0])]
    }
    fn hess_yy_vec(&self, _x: &[T], y: &[T], v: &[T]) -> Vec<T> {
        vec![self.g(2, y[0]) * v[0]]
    }
    fn cross_jvp(&self, _x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        vec![self.mu * v[0]]
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
            1 => self.mu * x[0] + self.g(1, y),
            _ => self.g(j, y),
        })
    }
    fn deriv_y_grad_x(&self, j: usize, x: &[T], y: T) -> Option<Vec<T>> {
        Some(vec![match j {
            0 => -self.lambda * x[0] + self.mu * y,
            1 => self.mu,
            _ => T::zero(),
        }])
    }
}

/// Exact oracle for `S_{λ,ρ,D}`.
#[derive(Debug, Clone)]
pub struct SFamily<T: Scalar> {
    pub lambda: T,
    pub rho: T,
    pub d: T,
}

impl<T: Scalar> SFamily<T> {
    fn scale(&self) -> T {
        (self.lambda / (self.rho * self.d)).sqrt()
    }

    fn sech2(&self, x: T) -> T {
        let c = (self.scale() * x).cosh();
        T::one() / (c * c)
    }
}

impl<T: Scalar> Oracle<T> for SFamily<T> {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn value(&self, x: &[T], y: &[T]) -> T {
        let t = (self.scale() * x[0]).tanh();
        -self.lambda * x[0] * x[0] / T::of(4.0) + self.rho * y[0] * T::of(0.5) * (t - T::one())
    }
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        vec![-self.lambda * x[0] * T::of(0.5) + self.rho * y[0] * T::of(0.5) * self.scale() * self.sech2(x[0])]
    }
    fn grad_y(&self, x: &[T], _y: &[T]) -> Vec<T> {
        vec![self.rho * T::of(0.5) * ((self.scale() * x[0]).tanh() - T::one())]
    }
    fn hess_yy_vec(&self, _x: &[T], _y: &[T], _v: &[T]) -> Vec<T> {
        vec![T::zero()]
    }
    fn cross_jvp(&self, x: &[T], _y: &[T], v: &[T]) -> Vec<T> {
        vec![self.rho * T::of(0.5) * self.scale() * self.sech2(x[0]) * v[0]]
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
            1 => self.grad_y(x, &[y])[0],
            _ => T::zero(),
        })
    }
    fn deriv_y_grad_x(&self, j: usize, x: &[T], y: T) -> Option<Vec<T>> {
        Some(match j {
            0 => self.grad_x(x, &[y]),
            1 => vec![self.rho * T::of(0.5) * self.scale() * self.sech2(x[0])],
            _ => vec![T::zero()],
        })
    }
}

/// Builds the problem instance with exact oracles and the family's constants.
///
/// Rejects `S` unless `μ ≥ √(2λρ/D)`, and `F_{0,0}` unless `ρ ≥ μ·r_X`
/// (`μ ≤ √(2λρ/D)` for the default `X`), since `ρ` is then the declared
/// y-Lipschitz constant.
pub fn build_instance<T: Scalar>(spec: &HardInstanceSpec<T>) -> Result<ProblemInstance<T>> {
    spec.validate()?;
    let (l, mu, rho, d) = (spec.lambda, spec.mu, spec.rho, spec.d);
    let y = Domain::interval(spec.y_lo(), spec.y_hi())?;
    let profile = spec.profile()?;
    let name = match spec.family {
        Family::F => format!("F_{{{},{}}}(lambda={l}, mu={mu}, rho={rho}, D={d})", spec.k, spec.s),
        Family::S => format!("S(lambda={l}, rho={rho}, D={d})"),
    };
    match spec.family {
        Family::S => {
            let need = mu_critical(0, l, rho, d);
            if mu < need {
                return Err(Error::Regime(format!("the S family needs mu >= sqrt(2 lambda rho / D) = {need}, got mu = {mu}")));
            }
            let xr = spec.x_bound().expect("bounded");
            let oracle = SFamily { lambda: l, rho, d };
            ProblemInstance::new(name, Arc::new(oracle), Domain::interval(-xr, xr)?, y, profile)
        }
        Family::F => {
            let oracle = FFamily { k: spec.k, s: spec.sign(), lambda: l, mu, rho };
            let inst = if spec.k == 0 {
                let xr = spec.x_bound().expect("bounded");
                if mu * xr > rho * (T::one() + T::of(1e-12)) {
                    return Err(Error::Regime(format!(
                        "F_{{0,0}} with rho_0 = rho needs mu * x_radius <= rho (mu <= sqrt(2 lambda rho / D) for the default X), got mu * x_radius = {}",
                        mu * xr
                    )));
                }
                ProblemInstance::new(name, Arc::new(oracle), Domain::interval(-xr, xr)?, y, profile)?
            } else {
                let w = spec.probe_half_width.unwrap_or_else(|| (T::of(2.0) * mu * d / l).max(d));
                ProblemInstance::new(name, Arc::new(oracle), Domain::whole(1), y, profile)?
                    .with_probe(Domain::interval(-w, w)?)?
            };
            inst.declare_bilinear()
        }
    }
}

// ---------------------------------------------------------------------------
// polynomials in y

/// `Σ c_i y^i`.
fn poly_eval<T: Scalar>(c: &[T], y: T) -> T {
    c.iter().rev().fold(T::zero(), |a, &ci| a * y + ci)
}

fn poly_deriv<T: Scalar>(c: &[T]) -> Vec<T> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| ci * T::count(i)).collect()
}

fn poly_trim<T: Scalar>(c: &[T]) -> &[T] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == T::zero() {
        n -= 1;
    }
    &c[..n]
}

fn bisect_root<T: Scalar>(c: &[T], mut lo: T, mut hi: T) -> T {
    let flo = poly_eval(c, lo);
    for _ in 0..400 {
        let mid = T::of(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = poly_eval(c, mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::of(0.5) * (lo + hi)
}

/// Real roots in `[lo, hi]` at which the polynomial changes sign (or vanishes exactly).
fn poly_roots<T: Scalar>(c: &[T], lo: T, hi: T) -> Vec<T> {
    let c = poly_trim(c);
    match c.len() {
        0 | 1 => vec![],
        2 => {
            let z = -c[0] / c[1];
            if z >= lo && z <= hi {
                vec![z]
            } else {
                vec![]
            }
        }
        _ => {
            let mut pts = vec![lo];
            pts.extend(poly_roots(&poly_deriv(c), lo, hi));
            pts.push(hi);
            let mut out = Vec::new();
            for w in pts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (poly_eval(c, a), poly_eval(c, b));
                if fa == T::zero() {
                    out.push(a);
                } else if fb != T::zero() && (fa > T::zero()) != (fb > T::zero()) {
                    out.push(bisect_root(c, a, b));
                }
            }
            if poly_eval(c, hi) == T::zero() {
                out.push(hi);
            }
            out.dedup();
            out
        }
    }
}

/// Maximizer (smallest on ties) and maximum of the polynomial on `[lo, hi]`.
fn poly_argmax<T: Scalar>(c: &[T], lo: T, hi: T) -> (T, T) {
    let mut cands = vec![lo];
    cands.extend(poly_roots(&poly_deriv(c), lo, hi));
    cands.push(hi);
    let mut best = (lo, poly_eval(c, lo));
    for &y in &cands[1..] {
        let v = poly_eval(c, y);
        if v > best.1 {
            best = (y, v);
        }
    }
    best
}

/// `Σ_j a_j (y − ŷ)^j` in the monomial basis.
fn shifted_to_monomial<T: Scalar>(a: &[T], y_hat: T) -> Vec<T> {
    let mut out = vec![T::zero(); a.len().max(1)];
    let mut basis = vec![T::one()];
    for &aj in a {
        for (i, &b) in basis.iter().enumerate() {
            out[i] += aj * b;
        }
        // basis *= (y − ŷ)
        let mut next = vec![T::zero(); basis.len() + 1];
        for (i, &b) in basis.iter().enumerate() {
            next[i + 1] += b;
            next[i] -= y_hat * b;
        }
        basis = next;
    }
    out
}

/// The y-dependent part `c(y)` of `f(x, y) = −λx²/2 + μxy + c(y)` as polynomial pieces.
struct YPart<T: Scalar> {
    pieces: Vec<(T, T, Vec<T>)>,
    /// `c` convex on `Y`, so `max_y μxy + c(y)` is attained at an endpoint.
    convex: bool,
}

impl<T: Scalar> YPart<T> {
    fn eval(&self, y: T) -> T {
        for (lo, hi, c) in &self.pieces {
            if y >= *lo && y <= *hi {
                return poly_eval(c, y);
            }
        }
        let (_, _, c) = self.pieces.last().expect("nonempty");
        poly_eval(c, y)
    }

    /// `argmax_y μ u y + c(y)` and its value.
    fn argmax(&self, mu_u: T) -> (T, T) {
        let mut best: Option<(T, T)> = None;
        for (lo, hi, c) in &self.pieces {
            let mut c = c.clone();
            if c.len() < 2 {
                c.resize(2, T::zero());
            }
            c[1] += mu_u;
            let (y, v) = poly_argmax(&c, *lo, *hi);
            match best {
                Some((_, bv)) if bv >= v => {}
                _ => best = Some((y, v)),
            }
        }
        best.expect("nonempty")
    }
}

fn f_true_part<T: Scalar>(spec: &HardInstanceSpec<T>) -> YPart<T> {
    let (a, b) = (spec.y_lo(), spec.y_hi());
    let coef = spec.sign() * spec.rho;
    if coef == T::zero() {
        return YPart { pieces: vec![(a, b, vec![T::zero()])], convex: true };
    }
    let n = spec.k + 1;
    let top = coef / factorial::<T>(n);
    let mono = |c: T| {
        let mut v = vec![T::zero(); n + 1];
        v[n] = c;
        v
    };
    let neg = if n.is_multiple_of(2) { top } else { -top };
    let mut pieces = Vec::new();
    if a < T::zero() {
        pieces.push((a, b.min(T::zero()), mono(neg)));
    }
    if b > T::zero() || pieces.is_empty() {
        pieces.push((a.max(T::zero()), b, mono(top)));
    }
    YPart { pieces, convex: coef > T::zero() }
}

fn f_surrogate_part<T: Scalar>(spec: &HardInstanceSpec<T>, y_hat: T) -> YPart<T> {
    let (a, b) = (spec.y_lo(), spec.y_hi());
    let coef = spec.sign() * spec.rho;
    let taylor: Vec<T> = (0..=spec.k)
        .map(|j| coef * g_deriv(spec.k, j, y_hat) / factorial::<T>(j))
        .collect();
    let c = shifted_to_monomial(&taylor, y_hat);
    let convex = if c.len() <= 2 {
        true
    } else {
        let c2 = poly_deriv(&poly_deriv(&c));
        let neg: Vec<T> = c2.iter().map(|&v| -v).collect();
        let (_, m) = poly_argmax(&neg, a, b);
        let scale = coef.abs() * T::one().max(spec.y_abs_max().powi(spec.k as i32 - 1));
        -m >= -T::of(1e-12) * scale
    };
    YPart { pieces: vec![(a, b, c)], convex }
}

/// Which primal function a closed form refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalKind<T: Scalar> {
    /// `φ(x) = max_{y∈Y} f(x, y)`.
    True,
    /// `φ̂(x) = max_{y∈Y} f̂_k(x, y)` with the Taylor center `ŷ`.
    Surrogate(T),
}

fn check_y_hat<T: Scalar>(spec: &HardInstanceSpec<T>, y_hat: T) -> Result<()> {
    let tol = T::of(1e-12) * T::one().max(spec.y_abs_max());
    if !(y_hat >= spec.y_lo() - tol && y_hat <= spec.y_hi() + tol) {
        return Err(Error::InvalidParameter(format!(
            "surrogate center {y_hat} outside Y = [{}, {}]",
            spec.y_lo(),
            spec.y_hi()
        )));
    }
    Ok(())
}

fn clamp_x<T: Scalar>(spec: &HardInstanceSpec<T>, u: T) -> T {
    match spec.x_bound() {
        Some(r) => u.max(-r).min(r),
        None => u,
    }
}

fn check_x<T: Scalar>(x: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Validity(format!("x must be finite, got {x}")));
    }
    Ok(())
}

/// Largest root of an increasing function on `[lo, hi]` with `h(lo) ≤ 0 ≤ h(hi)`, to full precision.
fn bisect_increasing<T: Scalar>(h: &dyn Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    for _ in 0..600 {
        let mid = T::of(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    T::of(0.5) * (lo + hi)
}

/// `argmin_{u∈X} φ(u) + ℓ(u − x)²` for the given primal.
///
/// Exact up to the final rounding: the one-dimensional objective is strongly
/// convex, so the constrained minimizer is the clamp of the unconstrained one,
/// which is a shifted soft-thresholding when `f(x, ·)` is convex on `Y` and
/// otherwise the root of a monotone scalar equation (solved by bisection to
/// machine precision, the maximizer over `y` being found from the real roots of
/// a polynomial).
pub fn closed_form_prox<T: Scalar>(spec: &HardInstanceSpec<T>, kind: PrimalKind<T>, x: T, ell: T) -> Result<T> {
    spec.validate()?;
    check_x(x)?;
    let (l, mu) = (spec.lambda, spec.mu);
    let two = T::of(2.0);
    match spec.family {
        Family::S => {
            let kappa = two * ell - l * T::of(0.5);
            match kind {
                PrimalKind::True => {
                    if !(kappa > T::zero()) {
                        return Err(Error::InvalidParameter("prox needs 2*lambda_bar > lambda/2".into()));
                    }
                    Ok(clamp_x(spec, two * ell * x / kappa))
                }
                PrimalKind::Surrogate(y_hat) => {
                    check_y_hat(spec, y_hat)?;
                    let s = spec.sig_scale();
                    let amp = spec.rho * y_hat * T::of(0.5) * s;
                    // φ̂'' ≥ −λ/2 − |amp| s · max|2 sech² tanh|, and max|sech² tanh| = 2/(3√3)
                    let curv = kappa - amp.abs() * s * T::of(4.0 / (3.0 * 3f64.sqrt()));
                    if !(curv > T::zero()) {
                        return Err(Error::InvalidParameter("prox objective is not strongly convex for this lambda_bar".into()));
                    }
                    let h = |u: T| {
                        let c = (s * u).cosh();
                        -l * u * T::of(0.5) + amp / (c * c) + two * ell * (u - x)
                    };
                    let k_max = amp.abs();
                    let lo = (two * ell * x - k_max) / kappa;
                    let hi = (two * ell * x + k_max) / kappa;
                    Ok(clamp_x(spec, bisect_increasing(&h, lo, hi)))
                }
            }
        }
        Family::F => {
            let kappa = two * ell - l;
            if !(kappa > T::zero()) {
                return Err(Error::InvalidParameter(format!("prox needs 2*lambda_bar > lambda = {l}")));
            }
            if let PrimalKind::Surrogate(y_hat) = kind {
                check_y_hat(spec, y_hat)?;
                if spec.k == 0 {
                    return Ok(clamp_x(spec, (two * ell * x - mu * y_hat) / kappa));
                }
            }
            let part = match kind {
                PrimalKind::True => f_true_part(spec),
                PrimalKind::Surrogate(y_hat) => f_surrogate_part(spec, y_hat),
            };
            let (a, b) = (spec.y_lo(), spec.y_hi());
            if mu == T::zero() {
                return Ok(clamp_x(spec, two * ell * x / kappa));
            }
            let u = if part.convex {
                let (p, q) = (part.eval(a), part.eval(b));
                let shift = (q - p) / (mu * spec.d);
                let mid = T::of(0.5) * (a + b);
                let rbar = mu * spec.radius_y() / l;
                soft_threshold(two * ell * x - mu * mid + kappa * shift, l * rbar) / kappa - shift
            } else {
                let h = |u: T| kappa * u + mu * part.argmax(mu * u).0 - two * ell * x;
                bisect_increasing(&h, (two * ell * x - mu * b) / kappa, (two * ell * x - mu * a) / kappa)
            };
            Ok(clamp_x(spec, u))
        }
    }
}

/// `φ′_{2λ}(x) = 2λ(x − x⁺)` for the prox with `ℓ = λ`.
pub fn closed_form_moreau_grad<T: Scalar>(spec: &HardInstanceSpec<T>, kind: PrimalKind<T>, x: T) -> Result<T> {
    let u = closed_form_prox(spec, kind, x, spec.lambda)?;
    Ok(T::of(2.0) * spec.lambda * (x - u))
}

/// Primal value and a Danskin subgradient at `x`.
pub fn closed_form_phi<T: Scalar>(spec: &HardInstanceSpec<T>, kind: PrimalKind<T>, x: T) -> Result<(T, T)> {
    spec.validate()?;
    check_x(x)?;
    let (l, mu) = (spec.lambda, spec.mu);
    match spec.family {
        Family::S => {
            let o = SFamily { lambda: l, rho: spec.rho, d: spec.d };
            let y = match kind {
                // (ρy/2)(tanh − 1) ≤ 0 is maximized at y = 0
                PrimalKind::True => T::zero(),
                PrimalKind::Surrogate(y_hat) => {
                    check_y_hat(spec, y_hat)?;
                    y_hat
                }
            };
            Ok((o.value(&[x], &[y]), o.grad_x(&[x], &[y])[0]))
        }
        Family::F => {
            let base = -l * x * x * T::of(0.5);
            let (y, cy) = match kind {
                PrimalKind::Surrogate(y_hat) if spec.k == 0 => {
                    check_y_hat(spec, y_hat)?;
                    (y_hat, spec.sign() * spec.rho * g_deriv(0, 0, y_hat))
                }
                PrimalKind::Surrogate(y_hat) => {
                    check_y_hat(spec, y_hat)?;
                    let part = f_surrogate_part(spec, y_hat);
                    let (y, v) = part.argmax(mu * x);
                    (y, v - mu * x * y)
                }
                PrimalKind::True => {
                    let part = f_true_part(spec);
                    let (y, v) = part.argmax(mu * x);
                    (y, v - mu * x * y)
                }
            };
            Ok((base + mu * x * y + cy, -l * x + mu * y))
        }
    }
}

/// Closed-form primal oracle for a hard instance.
pub struct HardPrimal<T: Scalar> {
    pub spec: HardInstanceSpec<T>,
    pub kind: PrimalKind<T>,
    domain: Domain<T>,
}

impl<T: Scalar> HardPrimal<T> {
    pub fn new(spec: HardInstanceSpec<T>, kind: PrimalKind<T>) -> Result<Self> {
        spec.validate()?;
        if let PrimalKind::Surrogate(y) = kind {
            check_y_hat(&spec, y)?;
        }
        let domain = match spec.x_bound() {
            Some(r) => Domain::interval(-r, r)?,
            None => Domain::whole(1),
        };
        Ok(HardPrimal { spec, kind, domain })
    }
}

impl<T: Scalar> PrimalOracle<T> for HardPrimal<T> {
    fn domain(&self) -> &Domain<T> {
        &self.domain
    }
    fn phi(&self, x: &[T]) -> Result<T> {
        Ok(closed_form_phi(&self.spec, self.kind, x[0])?.0)
    }
    fn subgrad(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vec![closed_form_phi(&self.spec, self.kind, x[0])?.1])
    }
    fn weak_convexity(&self) -> T {
        self.spec.lambda
    }
    fn mode(&self) -> PrimalMode {
        PrimalMode::ClosedForm
    }
    fn closed_prox(&self, x: &[T], lambda_bar: T) -> Option<Result<Vec<T>>> {
        Some(closed_form_prox(&self.spec, self.kind, x[0], lambda_bar).map(|u| vec![u]))
    }
}

// ---------------------------------------------------------------------------
// lower-bound constructions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `F_{0,0}`, `ŷ = R/2`, `x* = r/2`; bound `μD/2`.
    QuadraticZeroOrder,
    /// `S`, `ŷ = 2D/3`, `x* = c√(ρD/λ)`; bound `√(λρD)/3`.
    SigmoidZeroOrder,
    /// `F_{1,−1}`, `ŷ = 0`, `x* = r`; bound `μD/3`.
    FirstOrderWeak,
    /// `F_{1,1}` with `ρ̄ = ρ/4`, `μ̄ = √(2λρ̄)`, `ŷ = R`, `x* = −ρ̄R/μ̄`; bound `√(λρD²/8)`.
    FirstOrderStrong,
    /// `F_{k,−1}` with `μ̄ = μ/2` on `[0, D]`, `ŷ = 0`, `x* = μ̄D/λ`; bound `μD/(2k)`.
    HighOrderWeak,
    /// Even `k`: `F_{k,1}` with `μ̄ = μ_cr`, `ŷ = R`; bound `μ_cr D/(2k)`.
    HighOrderStrongEven,
    /// Odd `k ≥ 3`: `F_{k,1}`, `ŷ = (1 − 1/k)R`, `x* = −(1 − 1/k)r̄`; bound `μ_cr D/(2k)`.
    HighOrderStrongOdd,
}

/// A surrogate-stationary point at which the true problem is far from stationary.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate<T: Scalar> {
    pub construction: Construction,
    /// Regime of the requested parameters.
    pub regime: Regime,
    /// Instance actually used (with the construction's `s`, `μ̄`, `ρ̄` and shift).
    pub instance: HardInstanceSpec<T>,
    pub y_hat: T,
    pub x_star: T,
    pub surrogate_moreau_grad: T,
    pub true_moreau_grad: T,
    pub bound: T,
}

/// Absolute tolerance for "the surrogate Moreau gradient vanishes".
pub const STATIONARY_TOL: f64 = 1e-10;

impl<T: Scalar> Certificate<T> {
    pub fn surrogate_stationary(&self) -> bool {
        self.surrogate_moreau_grad.abs() <= T::of(STATIONARY_TOL)
    }

    /// `|φ′_{2λ}(x*)| ≥ bound`, up to a relative rounding allowance of `1e-12`
    /// (several constructions attain the bound with equality).
    pub fn true_violation(&self) -> bool {
        self.true_moreau_grad.abs() >= self.bound * (T::one() - T::of(1e-12))
    }

    pub fn holds(&self) -> bool {
        self.surrogate_stationary() && self.true_violation()
    }

    /// `x*` is an `ε`-FOSP of the surrogate problem but not of the true one.
    pub fn separates(&self, eps: T) -> bool {
        self.surrogate_moreau_grad.abs() <= eps && self.true_moreau_grad.abs() > eps
    }
}

/// Root `c ∈ (0.51, 0.52)` of `u cosh²(u) = 2/3`, to machine precision.
pub fn s_family_root<T: Scalar>() -> T {
    let h = |u: T| {
        let c = u.cosh();
        u * c * c - T::of(2.0 / 3.0)
    };
    bisect_increasing(&h, T::of(0.5), T::of(0.55))
}

/// `w^k − (w − 1)^k − (2^k − 1)` at `w = −1`; zero for odd `k`.
pub fn odd_k_stationarity_residual<T: Scalar>(k: usize) -> T {
    let w = -T::one();
    w.powi(k as i32) - (w - T::one()).powi(k as i32) - (T::of(2.0).powi(k as i32) - T::one())
}

/// `μ̄ = √(2λρD^{k−1}/k! · (1 − 2^{−k})(1 − 1/k)^{k−1})` used for odd `k`.
pub fn mu_bar_odd<T: Scalar>(k: usize, lambda: T, rho: T, d: T) -> T {
    let kk = T::count(k);
    let f = (T::one() - T::of(2.0).powi(-(k as i32))) * (T::one() - T::one() / kk).powi(k as i32 - 1);
    (T::of(2.0) * lambda * rho * d.powi(k as i32 - 1) / factorial::<T>(k) * f).sqrt()
}

/// Builds the lower-bound construction matching the family, order and regime of `spec`.
///
/// Only `family`, `k`, `λ`, `μ`, `ρ` and `D` are read; the construction fixes
/// the sign, shift and (in the strong-coupling branches) the reduced constants.
pub fn certificate<T: Scalar>(spec: &HardInstanceSpec<T>) -> Result<Certificate<T>> {
    spec.validate()?;
    let (l, mu, rho, d) = (spec.lambda, spec.mu, spec.rho, spec.d);
    if !(mu > T::zero() && rho > T::zero()) {
        return Err(Error::InvalidParameter("certificates need lambda, mu, rho, D > 0".into()));
    }
    let two = T::of(2.0);
    let big_r = d * T::of(0.5);
    let regime = spec.regime();
    let mu_cr = spec.mu_cr();
    let (construction, inst, y_hat, x_star, bound) = match (spec.family, spec.k) {
        (Family::S, _) => {
            if mu < mu_cr {
                return Err(Error::Regime(format!("the sigmoid construction needs mu >= sqrt(2 lambda rho / D) = {mu_cr}")));
            }
            let inst = HardInstanceSpec::sigmoid(l, mu, rho, d);
            let x_star = s_family_root::<T>() / inst.sig_scale();
            (Construction::SigmoidZeroOrder, inst, two * d / T::of(3.0), x_star, (l * rho * d).sqrt() / T::of(3.0))
        }
        (Family::F, 0) => {
            if mu > mu_cr {
                return Err(Error::Regime(format!(
                    "the F_{{0,0}} construction needs mu <= sqrt(2 lambda rho / D) = {mu_cr}; use the S family"
                )));
            }
            let inst = HardInstanceSpec::f(0, 0, l, mu, rho, d);
            (Construction::QuadraticZeroOrder, inst.clone(), big_r * T::of(0.5), inst.r() * T::of(0.5), mu * d * T::of(0.5))
        }
        (Family::F, 1) => {
            if regime == Regime::WeakCoupling {
                let inst = HardInstanceSpec::f(1, -1, l, mu, rho, d);
                (Construction::FirstOrderWeak, inst.clone(), T::zero(), inst.r(), mu * d / T::of(3.0))
            } else {
                let rho_bar = rho / T::of(4.0);
                let mu_bar = (two * l * rho_bar).sqrt();
                let inst = HardInstanceSpec::f(1, 1, l, mu_bar, rho_bar, d);
                let x_star = -rho_bar * big_r / mu_bar;
                (Construction::FirstOrderStrong, inst, big_r, x_star, (l * rho * d * d / T::of(8.0)).sqrt())
            }
        }
        (Family::F, k) => {
            let kk = T::count(k);
            if regime == Regime::WeakCoupling {
                let mu_bar = mu * T::of(0.5);
                let inst = HardInstanceSpec::f(k, -1, l, mu_bar, rho, d).with_shift(T::zero());
                (Construction::HighOrderWeak, inst, T::zero(), mu_bar * d / l, mu * d / (two * kk))
            } else if k % 2 == 0 {
                let inst = HardInstanceSpec::f(k, 1, l, mu_cr, rho, d);
                let c = (two.powi(k as i32) - T::one()) * rho * big_r.powi(k as i32) / (mu_cr * factorial::<T>(k + 1));
                (Construction::HighOrderStrongEven, inst, big_r, c, mu_cr * d / (two * kk))
            } else {
                let mu_bar = mu_bar_odd(k, l, rho, d);
                let inst = HardInstanceSpec::f(k, 1, l, mu_bar, rho, d);
                let frac = T::one() - T::one() / kk;
                let r_bar = mu_bar * big_r / l;
                (Construction::HighOrderStrongOdd, inst, frac * big_r, -frac * r_bar, mu_cr * d / (two * kk))
            }
        }
    };
    let surrogate_moreau_grad = closed_form_moreau_grad(&inst, PrimalKind::Surrogate(y_hat), x_star)?;
    let true_moreau_grad = closed_form_moreau_grad(&inst, PrimalKind::True, x_star)?;
    Ok(Certificate { construction, regime, instance: inst, y_hat, x_star, surrogate_moreau_grad, true_moreau_grad, bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_roots_and_argmax() {
        // (y − 1)(y + 2)(y − 0.5) = y³ + 0.5y² − 2.5y + 1
        let c = [1.0f64, -2.5, 0.5, 1.0];
        let r = poly_roots(&c, -3.0, 3.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        let (y, v) = poly_argmax(&[0.0f64, 0.0, -1.0], -1.0, 2.0);
        assert!(y.abs() < 1e-15 && v == 0.0);
    }

    #[test]
    fn monomial_expansion() {
        // 1 + 2(y − 3) + (y − 3)² = y² − 4y + 4
        let c = shifted_to_monomial(&[1.0, 2.0, 1.0], 3.0);
        assert_eq!(c, vec![4.0, -4.0, 1.0]);
    }

    #[test]
    fn g_derivatives() {
        assert_eq!(g_deriv::<f64>(2, 0, -2.0), 8.0 / 6.0);
        assert_eq!(g_deriv::<f64>(2, 1, -2.0), -2.0);
        assert_eq!(g_deriv::<f64>(2, 2, -2.0), 2.0);
        assert_eq!(g_deriv::<f64>(2, 3, -2.0), -1.0);
        assert_eq!(g_deriv::<f64>(2, 4, -2.0), 0.0);
    }

    #[test]
    fn sigmoid_root_interval() {
        let c: f64 = s_family_root();
        assert!(c > 0.51 && c < 0.52);
        assert!((c * c.cosh().powi(2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn certificates_all_constructions() {
        let cases: Vec<HardInstanceSpec<f64>> = vec![
            HardInstanceSpec::f(0, 0, 1.0, 1.0, 1.0, 2.0),
            HardInstanceSpec::sigmoid(1.0, 2.0, 1.0, 1.0),
            HardInstanceSpec::f(1, 0, 1.0, 1.0, 8.0, 2.0),
            HardInstanceSpec::f(1, 0, 1.0, 3.0, 1.0, 2.0),
            HardInstanceSpec::f(2, 0, 1.0, 0.1, 1.0, 1.0),
            HardInstanceSpec::f(2, 0, 1.0, 5.0, 1.0, 1.0),
            HardInstanceSpec::f(3, 0, 1.0, 5.0, 1.0, 1.0),
            HardInstanceSpec::f(5, 0, 2.0, 5.0, 3.0, 1.5),
            HardInstanceSpec::f(4, 0, 2.0, 5.0, 3.0, 1.5),
        ];
        for c in cases {
            let cert = certificate(&c).unwrap();
            assert!(cert.holds(), "{cert:?}");
        }
    }

    #[test]
    fn quadratic_zero_order_example() {
        let cert = certificate(&HardInstanceSpec::<f64>::f(0, 0, 1.0, 1.0, 1.0, 2.0)).unwrap();
        assert_eq!(cert.y_hat, 0.5);
        assert_eq!(cert.x_star, 0.5);
        assert!((cert.true_moreau_grad.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_order_weak_example() {
        let cert = certificate(&HardInstanceSpec::<f64>::f(1, 0, 1.0, 1.0, 8.0, 2.0)).unwrap();
        assert_eq!(cert.construction, Construction::FirstOrderWeak);
        assert!(cert.true_moreau_grad.abs() >= 2.0 / 3.0);
    }

    #[test]
    fn closed_form_examples() {
        let spec = HardInstanceSpec::<f64>::f(0, 0, 1.0, 1.0, 1.0, 2.0);
        assert_eq!(closed_form_moreau_grad(&spec, PrimalKind::True, 0.0).unwrap(), 0.0);
        // r = 1, x = 0.5: 2(0.5 − [1]_1) = 1
        assert!((closed_form_moreau_grad(&spec, PrimalKind::True, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejections() {
        assert!(matches!(build_instance(&HardInstanceSpec::sigmoid(1.0, 0.5, 1.0, 1.0)), Err(Error::Regime(_))));
        assert!(matches!(build_instance(&HardInstanceSpec::f(0, 0, 1.0, 2.0, 1.0, 2.0)), Err(Error::Regime(_))));
        assert!(build_instance(&HardInstanceSpec::f(0, 1, 1.0, 1.0, 1.0, 2.0)).is_err());
    }

    #[test]
    fn odd_k_equation() {
        for k in [3, 5, 7, 9] {
            assert_eq!(odd_k_stationarity_residual::<f64>(k), 0.0);
        }
    }
}
