//! FOSP search on the order-0, order-1 and order-2 surrogates.
//!
//! * Algorithm 1: projected gradient descent on `f(·, ŷ)`.
//! * Algorithm 2: descent on the linear surrogate, coupled (one ascent step
//!   in `y` plus the cross term) or uncoupled (linear maximization over `Y`).
//! * Algorithm 3: projected subgradient on `max_y f̂₂(·, y)` with an
//!   approximate maximization oracle and a uniformly sampled output index.
//!
//! Every run records the residual `ε_t = S_X(x_t, g_t, 1/γ_x)` where `g_t` is
//! the step direction, together with the best iterate and oracle-call counts.

use std::cell::RefCell;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brute::{grid_max, grid_min};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Domain;
use crate::krylov::{approx_max, krylov_steps, solve_reduced, QuadraticForm};
use crate::linalg::{axpy, dot, norm, norm_sq, sub};
use crate::moreau::{prox, s_x, MaxMethod, PrimalOracle, SurrogatePrimal, TruePrimal};
use crate::problems::ProblemInstance;
use crate::surrogate::{lambda_bar, SurrogateModel};
use crate::Scalar;

/// Iteration counts above this fail with [`Error::Budget`].
pub const DEFAULT_T_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
        }
    }
}

/// Maximization oracle for the order-2 surrogate in Algorithm 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxOracle {
    /// Block-Krylov oracle at accuracy `δ` (ball `Y` only).
    Krylov,
    /// Exact trust-region solve by dense eigendecomposition (ball `Y` only).
    Dense,
    /// Grid search over `Y` (dimension at most 2).
    Grid { resolution: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig<T: Scalar> {
    pub algorithm: Algorithm,
    pub x0: Vec<T>,
    pub y_hat: Vec<T>,
    pub epsilon: T,
    /// Algorithm 2 branch; `None` picks `μ ≥ √(λ̄₁ρ₁)`.
    pub coupled: Option<bool>,
    /// Algorithm 3 descent along `∇_x f` instead of `∇_x f̂₂`.
    pub naive: bool,
    pub p_fail: T,
    pub q_fail: T,
    pub t_override: Option<u64>,
    pub t_cap: u64,
    /// Replaces the brute-force estimate of the gap in the iteration-count
    /// formulas (`φ(x₀) − ψ(ŷ)` for Algorithm 1, `Δ` otherwise).
    pub gap_override: Option<T>,
    /// Grid resolution per axis for the brute-force gap estimates.
    pub gap_resolution: usize,
    pub seed: u64,
    /// Keeps `x_t`, `y_t` and the step directions in the trace.
    pub record_iterates: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(algorithm: Algorithm, x0: Vec<T>, y_hat: Vec<T>, epsilon: T) -> Self {
        SolverConfig {
            algorithm,
            x0,
            y_hat,
            epsilon,
            coupled: None,
            naive: false,
            p_fail: T::of(0.1),
            q_fail: T::of(0.1),
            t_override: None,
            t_cap: DEFAULT_T_CAP,
            gap_override: None,
            gap_resolution: 401,
            seed: 0,
            record_iterates: true,
        }
    }

    pub fn with_t(mut self, t: u64) -> Self {
        self.t_override = Some(t);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gap(mut self, gap: T) -> Self {
        self.gap_override = Some(gap);
        self
    }

    pub fn with_coupled(mut self, coupled: bool) -> Self {
        self.coupled = Some(coupled);
        self
    }

    pub fn with_naive(mut self, naive: bool) -> Self {
        self.naive = naive;
        self
    }

    pub fn with_failure(mut self, p_fail: T, q_fail: T) -> Self {
        self.p_fail = p_fail;
        self.q_fail = q_fail;
        self
    }

    pub fn validate(&self, p: &ProblemInstance<T>) -> Result<()> {
        check_dim(p.dim_x(), self.x0.len())?;
        check_dim(p.dim_y(), self.y_hat.len())?;
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be a positive number".into()));
        }
        let tol = T::of(1e-9) * T::one().max(p.diameter());
        if !p.domain_y.contains(&self.y_hat, tol) {
            return Err(Error::InvalidParameter("y_hat must lie in Y".into()));
        }
        if !p.domain_x.contains(&self.x0, T::of(1e-9)) {
            return Err(Error::InvalidParameter("x0 must lie in X".into()));
        }
        let unit = |v: T| v > T::zero() && v < T::one();
        if !unit(self.p_fail) || !unit(self.q_fail) || !(self.p_fail + self.q_fail < T::one()) {
            return Err(Error::InvalidParameter("need p_fail, q_fail in (0, 1) with p_fail + q_fail < 1".into()));
        }
        if self.t_override == Some(0) {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        Ok(())
    }
}

/// Oracle calls made by a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleCounters {
    pub value: u64,
    pub grad_x: u64,
    pub grad_y: u64,
    pub cross_jvp: u64,
    pub cross3_jvp: u64,
    pub hvp: u64,
    pub linear_max: u64,
}

impl OracleCounters {
    pub fn total(&self) -> u64 {
        self.value + self.grad_x + self.grad_y + self.cross_jvp + self.cross3_jvp + self.hvp + self.linear_max
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunTrace<T: Scalar> {
    pub algorithm: Algorithm,
    /// Number of iterations `T`.
    pub t: u64,
    /// Value of the iteration-count formula before rounding, when it was used.
    pub t_formula: Option<f64>,
    /// Gap entering the iteration-count and step-size formulas.
    pub gap: Option<T>,
    pub gamma_x: T,
    pub gamma_y: Option<T>,
    pub delta: Option<T>,
    pub coupled: Option<bool>,
    pub naive: Option<bool>,
    /// `λ` (Algorithm 1), `λ̄₁` or `λ̄₂`.
    pub lambda_bar: T,
    /// Block steps per Krylov call.
    pub krylov_m: Option<usize>,
    /// `x_0, …, x_T` when recorded.
    pub iterates: Vec<Vec<T>>,
    /// `y_t` when recorded.
    pub y_iterates: Vec<Vec<T>>,
    /// Step directions `g_t` when recorded.
    pub directions: Vec<Vec<T>>,
    /// `ε_t` for `t = 0, …, T−1`.
    pub residuals: Vec<T>,
    /// Surrogate value at `(x_t, y_t)`.
    pub phi_hat: Vec<T>,
    /// Cumulative oracle calls after iteration `t`.
    pub cumulative_calls: Vec<u64>,
    pub best_index: usize,
    pub best_residual: T,
    /// Output index of Algorithm 3.
    pub sampled_index: Option<usize>,
    pub counters: OracleCounters,
    pub warnings: Vec<String>,
    pub wall_ms: f64,
}

impl<T: Scalar> RunTrace<T> {
    fn new(algorithm: Algorithm, t: u64, gamma_x: T, lambda_bar: T) -> Self {
        RunTrace {
            algorithm,
            t,
            t_formula: None,
            gap: None,
            gamma_x,
            gamma_y: None,
            delta: None,
            coupled: None,
            naive: None,
            lambda_bar,
            krylov_m: None,
            iterates: Vec::new(),
            y_iterates: Vec::new(),
            directions: Vec::new(),
            residuals: Vec::new(),
            phi_hat: Vec::new(),
            cumulative_calls: Vec::new(),
            best_index: 0,
            best_residual: T::infinity(),
            sampled_index: None,
            counters: OracleCounters::default(),
            warnings: Vec::new(),
            wall_ms: 0.0,
        }
    }

    fn push(&mut self, t: usize, x: &[T], y: &[T], g: Vec<T>, eps_t: T, phi: T, record: bool) {
        if record {
            self.iterates.push(x.to_vec());
            self.y_iterates.push(y.to_vec());
            self.directions.push(g);
        }
        if eps_t < self.best_residual {
            self.best_residual = eps_t;
            self.best_index = t;
        }
        self.residuals.push(eps_t);
        self.phi_hat.push(phi);
        self.cumulative_calls.push(self.counters.total());
    }

    /// Rows `(t, ε_t, φ̂ estimate, cumulative oracle calls)`.
    pub fn plot_rows(&self) -> impl Iterator<Item = (usize, T, T, u64)> + '_ {
        self.residuals
            .iter()
            .zip(&self.phi_hat)
            .zip(&self.cumulative_calls)
            .enumerate()
            .map(|(t, ((&e, &v), &c))| (t, e, v, c))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutput<T: Scalar> {
    pub x: Vec<T>,
    /// `y*` of Algorithm 2.
    pub y: Option<Vec<T>>,
    pub trace: RunTrace<T>,
}

// ---------------------------------------------------------------------------
// gap estimates

fn default_true_primal<T: Scalar>(p: &ProblemInstance<T>) -> Result<TruePrimal<T>> {
    let method = match p.dim_y() {
        1 => MaxMethod::Grid { resolution: 2001 },
        2 => MaxMethod::Grid { resolution: 201 },
        _ => MaxMethod::Ascent { n_random: 8, iters: 500, seed: 0 },
    };
    TruePrimal::new(p.clone(), method)
}

/// Minimum of a fallible function over the probe region of `X` by grid search.
fn probe_min<T: Scalar>(p: &ProblemInstance<T>, res: usize, f: &dyn Fn(&[T]) -> Result<T>) -> Result<T> {
    if p.dim_x() > 2 {
        return Err(Error::Unsupported(
            "brute-force gap estimates need dim(X) <= 2; set the gap or T explicitly".into(),
        ));
    }
    let err = RefCell::new(None);
    let (_, v) = grid_min(&p.probe_x, res, &|x| match f(x) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            T::infinity()
        }
    })?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `φ(x₀) − ψ(ŷ)` with `ψ(ŷ) = min_{x∈X} f(x, ŷ)`, both by brute force.
pub fn estimate_duality_gap<T: Scalar>(p: &ProblemInstance<T>, x0: &[T], y_hat: &[T], res: usize) -> Result<T> {
    let tp = default_true_primal(p)?;
    let phi0 = tp.phi(x0)?;
    let psi = probe_min(p, res, &|x| Ok(p.oracle.value(x, y_hat)))?.min(p.oracle.value(x0, y_hat));
    Ok((phi0 - psi).max(T::zero()))
}

/// Initial primal gap `Δ = φ(x₀) − min_{x∈X} φ(x)` by brute force.
pub fn estimate_primal_gap<T: Scalar>(p: &ProblemInstance<T>, x0: &[T], res: usize) -> Result<T> {
    let tp = default_true_primal(p)?;
    let phi0 = tp.phi(x0)?;
    let m = probe_min(p, res, &|x| tp.phi(x))?;
    Ok((phi0 - m).max(T::zero()))
}

fn iteration_count<T: Scalar>(cfg: &SolverConfig<T>, formula: impl FnOnce() -> Result<T>) -> Result<(u64, Option<f64>)> {
    let (t, raw) = match cfg.t_override {
        Some(t) => (t, None),
        None => {
            let v = formula()?.as_f64();
            let t = if v.is_finite() && v < u64::MAX as f64 { (v.ceil() as u64).max(1) } else { u64::MAX };
            (t, Some(v))
        }
    };
    if t > cfg.t_cap {
        return Err(Error::Budget {
            requested: t,
            cap: cfg.t_cap,
            best: cfg.x0.iter().map(|v| v.as_f64()).collect(),
        });
    }
    Ok((t, raw))
}

/// `ε_t` from a projected step: `ε_t² = (‖x̃ − x_t‖² − ‖x̃ − x_{t+1}‖²)/γ²`.
fn step_residual<T: Scalar>(x: &[T], x_tilde: &[T], x_next: &[T], gamma: T) -> T {
    let a = norm_sq(&sub(x_tilde, x));
    let b = norm_sq(&sub(x_tilde, x_next));
    ((a - b).max(T::zero())).sqrt() / gamma
}

// ---------------------------------------------------------------------------
// Algorithm 1

/// Projected gradient descent on `f(·, ŷ)` with `γ_x = 1/λ`.
///
/// Default `T = ⌈300λ(φ(x₀) − ψ(ŷ))/ε²⌉`.
pub fn solve_alg1<T: Scalar>(p: &ProblemInstance<T>, cfg: &SolverConfig<T>) -> Result<SolveOutput<T>> {
    cfg.validate(p)?;
    let start = Instant::now();
    let lambda = p.profile.lambda;
    let eps = cfg.epsilon;
    let mut gap_used = None;
    let (t_iter, t_formula) = iteration_count(cfg, || {
        let gap = match cfg.gap_override {
            Some(g) => g,
            None => estimate_duality_gap(p, &cfg.x0, &cfg.y_hat, cfg.gap_resolution)?,
        };
        gap_used = Some(gap);
        Ok(T::of(300.0) * lambda * gap / (eps * eps))
    })?;
    let gamma = T::one() / lambda;
    let mut tr = RunTrace::new(Algorithm::Alg1, t_iter, gamma, lambda);
    tr.t_formula = t_formula;
    tr.gap = gap_used.or(cfg.gap_override);
    let dom = &p.domain_x;
    let yh = &cfg.y_hat;
    let mut x = dom.project(&cfg.x0)?;
    let mut best = x.clone();
    for t in 0..t_iter as usize {
        let g = p.oracle.grad_x(&x, yh);
        let fv = p.oracle.value(&x, yh);
        tr.counters.grad_x += 1;
        tr.counters.value += 1;
        let x_tilde = axpy(&x, -gamma, &g);
        let x_next = dom.project(&x_tilde)?;
        // line 6: ‖∇f‖² − ‖x̃ − x_{t+1}‖²/γ²
        let e2 = norm_sq(&g) - norm_sq(&sub(&x_tilde, &x_next)) / (gamma * gamma);
        let eps_t = e2.max(T::zero()).sqrt();
        if eps_t < tr.best_residual {
            best = x.clone();
        }
        tr.push(t, &x, yh, g, eps_t, fv, cfg.record_iterates);
        x = x_next;
    }
    if cfg.record_iterates {
        tr.iterates.push(x);
    }
    tr.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutput { x: best, y: None, trace: tr })
}

// ---------------------------------------------------------------------------
// Algorithm 2

/// `(λ̄₁, ρ₁)` from the profile: order-1 constants, or `(λ, ρ₁)` for
/// bilinear instances declared at another order.
pub fn first_order_constants<T: Scalar>(p: &ProblemInstance<T>) -> Result<(T, T)> {
    let pr = &p.profile;
    let d = p.diameter();
    if pr.k == 1 {
        Ok((lambda_bar(pr.lambda, pr.tau_k, d, 1), pr.rho_k))
    } else if let (true, Some(r)) = (p.bilinear, pr.rho_1) {
        Ok((pr.lambda, r))
    } else {
        Err(Error::InvalidParameter(
            "algorithm 2 needs order-1 constants (profile k = 1, or a bilinear instance with rho_1)".into(),
        ))
    }
}

/// Gradient descent on the linear surrogate.
///
/// `γ_x = 1/(3λ̄₁ + μ²/ρ₁)`, `γ_y = 1/ρ₁`, default
/// `T = ⌈(3 + μ²/(λ̄₁ρ₁))(700λ̄₁Δ/ε² + 1)⌉`. Uncoupled linear maximization
/// breaks ties towards the lexicographically smallest vertex of a box.
pub fn solve_alg2<T: Scalar>(p: &ProblemInstance<T>, cfg: &SolverConfig<T>) -> Result<SolveOutput<T>> {
    cfg.validate(p)?;
    let start = Instant::now();
    let (lb1, rho1) = first_order_constants(p)?;
    if !(rho1 > T::zero()) {
        return Err(Error::InvalidParameter("algorithm 2 needs rho_1 > 0".into()));
    }
    let mu = p.profile.mu;
    let eps = cfg.epsilon;
    let d = p.diameter();
    let ratio = mu * mu / (lb1 * rho1);
    let mut gap_used = None;
    let (t_iter, t_formula) = iteration_count(cfg, || {
        let gap = match cfg.gap_override {
            Some(g) => g,
            None => estimate_primal_gap(p, &cfg.x0, cfg.gap_resolution)?,
        };
        gap_used = Some(gap);
        Ok((T::of(3.0) + ratio) * (T::of(700.0) * lb1 * gap / (eps * eps) + T::one()))
    })?;
    let coupled = cfg.coupled.unwrap_or(mu >= (lb1 * rho1).sqrt());
    let gamma = T::one() / (T::of(3.0) * lb1 + mu * mu / rho1);
    let gamma_y = T::one() / rho1;
    let mut tr = RunTrace::new(Algorithm::Alg2, t_iter, gamma, lb1);
    tr.t_formula = t_formula;
    tr.gap = gap_used.or(cfg.gap_override);
    tr.coupled = Some(coupled);
    if coupled {
        tr.gamma_y = Some(gamma_y);
    }
    if T::of(200.0) * mu.min((lb1 * rho1).sqrt()) * d > eps {
        tr.warnings.push(format!(
            "diameter condition 200*min(mu, sqrt(lambda_bar_1*rho_1))*D <= eps fails: {} > {}",
            T::of(200.0) * mu.min((lb1 * rho1).sqrt()) * d,
            eps
        ));
    }
    let (dx, dy) = (&p.domain_x, &p.domain_y);
    let o = &p.oracle;
    let yh = &cfg.y_hat;
    let mut x = dx.project(&cfg.x0)?;
    let mut best = (x.clone(), yh.clone());
    for t in 0..t_iter as usize {
        let gy = o.grad_y(&x, yh);
        tr.counters.grad_y += 1;
        let (y, g) = if coupled {
            let y = dy.project(&axpy(yh, gamma_y, &gy))?;
            let dyv = sub(&y, yh);
            let g = axpy(&o.grad_x(&x, yh), T::one(), &o.cross_jvp(&x, yh, &dyv));
            tr.counters.grad_x += 1;
            tr.counters.cross_jvp += 1;
            (y, g)
        } else {
            let y = dy.linear_argmax(&gy, yh)?;
            tr.counters.linear_max += 1;
            let g = o.grad_x(&x, &y);
            tr.counters.grad_x += 1;
            (y, g)
        };
        let fv = o.value(&x, yh) + dot(&gy, &sub(&y, yh));
        tr.counters.value += 1;
        let x_tilde = axpy(&x, -gamma, &g);
        let x_next = dx.project(&x_tilde)?;
        let eps_t = step_residual(&x, &x_tilde, &x_next, gamma);
        if eps_t < tr.best_residual {
            best = (x.clone(), y.clone());
        }
        tr.push(t, &x, &y, g, eps_t, fv, cfg.record_iterates);
        x = x_next;
    }
    if cfg.record_iterates {
        tr.iterates.push(x);
    }
    tr.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutput { x: best.0, y: Some(best.1), trace: tr })
}

// ---------------------------------------------------------------------------
// Algorithm 3

/// Order-2 constants `(λ̄₂, σ₀, σ₂, ρ₂)`.
pub fn second_order_constants<T: Scalar>(p: &ProblemInstance<T>) -> Result<(T, T, T, T)> {
    let pr = &p.profile;
    if pr.k != 2 {
        return Err(Error::InvalidParameter("algorithm 3 needs a profile declared at order 2".into()));
    }
    let s0 = pr
        .sigma_0
        .ok_or_else(|| Error::InvalidParameter("algorithm 3 needs sigma_0 (x-Lipschitz constant of f)".into()))?;
    Ok((lambda_bar(pr.lambda, pr.tau_k, p.diameter(), 2), s0, pr.sigma_k, pr.rho_k))
}

/// Parameters `(γ_x, δ, T formula)` for a given iteration count.
///
/// `γ_x = √((Δ + ρ₂D³)/(λ̄₂T))/(σ₀ + σ₂D²)`, `δ = 4p·10⁻⁴·ε²/λ̄₂`,
/// `T ≥ 6·10⁶/p² · λ̄₂(Δ + ρ₂D³)(σ₀ + σ₂D²)²/ε⁴`.
pub fn alg3_parameters<T: Scalar>(p: &ProblemInstance<T>, eps: T, p_fail: T, gap: T, t: u64) -> Result<(T, T, T)> {
    let (lb2, s0, s2, r2) = second_order_constants(p)?;
    let d = p.diameter();
    let a = gap + r2 * d.powi(3);
    let lip = s0 + s2 * d * d;
    let gamma = (a / (lb2 * T::of(t as f64))).sqrt() / lip;
    let delta = T::of(4.0) * p_fail / T::of(1e4) * eps * eps / lb2;
    let t_formula = T::of(6e6) / (p_fail * p_fail) * lb2 * a * lip * lip / eps.powi(4);
    Ok((gamma, delta, t_formula))
}

/// Dedicated random streams of a seed: stream 0 draws the output index,
/// stream 1 feeds the Krylov start vectors.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Projected subgradient method on the order-2 surrogate primal function.
///
/// Returns `x_s` for a uniform `s ∈ {0, …, T−1}`. Krylov calls use failure
/// probability `q/T` each, so all `T` calls succeed jointly with probability
/// at least `1 − q`.
pub fn solve_alg3<T: Scalar>(p: &ProblemInstance<T>, cfg: &SolverConfig<T>, oracle: MaxOracle) -> Result<SolveOutput<T>> {
    cfg.validate(p)?;
    let start = Instant::now();
    let (lb2, _s0, s2, _r2) = second_order_constants(p)?;
    let o = &p.oracle;
    if !cfg.naive && !o.has_cross3() {
        return Err(Error::Unsupported("algorithm 3 without the naive step needs the third-order cross oracle".into()));
    }
    let ball = match &p.domain_y {
        Domain::Ball { center, radius } => Some((center.clone(), *radius)),
        _ => None,
    };
    match oracle {
        MaxOracle::Krylov | MaxOracle::Dense if ball.is_none() => {
            return Err(Error::Unsupported("Krylov and dense maximization need a ball Y".into()))
        }
        MaxOracle::Grid { .. } if p.dim_y() > 2 => {
            return Err(Error::Unsupported("grid maximization needs dim(Y) <= 2".into()))
        }
        _ => {}
    }
    let eps = cfg.epsilon;
    let d = p.diameter();
    let gap = match cfg.gap_override {
        Some(g) => g,
        None => estimate_primal_gap(p, &cfg.x0, cfg.gap_resolution)?,
    };
    let (_, _, t_raw) = alg3_parameters(p, eps, cfg.p_fail, gap, 1)?;
    let (t_iter, t_formula) = iteration_count(cfg, || Ok(t_raw))?;
    let (gamma, delta, _) = alg3_parameters(p, eps, cfg.p_fail, gap, t_iter)?;
    let mut tr = RunTrace::new(Algorithm::Alg3, t_iter, gamma, lb2);
    tr.t_formula = t_formula;
    tr.gap = Some(gap);
    tr.delta = Some(delta);
    tr.naive = Some(cfg.naive);
    if cfg.naive && T::of(24.0) * s2 * d * d > eps * cfg.p_fail.sqrt() {
        tr.warnings.push(format!(
            "naive step condition 24*sigma_2*D^2 <= eps*sqrt(p) fails: {} > {}",
            T::of(24.0) * s2 * d * d,
            eps * cfg.p_fail.sqrt()
        ));
    }
    let q_eff = cfg.q_fail / T::of(t_iter as f64);
    let rho1 = p.profile.rho_1.unwrap_or(T::one());
    if let (MaxOracle::Krylov, Some((_, r))) = (oracle, &ball) {
        tr.krylov_m = Some(krylov_steps(p.dim_y(), *r, delta, rho1, q_eff));
    }
    let model = SurrogateModel::new(p.clone(), 2, cfg.y_hat.clone())?;
    let mut s_rng = seeded_stream(cfg.seed, 0);
    let s = s_rng.gen_range(0..t_iter) as usize;
    tr.sampled_index = Some(s);
    let mut k_rng = seeded_stream(cfg.seed, 1);
    let yh = &cfg.y_hat;
    let dx = &p.domain_x;
    let mut x = dx.project(&cfg.x0)?;
    let mut x_s = x.clone();
    for t in 0..t_iter as usize {
        let gy = o.grad_y(&x, yh);
        tr.counters.grad_y += 1;
        let y = match (oracle, &ball) {
            (MaxOracle::Grid { resolution }, _) => {
                let (y, _) = grid_max(&p.domain_y, resolution, &|y| model.value_unchecked(&x, y))?;
                tr.counters.value += 1;
                y
            }
            (_, Some((c, r))) => {
                // Ψ(u) = ½uᵀHu + ⟨g + H(c − ŷ), u⟩ over ‖u‖ ≤ R, with y = c + u
                let e = sub(c, yh);
                let gs = if norm(&e) > T::zero() {
                    tr.counters.hvp += 1;
                    axpy(&gy, T::one(), &o.hess_yy_vec(&x, yh, &e))
                } else {
                    gy.clone()
                };
                let u = if oracle == MaxOracle::Dense {
                    tr.counters.hvp += p.dim_y() as u64;
                    solve_reduced(&p.hess_yy_dense(&x, yh), &gs, *r)?.z
                } else {
                    let (xx, yy, oo) = (x.clone(), yh.clone(), o.clone());
                    let q = QuadraticForm::from_fn(gs, move |v| oo.hess_yy_vec(&xx, &yy, v));
                    let res = approx_max(&q, *r, delta, rho1, q_eff, &mut k_rng)?;
                    tr.counters.hvp += res.hvp_calls as u64;
                    res.y
                };
                axpy(c, T::one(), &u)
            }
            _ => unreachable!("checked above"),
        };
        let g = if cfg.naive {
            tr.counters.grad_x += 1;
            o.grad_x(&x, &y)
        } else {
            tr.counters.grad_x += 1;
            tr.counters.cross_jvp += 1;
            tr.counters.cross3_jvp += 1;
            model.grad_x_unchecked(&x, &y)?
        };
        let fv = model.value_unchecked(&x, &y);
        tr.counters.value += 1;
        let x_tilde = axpy(&x, -gamma, &g);
        let x_next = dx.project(&x_tilde)?;
        let eps_t = step_residual(&x, &x_tilde, &x_next, gamma);
        if t == s {
            x_s = x.clone();
        }
        tr.push(t, &x, &y, g, eps_t, fv, cfg.record_iterates);
        x = x_next;
    }
    if cfg.record_iterates {
        tr.iterates.push(x);
    }
    tr.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutput { x: x_s, y: None, trace: tr })
}

/// Dispatches on `cfg.algorithm`; `oracle` is used by Algorithm 3 only.
pub fn solve<T: Scalar>(p: &ProblemInstance<T>, cfg: &SolverConfig<T>, oracle: MaxOracle) -> Result<SolveOutput<T>> {
    match cfg.algorithm {
        Algorithm::Alg1 => solve_alg1(p, cfg),
        Algorithm::Alg2 => solve_alg2(p, cfg),
        Algorithm::Alg3 => solve_alg3(p, cfg, oracle),
    }
}

// ---------------------------------------------------------------------------
// trace checks

/// Largest `|ε_t² − S_X(x_t, g_t, 1/γ_x)²| / max(1, ‖g_t‖²)` over a recorded trace.
pub fn residual_identity_error<T: Scalar>(trace: &RunTrace<T>, dom: &Domain<T>) -> Result<T> {
    if trace.directions.len() != trace.residuals.len() {
        return Err(Error::InvalidParameter("trace was run without recorded iterates".into()));
    }
    let lam = T::one() / trace.gamma_x;
    let mut worst = T::zero();
    for (t, (g, &e)) in trace.directions.iter().zip(&trace.residuals).enumerate() {
        // compared on the squared scale, where both forms are smooth in the iterate
        let s = s_x(&trace.iterates[t], g, lam, dom)?;
        worst = worst.max((s * s - e * e).abs() / T::one().max(norm_sq(g)));
    }
    Ok(worst)
}

/// Both sides of the averaged descent inequality of the subgradient scheme:
///
/// `(1/T) Σ_t [φ̂(x_t) − φ̂(x_t⁺) − (λ̄/2)‖x_t⁺ − x_t‖²]
///   ≤ (φ̂_{2λ̄}(x_0) − φ̂_{2λ̄}(x_T))/(2γλ̄T) + γ(σ₀ + σ₂D²)²/2 + δ`,
///
/// where `x_t⁺` is the prox of `φ̂` at `x_t` with parameter `λ̄ = λ̄₂` and
/// `φ̂` is evaluated exactly by the dense trust-region solve.
#[derive(Clone, Debug, Serialize)]
pub struct TelescopeReport<T: Scalar> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

pub fn alg3_telescoping_check<T: Scalar>(
    p: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    trace: &RunTrace<T>,
    inner_budget: usize,
) -> Result<TelescopeReport<T>> {
    if trace.algorithm != Algorithm::Alg3 || trace.naive != Some(false) {
        return Err(Error::InvalidParameter("the telescoping inequality covers algorithm 3 with the surrogate step".into()));
    }
    let t = trace.t as usize;
    if trace.iterates.len() != t + 1 {
        return Err(Error::InvalidParameter("trace was run without recorded iterates".into()));
    }
    let (lb, s0, s2, _) = second_order_constants(p)?;
    let d = p.diameter();
    let model = SurrogateModel::new(p.clone(), 2, cfg.y_hat.clone())?;
    let sp = SurrogatePrimal::new(model);
    let env = |x: &[T]| -> Result<(T, Vec<T>)> {
        let u = prox(&sp, x, lb, inner_budget)?;
        Ok((sp.phi(&u)? + lb * norm_sq(&sub(&u, x)), u))
    };
    let mut sum = T::zero();
    for x in &trace.iterates[..t] {
        let (_, u) = env(x)?;
        sum += sp.phi(x)? - sp.phi(&u)? - lb / T::of(2.0) * norm_sq(&sub(&u, x));
    }
    let lhs = sum / T::count(t);
    let (e0, _) = env(&trace.iterates[0])?;
    let (e_t, _) = env(&trace.iterates[t])?;
    let gamma = trace.gamma_x;
    let lip = s0 + s2 * d * d;
    let delta = trace.delta.unwrap_or(T::zero());
    let rhs = (e0 - e_t) / (T::of(2.0) * gamma * lb * T::count(t)) + gamma * lip * lip / T::of(2.0) + delta;
    // prox points are accurate to round-off; allow that much
    let slack = T::of(1e-9) * T::one().max(rhs.abs());
    Ok(TelescopeReport { lhs, rhs, holds: lhs <= rhs + slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic;
    use crate::problems::Quadratic;

    #[test]
    fn residual_of_projected_step() {
        // interior step: ε_t = ‖g‖
        let e = step_residual(&[0.0f64], &[-0.5], &[-0.5], 0.5);
        assert!((e - 1.0).abs() < 1e-15);
        // fully blocked step
        let e = step_residual(&[1.0f64], &[1.5], &[1.0], 0.5);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn streams_are_independent() {
        let mut a = seeded_stream(3, 0);
        let mut b = seeded_stream(3, 1);
        assert_ne!(a.gen::<u64>(), b.gen::<u64>());
        let mut c = seeded_stream(3, 0);
        let mut a2 = seeded_stream(3, 0);
        assert_eq!(c.gen::<u64>(), a2.gen::<u64>());
    }

    #[test]
    fn budget_cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = Quadratic::<f64>::random(1, 1, &mut rng);
        let p = make_quadratic(q, Domain::interval(-1.0, 1.0).unwrap(), Domain::interval(-0.1, 0.1).unwrap()).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Alg1, vec![0.5], vec![0.0], 1e-3).with_t(100);
        cfg.t_cap = 10;
        match solve_alg1(&p, &cfg) {
            Err(Error::Budget { requested: 100, cap: 10, best }) => assert_eq!(best, vec![0.5]),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
