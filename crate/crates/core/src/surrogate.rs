//! Order-k Taylor surrogates of `f(x, ·)` around a fixed center `ŷ`.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, sub};
use crate::problems::ProblemInstance;
use crate::Scalar;

/// `f̂_k(x, y) = Σ_{j≤k} ∇^j_y f(x, ŷ)[(y-ŷ)^j] / j!`.
#[derive(Debug, Clone)]
pub struct SurrogateModel<T: Scalar> {
    pub base: ProblemInstance<T>,
    pub k: usize,
    pub center: Vec<T>,
    pub lambda_bar: T,
}

/// Numeric summary of a surrogate's error bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SurrogateBounds {
    pub k: usize,
    pub value_error: f64,
    pub gradx_error: f64,
    pub lambda_bar: f64,
}

pub fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n).fold(T::one(), |a, i| a * T::count(i))
}

/// `λ̄_k = λ + 2τ_k D^k / k! · 1{k ≥ 1}`.
pub fn lambda_bar<T: Scalar>(lambda: T, tau_k: T, d: T, k: usize) -> T {
    if k == 0 {
        lambda
    } else {
        lambda + T::of(2.0) * tau_k * d.powi(k as i32) / factorial::<T>(k)
    }
}

/// `ρ_k D^{k+1} / (k+1)!`.
pub fn value_error_bound_raw<T: Scalar>(rho_k: T, d: T, k: usize) -> T {
    rho_k * d.powi(k as i32 + 1) / factorial::<T>(k + 1)
}

/// `min{μD, 2σ₀}` for `k = 0`, `2σ_k D^k / k!` otherwise.
pub fn gradx_error_bound_raw<T: Scalar>(mu: T, sigma: T, d: T, k: usize) -> T {
    if k == 0 {
        (mu * d).min(T::of(2.0) * sigma)
    } else {
        T::of(2.0) * sigma * d.powi(k as i32) / factorial::<T>(k)
    }
}

impl<T: Scalar> SurrogateModel<T> {
    /// Builds the model; `center` must lie in `Y`.
    ///
    /// For `k >= 1`, `λ̄_k` needs `τ_k`: it is read from the profile when the
    /// profile is declared at order `k`, and is `λ` for bilinear instances.
    pub fn new(base: ProblemInstance<T>, k: usize, center: Vec<T>) -> Result<Self> {
        check_dim(base.dim_y(), center.len())?;
        let tol = T::of(1e-9) * T::one().max(base.diameter());
        if !base.domain_y.contains(&center, tol) {
            return Err(Error::InvalidParameter("surrogate center must lie in Y".into()));
        }
        if k > 2 {
            let analytic = base.dim_y() == 1 && base.oracle.deriv_y(k, &base.probe_x.chebyshev_center(), center[0]).is_some();
            if !analytic {
                return Err(Error::Unsupported(format!(
                    "order {k} surrogates exist only for analytic 1-D instances"
                )));
            }
        }
        let d = base.diameter();
        let p = &base.profile;
        let lb = if k == 0 || base.bilinear {
            p.lambda
        } else if p.k == k {
            lambda_bar(p.lambda, p.tau_k, d, k)
        } else {
            return Err(Error::InvalidParameter(format!(
                "profile declares order {} constants, surrogate order {k} needs tau_{k}",
                p.k
            )));
        };
        Ok(SurrogateModel { base, k, center, lambda_bar: lb })
    }

    /// Chebyshev center of `Y` as the expansion point.
    pub fn at_center(base: ProblemInstance<T>, k: usize) -> Result<Self> {
        let c = base.domain_y.chebyshev_center();
        Self::new(base, k, c)
    }

    pub fn diameter(&self) -> T {
        self.base.diameter()
    }

    fn check_y(&self, y: &[T]) -> Result<()> {
        check_dim(self.center.len(), y.len())?;
        let tol = T::of(1e-9) * T::one().max(self.diameter());
        if !self.base.domain_y.contains(y, tol) {
            return Err(Error::InvalidParameter("y outside Y".into()));
        }
        Ok(())
    }

    fn analytic(&self) -> bool {
        self.k > 2
    }

    pub fn value(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_y(y)?;
        Ok(self.value_unchecked(x, y))
    }

    /// Value without the `y ∈ Y` check.
    pub fn value_unchecked(&self, x: &[T], y: &[T]) -> T {
        let o = &self.base.oracle;
        let yh = &self.center;
        if self.analytic() {
            let t = y[0] - yh[0];
            let mut s = T::zero();
            let mut pow = T::one();
            for j in 0..=self.k {
                s += o.deriv_y(j, x, yh[0]).expect("checked at construction") * pow / factorial::<T>(j);
                pow *= t;
            }
            return s;
        }
        let mut v = o.value(x, yh);
        if self.k >= 1 {
            let d = sub(y, yh);
            v += dot(&o.grad_y(x, yh), &d);
            if self.k == 2 {
                v += T::of(0.5) * dot(&d, &o.hess_yy_vec(x, yh, &d));
            }
        }
        v
    }

    /// Exact x-gradient of the surrogate value.
    ///
    /// For `k = 2` this is `∇_x f + ∇²_xy f·d + ½∇³_xyy f[·, d, d]` with `d = y - ŷ`.
    pub fn grad_x(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_y(y)?;
        self.grad_x_unchecked(x, y)
    }

    pub fn grad_x_unchecked(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        let o = &self.base.oracle;
        let yh = &self.center;
        if self.analytic() {
            let t = y[0] - yh[0];
            let mut g = vec![T::zero(); x.len()];
            let mut pow = T::one();
            for j in 0..=self.k {
                let gj = o
                    .deriv_y_grad_x(j, x, yh[0])
                    .ok_or_else(|| Error::Unsupported("missing mixed derivative oracle".into()))?;
                g = axpy(&g, pow / factorial::<T>(j), &gj);
                pow *= t;
            }
            return Ok(g);
        }
        let mut g = o.grad_x(x, yh);
        if self.k >= 1 {
            let d = sub(y, yh);
            g = axpy(&g, T::one(), &o.cross_jvp(x, yh, &d));
            if self.k == 2 {
                let c3 = o
                    .cross3_jvp(x, yh, &d)
                    .ok_or_else(|| Error::Unsupported("order-2 surrogate gradient needs the third-order cross oracle".into()))?;
                g = axpy(&g, T::of(0.5), &c3);
            }
        }
        Ok(g)
    }

    /// y-gradient of the surrogate.
    pub fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        let o = &self.base.oracle;
        let yh = &self.center;
        match self.k {
            0 => vec![T::zero(); y.len()],
            1 => o.grad_y(x, yh),
            2 => {
                let d = sub(y, yh);
                axpy(&o.grad_y(x, yh), T::one(), &o.hess_yy_vec(x, yh, &d))
            }
            _ => {
                let t = y[0] - yh[0];
                let mut s = T::zero();
                let mut pow = T::one();
                for j in 1..=self.k {
                    s += o.deriv_y(j, x, yh[0]).expect("checked") * pow / factorial::<T>(j - 1);
                    pow *= t;
                }
                vec![s]
            }
        }
    }

    /// `ρ_k D^{k+1} / (k+1)!`.
    pub fn value_error_bound(&self) -> Result<T> {
        let p = &self.base.profile;
        if p.k != self.k {
            return Err(Error::InvalidParameter(format!("profile declares rho_{} but surrogate has order {}", p.k, self.k)));
        }
        Ok(value_error_bound_raw(p.rho_k, self.diameter(), self.k))
    }

    /// Bound on `‖∇_x f - ∇_x f̂_k‖`.
    pub fn gradx_error_bound(&self) -> Result<T> {
        let p = &self.base.profile;
        let d = self.diameter();
        if self.k == 0 {
            let s0 = p.sigma_0.unwrap_or(T::infinity());
            return Ok(gradx_error_bound_raw(p.mu, s0, d, 0));
        }
        if p.k != self.k {
            return Err(Error::InvalidParameter(format!("profile declares sigma_{} but surrogate has order {}", p.k, self.k)));
        }
        Ok(gradx_error_bound_raw(p.mu, p.sigma_k, d, self.k))
    }

    pub fn bounds(&self) -> Result<SurrogateBounds> {
        Ok(SurrogateBounds {
            k: self.k,
            value_error: self.value_error_bound()?.as_f64(),
            gradx_error: self.gradx_error_bound()?.as_f64(),
            lambda_bar: self.lambda_bar.as_f64(),
        })
    }
}

/// Worst observed surrogate errors over random samples.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SampledErrors {
    pub n: usize,
    pub max_value_error: f64,
    pub max_gradx_error: f64,
    /// Largest `‖∇_x f̂(x', y) - ∇_x f̂(x, y)‖ / ‖x' - x‖`.
    pub max_gradx_lipschitz: f64,
    pub value_violations: usize,
    pub gradx_violations: usize,
    pub lipschitz_violations: usize,
}

/// Samples `(x, y)` in `probe_x × Y` and compares against the bounds with absolute slack `slack`.
pub fn sample_errors<T: Scalar, R: rand::Rng + ?Sized>(
    s: &SurrogateModel<T>,
    n: usize,
    slack: T,
    rng: &mut R,
) -> Result<SampledErrors> {
    use crate::linalg::norm;
    let vb = s.value_error_bound()?;
    let gb = s.gradx_error_bound()?;
    let o = &s.base.oracle;
    let mut out = SampledErrors { n, ..Default::default() };
    for _ in 0..n {
        let x = s.base.sample_x(rng);
        let x2 = s.base.sample_x(rng);
        let y = s.base.sample_y(rng);
        let ve = (o.value(&x, &y) - s.value_unchecked(&x, &y)).abs();
        let g = s.grad_x_unchecked(&x, &y)?;
        let ge = norm(&sub(&o.grad_x(&x, &y), &g));
        out.max_value_error = out.max_value_error.max(ve.as_f64());
        out.max_gradx_error = out.max_gradx_error.max(ge.as_f64());
        if ve > vb + slack {
            out.value_violations += 1;
        }
        if ge > gb + slack {
            out.gradx_violations += 1;
        }
        let dx = norm(&sub(&x2, &x));
        if dx > T::zero() {
            let l = norm(&sub(&s.grad_x_unchecked(&x2, &y)?, &g));
            out.max_gradx_lipschitz = out.max_gradx_lipschitz.max((l / dx).as_f64());
            if l > s.lambda_bar * dx + slack {
                out.lipschitz_violations += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_formulas() {
        assert_eq!(value_error_bound_raw(2.0, 0.5, 0), 1.0);
        assert!((value_error_bound_raw(6.0, 1.0, 2) - 1.0f64).abs() < 1e-15);
        assert_eq!(gradx_error_bound_raw(3.0, 1.0, 1.0, 0), 2.0);
        assert_eq!(gradx_error_bound_raw(2.0, 2.0, 0.5, 1), 2.0);
        assert_eq!(lambda_bar(1.0, 3.0, 0.5, 1), 4.0);
        assert_eq!(lambda_bar(1.0, 3.0, 0.5, 0), 1.0);
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial::<f64>(0), 1.0);
        assert_eq!(factorial::<f64>(5), 120.0);
    }
}
