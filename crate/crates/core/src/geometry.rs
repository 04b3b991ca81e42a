//! Euclidean domains, projections and the soft-thresholding operator.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm, sub};
use crate::Scalar;

/// Closed convex set in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain<T: Scalar> {
    Interval { lo: T, hi: T },
    Box { lo: Vec<T>, hi: Vec<T> },
    Ball { center: Vec<T>, radius: T },
    WholeSpace { dim: usize },
}

impl<T: Scalar> Domain<T> {
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidDomain(format!("interval needs lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn boxed(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidDomain("box needs lo <= hi componentwise".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) {
            return Err(Error::InvalidDomain(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn whole(dim: usize) -> Self {
        Domain::WholeSpace { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::WholeSpace { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::WholeSpace { .. })
    }

    pub fn diameter(&self) -> T {
        match self {
            Domain::Interval { lo, hi } => *hi - *lo,
            Domain::Box { lo, hi } => norm(&sub(hi, lo)),
            Domain::Ball { radius, .. } => T::of(2.0) * *radius,
            Domain::WholeSpace { .. } => T::infinity(),
        }
    }

    /// Euclidean projection.
    pub fn project(&self, y: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), y.len())?;
        Ok(match self {
            Domain::Interval { lo, hi } => vec![y[0].max(*lo).min(*hi)],
            Domain::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&a, &b))| v.max(a).min(b))
                .collect(),
            Domain::Ball { center, radius } => {
                let d = sub(y, center);
                let n = norm(&d);
                if n <= *radius {
                    y.to_vec()
                } else {
                    let s = *radius / n;
                    center.iter().zip(&d).map(|(&c, &v)| c + s * v).collect()
                }
            }
            Domain::WholeSpace { .. } => y.to_vec(),
        })
    }

    /// Membership up to an absolute slack `tol`.
    pub fn contains(&self, y: &[T], tol: T) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Interval { lo, hi } => y[0] >= *lo - tol && y[0] <= *hi + tol,
            Domain::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&a, &b))| v >= a - tol && v <= b + tol),
            Domain::Ball { center, radius } => norm(&sub(y, center)) <= *radius + tol,
            Domain::WholeSpace { .. } => true,
        }
    }

    /// Center of the smallest enclosing ball; the origin for the whole space.
    pub fn chebyshev_center(&self) -> Vec<T> {
        let half = T::of(0.5);
        match self {
            Domain::Interval { lo, hi } => vec![half * (*lo + *hi)],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(&a, &b)| half * (a + b)).collect(),
            Domain::Ball { center, .. } => center.clone(),
            Domain::WholeSpace { dim } => vec![T::zero(); *dim],
        }
    }

    /// A maximizer of `<g, y>` over the domain.
    ///
    /// Ties on boxes pick the lower bound (the lexicographically smallest vertex).
    /// A zero gradient on a ball picks the point in direction `y_hat - center`,
    /// or the center when those coincide.
    pub fn linear_argmax(&self, g: &[T], y_hat: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), g.len())?;
        Ok(match self {
            Domain::Interval { lo, hi } => vec![if g[0] > T::zero() { *hi } else { *lo }],
            Domain::Box { lo, hi } => g
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&gi, (&a, &b))| if gi > T::zero() { b } else { a })
                .collect(),
            Domain::Ball { center, radius } => {
                let n = norm(g);
                if n > T::zero() {
                    center.iter().zip(g).map(|(&c, &v)| c + *radius * v / n).collect()
                } else {
                    let d = sub(y_hat, center);
                    let dn = norm(&d);
                    if dn > T::zero() {
                        center.iter().zip(&d).map(|(&c, &v)| c + *radius * v / dn).collect()
                    } else {
                        center.clone()
                    }
                }
            }
            Domain::WholeSpace { .. } => {
                return Err(Error::Unsupported("linear maximization over an unbounded domain".into()))
            }
        })
    }

    /// Uniform sample from the domain (bounded domains only).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>> {
        let u = |rng: &mut R, a: T, b: T| a + (b - a) * T::of(rng.gen::<f64>());
        Ok(match self {
            Domain::Interval { lo, hi } => vec![u(rng, *lo, *hi)],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(&a, &b)| u(rng, a, b)).collect(),
            Domain::Ball { center, radius } => {
                let d = center.len();
                let dir = unit_sphere::<T, R>(d, rng);
                let r = *radius * T::of(rng.gen::<f64>().powf(1.0 / d.max(1) as f64));
                center.iter().zip(&dir).map(|(&c, &v)| c + r * v).collect()
            }
            Domain::WholeSpace { .. } => {
                return Err(Error::Unsupported("cannot sample an unbounded domain".into()))
            }
        })
    }

    /// `sup_{y∈dom} ‖y‖`, if bounded.
    pub fn max_norm(&self) -> Option<T> {
        match self {
            Domain::Ball { center, radius } => Some(norm(center) + *radius),
            Domain::WholeSpace { .. } => None,
            _ => {
                let (lo, hi) = self.bounding_box()?;
                Some(lo.iter().zip(&hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<T>().sqrt())
            }
        }
    }

    /// Axis-aligned bounding box, if bounded.
    pub fn bounding_box(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Domain::Interval { lo, hi } => Some((vec![*lo], vec![*hi])),
            Domain::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Domain::Ball { center, radius } => Some((
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            )),
            Domain::WholeSpace { .. } => None,
        }
    }
}

/// Uniform draw from the unit sphere in `R^d` via normalized Gaussians.
pub fn unit_sphere<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<T> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<T> = (0..d)
            .map(|_| T::of(StandardNormal.sample(&mut *rng)))
            .collect();
        let n = norm(&v);
        if n > T::zero() {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `(max{|z|, r} - r) * sign(z)`.
pub fn soft_threshold<T: Scalar>(z: T, r: T) -> T {
    let m = z.abs().max(r) - r;
    if z < T::zero() {
        -m
    } else {
        m
    }
}
