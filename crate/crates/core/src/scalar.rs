//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal.
    fn of(v: f64) -> Self;

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::of(n as f64)
    }

    /// Lossy view as `f64` for reporting.
    fn as_f64(self) -> f64;

    /// Eigendecomposition of a dense symmetric `n x n` matrix stored row-major.
    ///
    /// Returns eigenvalues in ascending order and the matching unit eigenvectors,
    /// eigenvector `j` occupying `vecs[j*n..(j+1)*n]`.
    fn sym_eigen(n: usize, a: &[Self]) -> (Vec<Self>, Vec<Self>);
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn of(v: f64) -> Self {
                v as $t
            }

            fn as_f64(self) -> f64 {
                self as f64
            }

            fn sym_eigen(n: usize, a: &[Self]) -> (Vec<Self>, Vec<Self>) {
                assert_eq!(a.len(), n * n, "sym_eigen: expected {n}x{n} matrix");
                if n == 0 {
                    return (Vec::new(), Vec::new());
                }
                // symmetrize to shield the solver from round-off asymmetry
                let m = DMatrix::<$t>::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
                let eig = SymmetricEigen::new(m);
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
                let mut vecs = Vec::with_capacity(n * n);
                for &i in &order {
                    vecs.extend(eig.eigenvectors.column(i).iter().copied());
                }
                (vals, vecs)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -1.0];
        let (w, v) = f64::sym_eigen(3, &a);
        assert!((w[0] + 1.0).abs() < 1e-12);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert!((w[2] - 3.0).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| v[i * 3 + k] * v[j * 3 + k]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f32_eigen_runs() {
        let (w, _) = f32::sym_eigen(2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((w[0] + 1.0).abs() < 1e-6 && (w[1] - 1.0).abs() < 1e-6);
    }
}
