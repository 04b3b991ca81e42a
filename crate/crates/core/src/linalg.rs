//! Small dense vector helpers on slices.

use crate::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    // scaled to avoid overflow for large entries
    let m = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let s: T = a.iter().map(|&x| (x / m) * (x / m)).sum();
    m * s.sqrt()
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Scalar>(s: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

/// `a + s * b`
pub fn axpy<T: Scalar>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    norm(&sub(a, b))
}

pub fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Row-major dense matrix-vector product.
pub fn matvec<T: Scalar>(rows: usize, cols: usize, m: &[T], v: &[T]) -> Vec<T> {
    debug_assert_eq!(m.len(), rows * cols);
    (0..rows).map(|i| dot(&m[i * cols..(i + 1) * cols], v)).collect()
}

/// Spectral norm of a symmetric row-major matrix.
pub fn sym_norm<T: Scalar>(n: usize, m: &[T]) -> T {
    let (w, _) = T::sym_eigen(n, m);
    w.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert!((norm(&[3.0, 4.0]) - 5.0f64).abs() < 1e-15);
        assert_eq!(axpy(&[1.0, 1.0], 2.0, &[1.0, -1.0]), vec![3.0, -1.0]);
        assert_eq!(norm::<f64>(&[0.0, 0.0]), 0.0);
        assert!((sym_norm(2, &[0.0, 2.0, 2.0, 0.0]) - 2.0f64).abs() < 1e-12);
    }
}
