//! Desk-scale brute-force oracles: grid search over low-dimensional domains
//! with a local refinement pass, and multi-start projected ascent.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::linalg::{axpy, norm};
use crate::problems::ProblemInstance;
use crate::Scalar;

/// Replaces the incumbent only on a strict improvement beyond relative `1e-12`,
/// so ties resolve to the earliest grid point (smallest coordinates first).
fn better<T: Scalar>(v: T, best: T) -> bool {
    v > best + T::of(1e-12) * T::one().max(best.abs())
}

fn linspace<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    if n <= 1 {
        return vec![T::of(0.5) * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * T::count(i) / T::count(n - 1)).collect()
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max<T: Scalar>(mut a: T, mut b: T, tol: T, f: &dyn Fn(T) -> T) -> (T, T) {
    let g = T::of((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut it = 0;
    while (b - a) > tol && it < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        it += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over a domain of dimension at most 2 with `res` points per
/// axis, then refines around the incumbent.
pub fn grid_max<T: Scalar>(dom: &Domain<T>, res: usize, f: &dyn Fn(&[T]) -> T) -> Result<(Vec<T>, T)> {
    let res = res.max(2);
    let (lo, hi) = dom
        .bounding_box()
        .ok_or_else(|| Error::Unsupported("grid search over an unbounded domain".into()))?;
    match lo.len() {
        1 => {
            let pts = linspace(lo[0], hi[0], res);
            let mut bi = 0;
            let mut bv = f(&[pts[0]]);
            for (i, &p) in pts.iter().enumerate().skip(1) {
                let v = f(&[p]);
                if better(v, bv) {
                    bi = i;
                    bv = v;
                }
            }
            let a = pts[bi.saturating_sub(1)];
            let b = pts[(bi + 1).min(res - 1)];
            let tol = T::of(1e-13) * T::one().max(hi[0].abs().max(lo[0].abs()));
            let (y, v) = golden_max(a, b, tol, &|t| f(&[t]));
            if better(v, bv) {
                Ok((vec![y], v))
            } else {
                Ok((vec![pts[bi]], bv))
            }
        }
        2 => {
            let xs = linspace(lo[0], hi[0], res);
            let ys = linspace(lo[1], hi[1], res);
            let tol = T::of(1e-12) * T::one().max(dom.diameter());
            let mut best: Option<(Vec<T>, T)> = None;
            let consider = |p: Vec<T>, best: &mut Option<(Vec<T>, T)>| {
                let p = dom.project(&p).expect("dim 2");
                let v = f(&p);
                match best {
                    Some((_, bv)) if !better(v, *bv) => {}
                    _ => *best = Some((p, v)),
                }
            };
            for &a in &xs {
                for &b in &ys {
                    let p = vec![a, b];
                    if dom.contains(&p, tol) {
                        consider(p, &mut best);
                    }
                }
            }
            if let Domain::Ball { center, radius } = dom {
                for i in 0..4 * res {
                    let t = T::of(2.0) * T::PI() * T::count(i) / T::count(4 * res);
                    consider(vec![center[0] + *radius * t.cos(), center[1] + *radius * t.sin()], &mut best);
                }
            }
            let (mut by, mut bv) = best.ok_or_else(|| Error::Numerical("empty grid".into()))?;
            // two local refinement passes on shrinking neighbourhoods
            let mut hx = (hi[0] - lo[0]) / T::count(res - 1);
            let mut hy = (hi[1] - lo[1]) / T::count(res - 1);
            for _ in 0..2 {
                let c = by.clone();
                for a in linspace(c[0] - hx, c[0] + hx, 21) {
                    for b in linspace(c[1] - hy, c[1] + hy, 21) {
                        let p = dom.project(&[a, b])?;
                        let v = f(&p);
                        if better(v, bv) {
                            by = p;
                            bv = v;
                        }
                    }
                }
                hx /= T::of(10.0);
                hy /= T::of(10.0);
            }
            Ok((by, bv))
        }
        d => Err(Error::Unsupported(format!("grid search needs dimension <= 2, got {d}"))),
    }
}

/// All local maximizers of `f` on an interval whose value is within `tol` of
/// the global maximum: local maxima of a `res`-point grid, each refined by
/// golden section on its neighbouring cells.
pub fn near_maximizers_1d<T: Scalar>(lo: T, hi: T, res: usize, tol: T, f: &dyn Fn(T) -> T) -> Vec<(T, T)> {
    let res = res.max(3);
    let pts = linspace(lo, hi, res);
    let vals: Vec<T> = pts.iter().map(|&p| f(p)).collect();
    let gtol = T::of(1e-13) * T::one().max(hi.abs().max(lo.abs()));
    let mut cands = Vec::new();
    for i in 0..res {
        let left = i == 0 || vals[i] >= vals[i - 1];
        let right = i == res - 1 || vals[i] >= vals[i + 1];
        if left && right {
            let (a, b) = (pts[i.saturating_sub(1)], pts[(i + 1).min(res - 1)]);
            let (y, v) = golden_max(a, b, gtol, f);
            cands.push(if v > vals[i] { (y, v) } else { (pts[i], vals[i]) });
        }
    }
    let best = cands.iter().map(|c| c.1).fold(T::neg_infinity(), |a, b| a.max(b));
    cands.retain(|c| c.1 >= best - tol);
    cands
}

/// Minimizes `f` by maximizing `-f`.
pub fn grid_min<T: Scalar>(dom: &Domain<T>, res: usize, f: &dyn Fn(&[T]) -> T) -> Result<(Vec<T>, T)> {
    let (p, v) = grid_max(dom, res, &|y| -f(y))?;
    Ok((p, -v))
}

/// `max_{y∈Y} f(x, y)` by grid search with `resolution` points per axis plus refinement.
///
/// Accuracy is `O(ρ₁ (D/resolution)²)` for `f(x, ·)` with `ρ₁`-Lipschitz gradient.
pub fn brute_force_max<T: Scalar>(p: &ProblemInstance<T>, x: &[T], resolution: usize) -> Result<(Vec<T>, T)> {
    if p.dim_y() > 2 {
        return Err(Error::Unsupported(format!("brute force over Y needs dim(Y) <= 2, got {}", p.dim_y())));
    }
    grid_max(&p.domain_y, resolution, &|y| p.oracle.value(x, y))
}

/// Multi-start projected gradient ascent of a smooth function with `L`-Lipschitz gradient.
///
/// Starts are the points in `seeds` followed by `n_random` uniform samples of `dom`.
pub fn ascent_max<T: Scalar, R: Rng + ?Sized>(
    dom: &Domain<T>,
    f: &dyn Fn(&[T]) -> T,
    grad: &dyn Fn(&[T]) -> Vec<T>,
    lipschitz: T,
    seeds: &[Vec<T>],
    n_random: usize,
    iters: usize,
    rng: &mut R,
) -> Result<(Vec<T>, T)> {
    let step = T::one() / lipschitz.max(T::of(1e-12));
    let mut starts: Vec<Vec<T>> = seeds.to_vec();
    for _ in 0..n_random {
        starts.push(dom.sample(rng)?);
    }
    let mut best: Option<(Vec<T>, T)> = None;
    for s in starts {
        let mut y = dom.project(&s)?;
        let mut v = f(&y);
        for _ in 0..iters {
            let g = grad(&y);
            let y2 = dom.project(&axpy(&y, step, &g))?;
            let v2 = f(&y2);
            let moved = norm(&crate::linalg::sub(&y2, &y));
            if v2 >= v {
                y = y2;
                v = v2;
            }
            if moved <= T::of(1e-14) * T::one().max(norm(&y)) {
                break;
            }
        }
        match &best {
            Some((_, bv)) if !better(v, *bv) => {}
            _ => best = Some((y, v)),
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("ascent needs at least one start".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_intro_example;

    #[test]
    fn intro_max_at_minus_two() {
        let p = make_intro_example::<f64>();
        let (y, v) = brute_force_max(&p, &[1.0], 2001).unwrap();
        assert_eq!(y, vec![-2.0]);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_interior_max() {
        let (x, v) = golden_max(0.0, 3.0, 1e-12, &|t: f64| -(t - 1.3) * (t - 1.3));
        assert!((x - 1.3).abs() < 1e-6 && v <= 0.0);
    }

    #[test]
    fn grid_2d_on_ball() {
        let dom = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let (y, v) = grid_max(&dom, 101, &|y| y[0] + 2.0 * y[1]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((v - s5).abs() < 1e-6, "{v}");
        assert!((y[0] - 1.0 / s5).abs() < 1e-3);
    }
}
