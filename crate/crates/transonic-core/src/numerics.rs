//! Small dense numerical kernels: Lagrange interpolation, quadrature,
//! tridiagonal solves and a symmetric tridiagonal eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, hypot, sqrt};

use crate::{Error, Result};

/// Cubic Lagrange interpolation on a uniform grid `x_k = x0 + k h`,
/// `k = 0..n`. The four-point stencil is shifted inward near the ends, so
/// values slightly outside the grid are extrapolated.
pub fn cubic_uniform(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let t = (x - x0) / h;
    let mut k = libm::floor(t) as isize - 1;
    k = k.clamp(0, n as isize - 4);
    let k = k as usize;
    let u = t - k as f64;
    lagrange4(&values[k..k + 4], u)
}

/// Cubic Lagrange weights at local coordinate `u` for nodes 0,1,2,3.
#[inline]
pub fn lagrange4_weights(u: f64) -> [f64; 4] {
    let (a, b, c, d) = (u, u - 1.0, u - 2.0, u - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

#[inline]
pub fn lagrange4(v: &[f64], u: f64) -> f64 {
    let w = lagrange4_weights(u);
    w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]
}

/// Cubic Lagrange interpolation through four arbitrary nodes.
pub fn lagrange4_nonuniform(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Index of the interval of a sorted grid containing `x` (clamped).
pub fn locate(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Composite Simpson rule on a uniform grid with an even number of
/// intervals; falls back to Simpson plus a 3/8 panel when odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    assert!(n >= 2, "need at least two intervals");
    let simple = |v: &[f64]| {
        let m = v.len() - 1;
        let mut s = v[0] + v[m];
        for (k, x) in v.iter().enumerate().take(m).skip(1) {
            s += if k % 2 == 1 { 4.0 * x } else { 2.0 * x };
        }
        s * h / 3.0
    };
    if n % 2 == 0 {
        simple(values)
    } else if n == 3 {
        3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3])
    } else {
        let tail = &values[n - 3..];
        simple(&values[..n - 2]) + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])
    }
}

/// Cumulative integral from `x_0` on a uniform grid, fourth-order accurate:
/// Simpson panels for even nodes, a quadratic half-panel for odd nodes.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3);
    let mut out = vec![0.0; n];
    for k in 1..n {
        if k % 2 == 0 {
            let v = &values[k - 2..=k];
            out[k] = out[k - 2] + h / 3.0 * (v[0] + 4.0 * v[1] + v[2]);
        } else {
            // integral over [x_{k-1}, x_k] of the quadratic through three nodes
            let (a, b, c, first) = if k + 1 < n {
                (values[k - 1], values[k], values[k + 1], true)
            } else {
                (values[k - 2], values[k - 1], values[k], false)
            };
            let piece = if first {
                h / 12.0 * (5.0 * a + 8.0 * b - c)
            } else {
                h / 12.0 * (-a + 8.0 * b + 5.0 * c)
            };
            out[k] = out[k - 1] + piece;
        }
    }
    out
}

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for i in 0..5 {
        s += W[i] * f(m + r * X[i]);
    }
    s * r
}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Returns the smallest pivot magnitude.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut min_pivot = f64::INFINITY;
    let mut beta = diag[0];
    for i in 0..n {
        if i > 0 {
            beta = diag[i] - lower[i] * c[i - 1];
            rhs[i] -= lower[i] * rhs[i - 1];
        }
        if !(fabs(beta) > 1e-300) {
            return Err(Error::LinearSolve(alloc::format!("zero pivot at row {i}")));
        }
        min_pivot = min_pivot.min(fabs(beta));
        if i + 1 < n {
            c[i] = upper[i] / beta;
        }
        rhs[i] /= beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(min_pivot)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix (implicit QL).
/// Returns eigenvalues and the column-major orthonormal eigenvector matrix
/// `z[row * n + col]`.
pub fn symmetric_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&offdiag[..n - 1]);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = fabs(d[m]) + fabs(d[m + 1]);
                if fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::LinearSolve("eigensolver did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { fabs(r) } else { -fabs(r) });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let t = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * t;
                    z[k * n + i] = c * z[k * n + i] - s * t;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Second-order derivative on a vertex-centred grid: central inside,
/// one-sided three-point at both ends.
pub fn derivative_vertex(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

/// Parity of a field across the axis `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Second-order derivative on a cell-centred grid `s_j = (j + 1/2) h`.
/// The axis is handled by a parity ghost. At the far face either the face
/// value is used (quadratic through two cells and the face) or a one-sided
/// three-point stencil.
pub fn derivative_cell(v: &[f64], h: f64, parity: Parity, face: Option<f64>) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    let ghost = match parity {
        Parity::Even => v[0],
        Parity::Odd => -v[0],
    };
    for j in 0..n {
        let left = if j == 0 { ghost } else { v[j - 1] };
        if j + 1 < n {
            d[j] = (v[j + 1] - left) / (2.0 * h);
        }
    }
    d[n - 1] = match face {
        // quadratic through s_{n-2}, s_{n-1} and the face at s_{n-1} + h/2
        Some(f) => (-v[n - 2] - 3.0 * v[n - 1] + 4.0 * f) / (3.0 * h),
        None => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
    };
    d
}

/// Value at the far face of a cell-centred grid by quadratic extrapolation.
pub fn face_extrapolate(v: &[f64]) -> f64 {
    let n = v.len();
    (15.0 * v[n - 1] - 10.0 * v[n - 2] + 3.0 * v[n - 3]) / 8.0
}

/// Trapezoid integrals `int_{s_j}^{M} g ds` on a cell-centred grid, using
/// the supplied face value at `M`.
pub fn tail_integrals_cell(g: &[f64], h: f64, face: f64) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    out[n - 1] = 0.25 * h * (g[n - 1] + face);
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] + 0.5 * h * (g[j] + g[j + 1]);
    }
    out
}

/// Trapezoid integrals `int_0^{s_j} g ds` on a cell-centred grid for an
/// integrand vanishing at `s = 0`.
pub fn head_integrals_cell(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    out[0] = 0.25 * h * g[0];
    for j in 1..n {
        out[j] = out[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| libm::log(*h)).collect();
    let ly: Vec<f64> = errs.iter().map(|e| libm::log(*e)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lx.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    num / den
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(fabs(*x)))
}

pub fn rms(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.25 * x * x * x;
        let vals: Vec<f64> = (0..11).map(|k| f(0.1 * k as f64)).collect();
        for x in [0.0, 0.03, 0.47, 0.99, 1.0] {
            assert!((cubic_uniform(&vals, 0.0, 0.1, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for n in [2usize, 3, 5, 8] {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| (k as f64 * h).powi(3)).collect();
            assert!((simpson(&vals, h) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn cumulative_simpson_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| (k as f64 * h).sin()).collect();
            let c = cumulative_simpson(&vals, h);
            c.iter().enumerate().map(|(k, v)| (v - (1.0 - (k as f64 * h).cos())).abs()).fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn gauss_legendre_exact_degree_nine() {
        let v = gauss_legendre5(|x| x.powi(9) + x.powi(4), 0.0, 1.0);
        assert!((v - (0.1 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_solves() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut b = [2.0 * 1.0 - 2.0, -1.0 + 4.0 - 3.0, -2.0 + 6.0 - 4.0, -3.0 + 8.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_of_laplacian() {
        let n = 12;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let (mut vals, z) = symmetric_tridiagonal_eigen(&d, &e).unwrap();
        // orthonormal columns
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|k| z[k * n + a] * z[k * n + b]).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (core::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_derivative_second_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let s: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
            let v: Vec<f64> = s.iter().map(|x| x.cos()).collect();
            let d = derivative_cell(&v, h, Parity::Even, Some(1f64.cos()));
            s.iter().zip(&d).map(|(x, dv)| (dv + x.sin()).abs()).fold(0.0, f64::max)
        };
        assert!(err(32) / err(64) > 3.5);
    }

    #[test]
    fn tail_and_head_integrals() {
        let n = 64;
        let h = 1.0 / n as f64;
        let s: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let g: Vec<f64> = s.iter().map(|x| 2.0 * x).collect();
        let tail = tail_integrals_cell(&g, h, 2.0);
        let head = head_integrals_cell(&g, h);
        for j in 0..n {
            assert!((tail[j] - (1.0 - s[j] * s[j])).abs() < 1e-14);
            assert!((head[j] - s[j] * s[j]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn face_extrapolation_exact_for_quadratics(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let q = |x: f64| a + b * x + c * x * x;
            let v = [q(0.5), q(1.5), q(2.5)];
            prop_assert!((face_extrapolate(&v) - q(3.0)).abs() < 1e-12);
        }
    }
}
