//! Streamline-straightening chart `(r, theta) -> (y1, y2) = (r, sqrt(y2~))`
//! with `y2~ = r^2 int_0^theta rho U1 sin`, its inverse, and the `C^2`
//! extension operator used to evaluate grid fields outside `[0, N]`.

use alloc::format;
use alloc::vec::Vec;
use libm::{acos, cos, sin, sqrt};

use crate::numerics::{cubic_uniform, lagrange4_nonuniform, locate, simpson};
use crate::profile::Profile;
use crate::supersonic::SupersonicField;
use crate::{Error, Result};

/// Total flux `M = sqrt(r1^2 int_0^theta0 (rho U1)(theta) sin(theta) dtheta)`
/// by composite Simpson with `n` intervals.
pub fn total_flux<F: Fn(f64) -> f64>(rho_u1: F, r1: f64, theta0: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = theta0 / n as f64;
    let vals: Vec<f64> = (0..=n).map(|k| {
        let t = k as f64 * h;
        rho_u1(t) * sin(t)
    }).collect();
    sqrt(r1 * r1 * simpson(&vals, h))
}

/// Total flux from the inlet row of a marched field.
pub fn total_flux_of_field(field: &SupersonicField) -> f64 {
    field.streamfunction_row(field.r1).map(|(_, ys)| *ys.last().unwrap_or(&0.0)).unwrap_or(0.0)
}

/// `theta = arccos(1 - int_0^y2 2 s / (y1^2 (rho U1)(s)) ds)` by composite
/// Simpson with `n` intervals.
pub fn theta_from_chart<F: Fn(f64) -> f64>(y1: f64, y2: f64, rho_u1: F, n: usize) -> Result<f64> {
    if y2 == 0.0 {
        return Ok(0.0);
    }
    let n = n.max(2) + n % 2;
    let h = y2 / n as f64;
    let vals: Vec<f64> = (0..=n).map(|k| {
        let s = k as f64 * h;
        2.0 * s / (y1 * y1 * rho_u1(s))
    }).collect();
    let arg = 1.0 - simpson(&vals, h);
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!("chart integral gives arccos argument {arg}")));
    }
    Ok(acos(arg))
}

/// Tabulated chart: for each radius the angles and Lagrangian ordinates of
/// a monotone row, plus the chart Jacobian `r^2 rho U1 sin(theta) / (2 y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianChart {
    pub m_flux: f64,
    pub kappa_b: f64,
    pub radii: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub y2: Vec<Vec<f64>>,
    pub min_jacobian: f64,
}

impl LagrangianChart {
    /// Chart of the supersonic field on `n_radii` equally spaced radii.
    pub fn of_supersonic(field: &SupersonicField, kappa_b: f64, n_radii: usize, jacobian_floor: f64) -> Result<Self> {
        let n = n_radii.max(4);
        let mut radii = Vec::with_capacity(n);
        let mut thetas = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        let mut min_jac = f64::INFINITY;
        for k in 0..n {
            let r = field.r1 + (field.r2 - field.r1) * k as f64 / (n - 1) as f64;
            let row = field.row_at(r)?;
            let (th, ys) = field.streamfunction_row(r)?;
            for j in 1..th.len() {
                if !(ys[j] > ys[j - 1]) {
                    return Err(Error::DegenerateChart { jacobian: 0.0 });
                }
                let st = &row[j];
                let rho = field.gas.density_unchecked(st[3], st[4]);
                min_jac = min_jac.min(r * r * rho * st[0] * sin(th[j]) / (2.0 * ys[j]));
            }
            radii.push(r);
            thetas.push(th);
            y2.push(ys);
        }
        if !(min_jac >= jacobian_floor) {
            return Err(Error::DegenerateChart { jacobian: min_jac });
        }
        let m_flux = total_flux_of_field(field);
        Ok(Self { m_flux, kappa_b, radii, thetas, y2, min_jacobian: min_jac })
    }

    /// `y2` at `(r, theta)` by interpolation in `theta` then `r`.
    pub fn forward(&self, r: f64, theta: f64) -> f64 {
        self.interp_rows(r, |k| interp_monotone(&self.thetas[k], &self.y2[k], theta))
    }

    /// `theta` at `(y1, y2)`: monotone bracketing in each row, then cubic
    /// interpolation across rows.
    pub fn inverse(&self, y1: f64, y2: f64) -> Result<f64> {
        let top = self.y2.iter().map(|r| *r.last().unwrap()).fold(0.0, f64::max);
        if !(y2 >= 0.0 && y2 <= top * (1.0 + 1e-6)) {
            return Err(Error::OutOfChart(format!("y2 = {y2} outside [0, {top}]")));
        }
        Ok(self.interp_rows(y1, |k| interp_monotone(&self.y2[k], &self.thetas[k], y2)))
    }

    fn interp_rows<F: Fn(usize) -> f64>(&self, r: f64, f: F) -> f64 {
        let n = self.radii.len();
        let k = locate(&self.radii, r).saturating_sub(1).min(n - 4);
        let xs = [self.radii[k], self.radii[k + 1], self.radii[k + 2], self.radii[k + 3]];
        let ys = [f(k), f(k + 1), f(k + 2), f(k + 3)];
        lagrange4_nonuniform(&xs, &ys, r)
    }

    /// Near-axis bounds of `y2 / theta` over the tabulated rows.
    pub fn axis_ratio_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (th, ys) in self.thetas.iter().zip(&self.y2) {
            for j in 1..th.len() {
                let q = ys[j] / th[j];
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        (lo, hi)
    }
}

/// Cubic interpolation of `ys(x)` for increasing `xs`, stencil found by
/// bisection.
pub fn interp_monotone(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = locate(xs, x).saturating_sub(1).min(n - 4);
    lagrange4_nonuniform(&[xs[k], xs[k + 1], xs[k + 2], xs[k + 3]], &[ys[k], ys[k + 1], ys[k + 2], ys[k + 3]], x)
}

/// Small exact rational arithmetic for the extension coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num.abs(), den.abs()).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Self { num: s * num / g, den: s * den / g }
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(self.num * o.num, self.den * o.den)
    }
    fn div(self, o: Self) -> Self {
        Self::new(self.num * o.den, self.den * o.num)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Coefficients `c_k` with `sum c_k = 1`, `-sum c_k / k = 1`,
/// `sum c_k / k^2 = 1`, solved exactly in rationals. Returns numerator and
/// denominator pairs.
pub fn extension_coefficients_exact() -> [(i128, i128); 3] {
    let mut a = [[Ratio::new(0, 1); 4]; 3];
    for k in 1..=3i128 {
        a[0][(k - 1) as usize] = Ratio::new(1, 1);
        a[1][(k - 1) as usize] = Ratio::new(-1, k);
        a[2][(k - 1) as usize] = Ratio::new(1, k * k);
    }
    for row in a.iter_mut() {
        row[3] = Ratio::new(1, 1);
    }
    for col in 0..3 {
        let piv = (col..3).find(|&r| a[r][col].num != 0).expect("nonsingular");
        a.swap(col, piv);
        for r in 0..3 {
            if r != col && a[r][col].num != 0 {
                let f = a[r][col].div(a[col][col]);
                for c in col..4 {
                    a[r][c] = a[r][c].sub(f.mul(a[col][c]));
                }
            }
        }
    }
    core::array::from_fn(|k| {
        let v = a[k][3].div(a[k][k]);
        (v.num, v.den)
    })
}

pub fn extension_coefficients() -> [f64; 3] {
    let c = extension_coefficients_exact();
    core::array::from_fn(|k| c[k].0 as f64 / c[k].1 as f64)
}

const EXT: [f64; 3] = [6.0, -32.0, 27.0];

/// Extension of `g` from `[a, b]` to `[2a - b, 2b - a]` by the reflections
/// `sum c_k g(a + (a - x)/k)` and `sum c_k g(b + (b - x)/k)`.
pub fn extend_with<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, x: f64) -> f64 {
    if x < a {
        (0..3).map(|k| EXT[k] * g(a + (a - x) / (k + 1) as f64)).sum()
    } else if x > b {
        (0..3).map(|k| EXT[k] * g(b + (b - x) / (k + 1) as f64)).sum()
    } else {
        g(x)
    }
}

/// Grid function on a uniform vertex grid over `[0, len]`, evaluated by
/// cubic interpolation inside and by the extension operator outside.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedField<'a> {
    pub values: &'a [f64],
    pub len: f64,
}

impl ExtendedField<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len() - 1;
        let h = self.len / n as f64;
        extend_with(|t| cubic_uniform(self.values, 0.0, h, t), 0.0, self.len, x)
    }
}

/// Extended grid field sampled at `m` equally spaced points on `[-N, 2N]`.
pub fn extend_field(values: &[f64], len: f64, m: usize) -> Vec<f64> {
    let e = ExtendedField { values, len };
    (0..=m).map(|k| e.eval(-len + 3.0 * len * k as f64 / m as f64)).collect()
}

/// Analytic profile continued past `[a, b]` with the extension operator.
pub fn extend_profile(p: &Profile, a: f64, b: f64, x: f64, order: u32) -> f64 {
    if x < a {
        (0..3).map(|k| {
            let kk = (k + 1) as f64;
            EXT[k] * p.derivative(a + (a - x) / kk, order) * libm::pow(-1.0 / kk, order as f64)
        }).sum()
    } else if x > b {
        (0..3).map(|k| {
            let kk = (k + 1) as f64;
            EXT[k] * p.derivative(b + (b - x) / kk, order) * libm::pow(-1.0 / kk, order as f64)
        }).sum()
    } else {
        p.derivative(x, order)
    }
}

/// `cos(theta_b(z2))` without cancellation: `1 - kappa z2^2`.
pub fn cos_background(z2: f64, kappa_b: f64) -> f64 {
    1.0 - kappa_b * z2 * z2
}

/// `sin(theta_b(z2))`.
pub fn sin_background(z2: f64, kappa_b: f64) -> f64 {
    z2 * sqrt(kappa_b * (2.0 - kappa_b * z2 * z2).max(0.0))
}

/// `cos` of an angle given through `1 - cos`, guarding the axis.
pub fn cos_of(theta: f64) -> f64 {
    cos(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{background_theta, BackgroundSolution, Nozzle};
    use crate::gas::{FlowState, GasConstants};
    use crate::supersonic::{march, InletPerturbation, MarchOptions};
    use alloc::vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn bg() -> BackgroundSolution {
        let g = GasConstants::air();
        let inlet = FlowState::radial(2.0, 1.0 / 1.4, 0.0);
        BackgroundSolution::with_shock(&g, &inlet, &Nozzle::new(1.0, 2.0, PI / 6.0).unwrap(), 1.5).unwrap()
    }

    #[test]
    fn extension_coefficients_are_exact() {
        assert_eq!(extension_coefficients_exact(), [(6, 1), (-32, 1), (27, 1)]);
        assert_eq!(extension_coefficients(), [6.0, -32.0, 27.0]);
    }

    #[test]
    fn extension_reproduces_quadratics() {
        let n = 40;
        let len = 0.5;
        let vals: Vec<f64> = (0..=n).map(|i| {
            let z = len * i as f64 / n as f64;
            1.0 - 3.0 * z + 2.0 * z * z
        }).collect();
        let e = ExtendedField { values: &vals, len };
        for k in 0..=60 {
            let z = -len + 3.0 * len * k as f64 / 60.0;
            let exact = 1.0 - 3.0 * z + 2.0 * z * z;
            assert!((e.eval(z) - exact).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn extension_is_c2_for_cubics() {
        let f = |z: f64| z * z * z;
        let ext = |t: f64| extend_with(f, 0.0, 1.0, t);
        assert!((ext(-1e-9) - f(1e-9)).abs() < 1e-12);
        let p = Profile::Poly { origin: 0.0, coeffs: vec![0.0, 0.0, 0.0, 1.0] };
        for o in 0..3 {
            let l = extend_profile(&p, 0.0, 1.0, -1e-12, o);
            let r = p.derivative(1e-12, o);
            assert!((l - r).abs() < 1e-10, "order {o}");
            let l = extend_profile(&p, 0.0, 1.0, 1.0 + 1e-12, o);
            let r = p.derivative(1.0 - 1e-12, o);
            assert!((l - r).abs() < 1e-9, "order {o} at b");
        }
        let jump3 = extend_profile(&p, 0.0, 1.0, -1e-9, 3) - 6.0;
        assert!(jump3.abs() > 1.0);
    }

    #[test]
    fn total_flux_examples() {
        let (r1, t0, k) = (1.3, 0.4, 2.5);
        let m = total_flux(|_| k, r1, t0, 1024);
        assert!((m * m - r1 * r1 * k * (1.0 - t0.cos())).abs() < 1e-12);
        let f = |t: f64| 1.0 + t.cos() * 3.0 + (5.0 * t).sin();
        let exact = total_flux(f, 1.0, 1.0, 4096);
        let e1 = (total_flux(f, 1.0, 1.0, 16) - exact).abs();
        let e2 = (total_flux(f, 1.0, 1.0, 32) - exact).abs();
        assert!((e1 / e2 - 16.0).abs() < 2.0, "ratio {}", e1 / e2);
        let bg = bg();
        let field = march(&InletPerturbation::unperturbed(), &bg, &MarchOptions { n_sigma: 32, ..Default::default() }).unwrap();
        let m = total_flux_of_field(&field);
        assert!((m - bg.total_flux()).abs() < 1e-9);
    }

    #[test]
    fn theta_from_chart_background() {
        let bg = bg();
        let k = bg.kappa_b();
        for y1 in [1.6, 1.9] {
            let rho_u = bg.m / (y1 * y1);
            for y2 in [0.0, 0.1, 0.5] {
                let t = theta_from_chart(y1, y2, |_| rho_u, 8).unwrap();
                assert!((t - background_theta(y2, k).unwrap()).abs() < 1e-12);
            }
        }
        assert!(theta_from_chart(1.0, 10.0, |_| 0.1, 8).is_err());
    }

    #[test]
    fn supersonic_chart_round_trip() {
        let bg = bg();
        let t0 = bg.nozzle.theta0;
        let pert = InletPerturbation {
            epsilon: 1e-2,
            u1p: Profile::Cos { period: t0, coeffs: vec![0.0, 1.0] },
            u2p: Profile::Sin { period: t0, coeffs: vec![0.3] },
            wall: Profile::Poly { origin: 1.0, coeffs: vec![0.0, 0.0, 0.0, 1.0] },
            ..Default::default()
        };
        let mut errs = vec![];
        let mut flux_errs = vec![];
        for n in [32, 64] {
            let field = march(&pert, &bg, &MarchOptions { n_sigma: n, min_steps: n, ..Default::default() }).unwrap();
            let chart = LagrangianChart::of_supersonic(&field, bg.kappa_b(), n + 1, 1e-3).unwrap();
            let mut err: f64 = 0.0;
            let mut flux_err: f64 = 0.0;
            for r in [1.05, 1.33, 1.71] {
                for q in 1..6 {
                    let th = field.wall_angle(r) * q as f64 / 6.0;
                    let y2 = chart.forward(r, th);
                    err = err.max((chart.inverse(r, y2).unwrap() - th).abs());
                }
                // wall image is the total flux
                let y_wall = chart.forward(r, field.wall_angle(r));
                flux_err = flux_err.max((y_wall - chart.m_flux).abs());
                assert_eq!(chart.forward(r, 0.0), 0.0);
            }
            errs.push(err);
            flux_errs.push(flux_err);
            let (lo, hi) = chart.axis_ratio_bounds();
            assert!(lo > 0.0 && hi < 10.0 * lo);
        }
        assert!(errs[1] < 1e-6, "{errs:?}");
        // the march is not conservative, so the wall flux drifts at the
        // discretization order
        assert!(flux_errs[1] < flux_errs[0] / 3.0 && flux_errs[0] < 1e-4, "{flux_errs:?}");
    }

    #[test]
    fn background_chart_matches_closed_form() {
        let bg = bg();
        let field = march(&InletPerturbation::unperturbed(), &bg, &MarchOptions { n_sigma: 64, ..Default::default() }).unwrap();
        let chart = LagrangianChart::of_supersonic(&field, bg.kappa_b(), 33, 1e-3).unwrap();
        for r in [1.1, 1.4] {
            for th in [0.1f64, 0.3, 0.5] {
                let exact = ((1.0 - th.cos()) / bg.kappa_b()).sqrt();
                assert!((chart.forward(r, th) - exact).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn extension_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -1.0f64..2.0) {
            let f = |t: f64| (3.0 * t).sin();
            let g = |t: f64| t.exp();
            let lhs = extend_with(|t| a * f(t) + b * g(t), 0.0, 1.0, x);
            let rhs = a * extend_with(f, 0.0, 1.0, x) + b * extend_with(g, 0.0, 1.0, x);
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn extension_reproduces_random_quadratics(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, x in -1.0f64..2.0) {
            let q = |t: f64| c0 + c1 * t + c2 * t * t;
            prop_assert!((extend_with(q, 0.0, 1.0, x) - q(x)).abs() < 1e-11);
        }
    }
}
