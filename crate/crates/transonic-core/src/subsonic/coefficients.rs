//! The pointwise Euler residual in Lagrangian coordinates and the
//! coefficients of its linearization about the subsonic background.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, fabs};

use crate::background::{sin_theta_over_2z2, BackgroundSolution, RadialProfile};
use crate::gas::GasConstants;
use crate::lagrangian::cos_background;
use crate::numerics::gauss_legendre5;
use crate::shock_rh::{CoefficientCheck, LinearJumpCoefficients};
use crate::{Error, Result};

/// The fixed subsonic domain `[0, N] x [0, M]` and its grid: vertices in
/// `z1`, cell centres in `z2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedDomain {
    pub r_b: f64,
    /// `N = r2 - r_b`.
    pub length: f64,
    /// `M`, the square root of the total mass flux.
    pub flux: f64,
    pub kappa_b: f64,
    pub n1: usize,
    pub n2: usize,
}

impl FixedDomain {
    pub fn new(bg: &BackgroundSolution, flux: f64, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 4 || n2 < 4 {
            return Err(Error::Invalid(format!("grid {n1}x{n2} too small (need at least 4x4)")));
        }
        let kappa_b = bg.kappa_b();
        if !(flux > 0.0 && kappa_b * flux * flux < 2.0) {
            return Err(Error::Invalid(format!("total flux {flux} incompatible with kappa_b = {kappa_b}")));
        }
        Ok(Self { r_b: bg.r_b, length: bg.n(), flux, kappa_b, n1, n2 })
    }

    pub fn h1(&self) -> f64 {
        self.length / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.flux / self.n2 as f64
    }

    pub fn z1(&self, i: usize) -> f64 {
        i as f64 * self.h1()
    }

    pub fn z2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h2()
    }

    pub fn len(&self) -> usize {
        (self.n1 + 1) * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    /// `d1(z2) = sin(theta_b) / (2 z2)`.
    pub fn d1(&self, z2: f64) -> f64 {
        sin_theta_over_2z2(z2, self.kappa_b)
    }

    /// `d1^2 = kappa_b (2 - kappa_b z2^2) / 4`, the diffusion coefficient of
    /// the angular operator.
    pub fn d1_sq(&self, z2: f64) -> f64 {
        let k = self.kappa_b;
        k * (2.0 - k * z2 * z2) / 4.0
    }

    /// `d2(z2) = kappa_b cos(theta_b) / (2 z2)`.
    pub fn d2(&self, z2: f64) -> f64 {
        self.kappa_b * cos_background(z2, self.kappa_b) / (2.0 * z2)
    }

    /// `cot(theta_b(z2))`.
    pub fn cot_b(&self, z2: f64) -> f64 {
        cos_background(z2, self.kappa_b) / (2.0 * z2 * self.d1(z2))
    }
}

/// Flow quantities and first derivatives at one Lagrangian point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianPoint {
    pub y1: f64,
    /// `sin(theta) / (2 y2)`, bounded at the axis.
    pub d1: f64,
    pub cot: f64,
    pub varpi: f64,
    pub p: f64,
    pub s: f64,
    pub u3: f64,
    pub b: f64,
    /// `(d/dy1, d/dy2)` of `varpi` and of `P`.
    pub dvarpi: [f64; 2],
    pub dp: [f64; 2],
}

/// Residual of the steady Euler equations written for `(varpi, P)` along
/// streamlines, with `U1` recovered from Bernoulli's law.
pub fn lagrangian_residual(g: &GasConstants, pt: &LagrangianPoint) -> Result<[f64; 2]> {
    let u1 = g.speed_from_bernoulli(pt.b, pt.p, pt.s, pt.u3, pt.varpi)?;
    let rho = g.density(pt.p, pt.s)?;
    let c2 = g.sound_speed_sq(pt.p, rho);
    let rc2 = rho * c2;
    let dd = c2 - u1 * u1;
    let (y1, w, cot, d1) = (pt.y1, pt.varpi, pt.cot, pt.d1);
    let u3sq = pt.u3 * pt.u3;
    let e1 = pt.dvarpi[0] - y1 * rho * u1 * w * d1 * pt.dvarpi[1] - w / y1 - w * w / y1 * cot
        + y1 * d1 / u1 * pt.dp[1]
        - w / rc2 * pt.dp[0]
        - u3sq / (y1 * u1 * u1) * cot;
    let lead = rc2 * u1 * u1 / (y1 * dd);
    let e2 = pt.dp[0] - lead * y1 * y1 * rho * u1 * d1 * pt.dvarpi[1] - y1 * rc2 * u1 * w * d1 / dd * pt.dp[1]
        - lead * (w * w + w * cot + 2.0)
        - rc2 * u3sq / (y1 * dd);
    Ok([e1, e2])
}

/// Subsonic background at `z1` (radius `r_b + z1`) with the invariants
/// behind the shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundColumn {
    pub z1: f64,
    pub prof: RadialProfile,
    pub s: f64,
    pub b: f64,
}

impl BackgroundColumn {
    pub fn at(bg: &BackgroundSolution, z1: f64) -> Result<Self> {
        Ok(Self { z1, prof: bg.subsonic_profile(bg.r_b + z1)?, s: bg.s_plus, b: bg.b })
    }
}

/// Deviations and their derivatives at one point of the fixed domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalDeviation {
    pub w2: f64,
    pub w4: f64,
    pub w5: f64,
    /// Shock displacement `W6(z2)` and its slope.
    pub w6: f64,
    pub dw6: f64,
    pub d1w2: f64,
    pub d2w2: f64,
    pub d1w4: f64,
    pub d2w4: f64,
    /// Bernoulli deviation and swirl.
    pub db: f64,
    pub u3: f64,
}

/// The Euler residual at `(z1, z2)` of the fixed domain, for the angle
/// given through `d1 = sin(theta)/(2 z2)` and `cot(theta)`.
pub fn fixed_domain_residual(
    g: &GasConstants,
    col: &BackgroundColumn,
    length: f64,
    d1: f64,
    cot: f64,
    w: &LocalDeviation,
) -> Result<[f64; 2]> {
    let nn = length;
    let z1 = col.z1;
    let r_b = col.prof.r - z1;
    let y1 = r_b + z1 + (nn - z1) * w.w6 / nn;
    let jac = nn / (nn - w.w6);
    let shear = w.dw6 * (z1 - nn) / (nn - w.w6);
    let pz1 = col.prof.dp + w.d1w4;
    let pt = LagrangianPoint {
        y1,
        d1,
        cot,
        varpi: w.w2,
        p: col.prof.p + w.w4,
        s: col.s + w.w5,
        u3: w.u3,
        b: col.b + w.db,
        dvarpi: [jac * w.d1w2, w.d2w2 + shear * w.d1w2],
        dp: [jac * pz1, w.d2w4 + shear * pz1],
    };
    lagrangian_residual(g, &pt)
}

/// Closed-form coefficients at one `z1`, except those that need the
/// integrating factor `lambda4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub r: f64,
    pub u: f64,
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
    /// `(c^2 + U^2) / (r D)` with `D = c^2 - U^2`.
    pub k1: f64,
    /// `gamma P U^2 / (kappa_b r D)`.
    pub k5: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
}

impl PointCoefficients {
    pub fn at(g: &GasConstants, bg: &BackgroundSolution, z1: f64) -> Result<Self> {
        let pr = bg.subsonic_profile(bg.r_b + z1)?;
        let gm = g.gamma;
        let (r, u, p, rho, c2) = (pr.r, pr.u, pr.p, pr.rho, pr.c2);
        let dd = c2 - u * u;
        let u2 = u * u;
        let k1 = (c2 + u2) / (r * dd);
        let k5 = gm * p * u2 / (bg.kappa_b() * r * dd);
        let e3 = -4.0 * gm * p * c2 / (r * dd * dd);
        let e4 = 2.0 * gm * (rho * u2 * u2 - p * u2 + 2.0 * p * c2) / (r * rho * dd * dd);
        let e5 = 2.0 * p * c2 * (u2 + 2.0 * c2 / (gm - 1.0)) / (r * g.cv * dd * dd);
        let e6 = 2.0 * gm * bg.nozzle.r2 * p * u2 / (bg.n() * r * r * dd);
        Ok(Self { r, u, p, dp: pr.dp, d2p: pr.d2p, k1, k5, e3, e4, e5, e6 })
    }
}

/// `int_a^b e4` by five-point Gauss-Legendre on `pieces` sub-intervals.
fn integrate_e4(g: &GasConstants, bg: &BackgroundSolution, a: f64, b: f64, pieces: usize) -> Result<f64> {
    let mut err = None;
    let mut total = 0.0;
    let h = (b - a) / pieces as f64;
    for k in 0..pieces {
        total += gauss_legendre5(
            |z| match PointCoefficients::at(g, bg, z) {
                Ok(c) => c.e4,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            a + k as f64 * h,
            a + (k + 1) as f64 * h,
        );
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Coefficient tables of the linearized operator on the `z1` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperatorCoefficients {
    pub domain: FixedDomain,
    pub jump: LinearJumpCoefficients,
    pub z1: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
    pub k1: Vec<f64>,
    pub k5: Vec<f64>,
    pub e3: Vec<f64>,
    pub e4: Vec<f64>,
    pub e5: Vec<f64>,
    pub e6: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub lambda4: Vec<f64>,
    pub lambda5: Vec<f64>,
    pub lambda6: Vec<f64>,
    pub a1: Vec<f64>,
    pub a1_prime: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
    /// `a1` at `z1 = (i - 1/2) h1` for `i = 0..=n1+1`, one half cell past
    /// each end.
    pub a1_half: Vec<f64>,
    pub a4: f64,
    /// Entropy and Bernoulli constant behind the background shock.
    pub s_plus: f64,
    pub b: f64,
}

/// Builds the coefficient tables. Every coefficient is cross-checked against
/// finite differences of [`fixed_domain_residual`] at a few stations; the
/// first failure is returned as an error naming the coefficient.
pub fn assemble_coefficients(
    bg: &BackgroundSolution,
    jump: &LinearJumpCoefficients,
    domain: &FixedDomain,
    tolerance: f64,
) -> Result<LinearOperatorCoefficients> {
    let c = tabulate(bg, jump, domain)?;
    for chk in coefficient_checks(bg, &c, tolerance)? {
        chk.into_result()?;
    }
    for (name, v) in [("lambda1", &c.lambda1), ("lambda2", &c.lambda2), ("lambda4", &c.lambda4)] {
        if let Some(x) = v.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::Coefficient { name: name.into(), closed: *x, jacobian: f64::NAN });
        }
    }
    if let Some(x) = c.lambda3.iter().find(|x| **x > 0.0) {
        return Err(Error::Coefficient { name: "lambda3".into(), closed: *x, jacobian: f64::NAN });
    }
    Ok(c)
}

/// The tables without validation.
pub fn tabulate(
    bg: &BackgroundSolution,
    jump: &LinearJumpCoefficients,
    domain: &FixedDomain,
) -> Result<LinearOperatorCoefficients> {
    let g = &bg.gas;
    let n1 = domain.n1;
    let h = domain.h1();
    let nn = domain.length;
    let a = jump.a;
    let u0 = bg.downstream.u1;
    let mut pts = Vec::with_capacity(n1 + 1);
    for i in 0..=n1 {
        pts.push(PointCoefficients::at(g, bg, domain.z1(i))?);
    }
    // integrating factor exp(int_0^z1 e4)
    let mut lambda4 = vec![1.0; n1 + 1];
    for i in 1..=n1 {
        lambda4[i] = lambda4[i - 1] * exp(integrate_e4(g, bg, domain.z1(i - 1), domain.z1(i), 1)?);
    }
    let mut a1_half = vec![0.0; n1 + 2];
    for (i, slot) in a1_half.iter_mut().enumerate() {
        let z = (i as f64 - 0.5) * h;
        let l4 = if i == 0 {
            exp(-integrate_e4(g, bg, z, 0.0, 1)?)
        } else {
            lambda4[i - 1] * exp(integrate_e4(g, bg, domain.z1(i - 1), z, 1)?)
        };
        let pr = bg.subsonic_profile(bg.r_b + z)?;
        *slot = l4 * bg.r_b * u0 / (pr.r * pr.r);
    }
    let mut c = LinearOperatorCoefficients {
        domain: *domain,
        jump: *jump,
        z1: (0..=n1).map(|i| domain.z1(i)).collect(),
        r: pts.iter().map(|p| p.r).collect(),
        u: pts.iter().map(|p| p.u).collect(),
        p: pts.iter().map(|p| p.p).collect(),
        dp: pts.iter().map(|p| p.dp).collect(),
        d2p: pts.iter().map(|p| p.d2p).collect(),
        k1: pts.iter().map(|p| p.k1).collect(),
        k5: pts.iter().map(|p| p.k5).collect(),
        e3: pts.iter().map(|p| p.e3).collect(),
        e4: pts.iter().map(|p| p.e4).collect(),
        e5: pts.iter().map(|p| p.e5).collect(),
        e6: pts.iter().map(|p| p.e6).collect(),
        lambda1: Vec::new(),
        lambda2: Vec::new(),
        lambda3: Vec::new(),
        lambda4,
        lambda5: Vec::new(),
        lambda6: Vec::new(),
        a1: Vec::new(),
        a1_prime: Vec::new(),
        a2: Vec::new(),
        a3: Vec::new(),
        a1_half,
        a4: 0.0,
        s_plus: bg.s_plus,
        b: bg.b,
    };
    for (i, p) in pts.iter().enumerate() {
        let z1 = c.z1[i];
        let l4 = c.lambda4[i];
        let l1 = p.r * p.u / (bg.r_b * u0);
        let l2 = p.r * p.r / (bg.r_b * u0);
        let l3 = a * l2 * (z1 - nn) * p.dp / nn;
        let l5 = p.k5 * l4;
        let l6 = (p.e6 + jump.e2 * p.e5) * l4;
        let a1 = l4 / l2;
        // (a1 lambda3)' with a1 lambda3 = a lambda4 (z1 - N) P' / N
        let a1l3_prime = a * l4 / nn * (p.e4 * (z1 - nn) * p.dp + p.dp + (z1 - nn) * p.d2p);
        c.lambda1.push(l1);
        c.lambda2.push(l2);
        c.lambda3.push(l3);
        c.lambda5.push(l5);
        c.lambda6.push(l6);
        c.a1.push(a1);
        c.a1_prime.push(a1 * (p.e4 - 2.0 / p.r));
        c.a2.push(l5 / l1);
        c.a3.push(a1l3_prime - a * l6);
    }
    c.a4 = a * jump.e1 * c.lambda2[0] + c.lambda3[0];
    Ok(c)
}

/// Fourth-order central difference.
fn d5<F: FnMut(f64) -> Result<f64>>(mut f: F, h: f64) -> Result<f64> {
    Ok((8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h))
}

/// Closed forms against finite differences of the exact maps, at
/// `z1 = 0, N/3, 2N/3, N` and `z2 = M/2`.
pub fn coefficient_checks(
    bg: &BackgroundSolution,
    c: &LinearOperatorCoefficients,
    tolerance: f64,
) -> Result<Vec<CoefficientCheck>> {
    let g = &bg.gas;
    let dom = &c.domain;
    let nn = dom.length;
    let z2 = 0.5 * dom.flux;
    let d1 = dom.d1(z2);
    let cot = dom.cot_b(z2);
    let u0 = bg.downstream.u1;
    let mut out = Vec::new();
    for frac in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
        let z1 = frac * nn;
        let col = BackgroundColumn::at(bg, z1)?;
        let pc = PointCoefficients::at(g, bg, z1)?;
        let (r, u) = (pc.r, pc.u);
        let res = |w: LocalDeviation| fixed_domain_residual(g, &col, nn, d1, cot, &w);
        let base = res(LocalDeviation::default())?;
        let scale = fabs(pc.dp).max(1e-300);
        out.push(CoefficientCheck::scaled("background residual", 0.0, fabs(base[0]) + fabs(base[1]), scale, tolerance));
        let h = 1e-4;
        let j1 = |set: fn(&mut LocalDeviation, f64), k: usize| {
            d5(
                |t| {
                    let mut w = LocalDeviation::default();
                    set(&mut w, t);
                    Ok(res(w)?[k])
                },
                h,
            )
        };
        out.push(CoefficientCheck::new("E1: d1W2", 1.0, j1(|w, t| w.d1w2 = t, 0)?, tolerance));
        out.push(CoefficientCheck::new("k1", pc.k1, -j1(|w, t| w.w2 = t, 0)?, tolerance));
        out.push(CoefficientCheck::new("E1: d2W4", r / u * d1, j1(|w, t| w.d2w4 = t, 0)?, tolerance));
        if frac < 1.0 {
            let closed = r / u * (z1 - nn) / nn * pc.dp * d1;
            out.push(CoefficientCheck::new("E1: W6'", closed, j1(|w, t| w.dw6 = t, 0)?, tolerance));
        }
        out.push(CoefficientCheck::new("E2: d1W4", 1.0, j1(|w, t| w.d1w4 = t, 1)?, tolerance));
        out.push(CoefficientCheck::new("k5", pc.k5 * d1, -j1(|w, t| w.d2w2 = t, 1)?, tolerance));
        out.push(CoefficientCheck::new(
            "E2: W2",
            pc.k5 * dom.kappa_b * cot,
            -j1(|w, t| w.w2 = t, 1)?,
            tolerance,
        ));
        out.push(CoefficientCheck::new("e3", pc.e3, j1(|w, t| w.db = t, 1)?, tolerance));
        out.push(CoefficientCheck::new("e4", pc.e4, j1(|w, t| w.w4 = t, 1)?, tolerance));
        out.push(CoefficientCheck::new("e5", pc.e5, j1(|w, t| w.w5 = t, 1)?, tolerance));
        out.push(CoefficientCheck::new("e6", pc.e6, j1(|w, t| w.w6 = t, 1)?, tolerance));
        let e2 = c.jump.e2;
        let shock_shift = d5(
            |t| Ok(res(LocalDeviation { w6: t, w5: e2 * t, ..Default::default() })?[1]),
            h,
        )?;
        out.push(CoefficientCheck::new("lambda6/lambda4", pc.e6 + e2 * pc.e5, shock_shift, tolerance));
        // integrating factors along z1 (one-sided near the ends)
        let dz = 1e-3 * nn;
        let sgn = if frac < 1.0 { 1.0 } else { -1.0 };
        let at = |t: f64| PointCoefficients::at(g, bg, z1 + sgn * t);
        let lam1 = |t: f64| -> Result<f64> {
            let p = at(t)?;
            Ok(p.r * p.u / (bg.r_b * u0))
        };
        let dlam1 = sgn * one_sided(lam1, dz)?;
        out.push(CoefficientCheck::new("lambda1", -pc.k1 * lam1(0.0)?, dlam1, tolerance));
        let a = c.jump.a;
        let a1l3 = |t: f64| -> Result<f64> {
            let p = at(t)?;
            let l4 = exp(integrate_e4(g, bg, 0.0, z1 + sgn * t, 8)?);
            Ok(a * l4 * (z1 + sgn * t - nn) * p.dp / nn)
        };
        let l4 = exp(integrate_e4(g, bg, 0.0, z1, 8)?);
        let closed = a * l4 / nn * (pc.e4 * (z1 - nn) * pc.dp + pc.dp + (z1 - nn) * pc.d2p);
        out.push(CoefficientCheck::new("(a1 lambda3)'", closed, sgn * one_sided(a1l3, dz)?, tolerance));
        let a1 = |t: f64| -> Result<f64> {
            let p = at(t)?;
            let l4 = exp(integrate_e4(g, bg, 0.0, z1 + sgn * t, 8)?);
            Ok(l4 * bg.r_b * u0 / (p.r * p.r))
        };
        let a1_closed = a1(0.0)? * (pc.e4 - 2.0 / pc.r);
        out.push(CoefficientCheck::new("a1'", a1_closed, sgn * one_sided(a1, dz)?, tolerance));
        let i = libm::round(frac * dom.n1 as f64) as usize;
        let l4_node = exp(integrate_e4(g, bg, 0.0, c.z1[i], 8)?);
        out.push(CoefficientCheck::new("lambda4 quadrature", c.lambda4[i], l4_node, tolerance));
    }
    // d1, d2 closed forms against the trigonometric definitions
    for frac in [0.1, 0.5, 0.9] {
        let s = frac * dom.flux;
        let th = crate::background::background_theta(s, dom.kappa_b)?;
        out.push(CoefficientCheck::new("d1", dom.d1(s), libm::sin(th) / (2.0 * s), tolerance));
        out.push(CoefficientCheck::new("d2", dom.d2(s), dom.kappa_b * libm::cos(th) / (2.0 * s), tolerance));
    }
    Ok(out)
}

/// Fourth-order one-sided derivative at 0 from samples at `0, h, .., 4h`.
fn one_sided<F: Fn(f64) -> Result<f64>>(f: F, h: f64) -> Result<f64> {
    let v: [f64; 5] = [f(0.0)?, f(h)?, f(2.0 * h)?, f(3.0 * h)?, f(4.0 * h)?];
    Ok((-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h))
}

/// Largest `|E|` over a supersonic field on the sample points, with the
/// Lagrangian derivatives built from physical ones:
/// `d/dy1 = d/dr + U2/(r U1) d/dtheta` and
/// `d/dy2 = 2 y2 / (r^2 rho U1 sin theta) d/dtheta`.
pub fn residual_from_physical(
    g: &GasConstants,
    r: f64,
    theta: f64,
    sample: &dyn Fn(f64, f64) -> Result<crate::gas::FlowState>,
    step: f64,
) -> Result<[f64; 2]> {
    let st = sample(r, theta)?;
    let varpi = |r: f64, t: f64| -> Result<f64> {
        let s = sample(r, t)?;
        Ok(s.u2 / s.u1)
    };
    let pres = |r: f64, t: f64| -> Result<f64> { Ok(sample(r, t)?.p) };
    let dr = |f: &dyn Fn(f64, f64) -> Result<f64>| d5(|t| f(r + t, theta), step);
    let dt = |f: &dyn Fn(f64, f64) -> Result<f64>| d5(|t| f(r, theta + t), step);
    let (wr, wt) = (dr(&varpi)?, dt(&varpi)?);
    let (pr, pt) = (dr(&pres)?, dt(&pres)?);
    let rho = st.density(g);
    let sn = libm::sin(theta);
    // any y2 > 0 works: it cancels between d1 and d/dy2
    let y2 = 1.0;
    let to_y2 = 2.0 * y2 / (r * r * rho * st.u1 * sn);
    let along = st.u2 / (r * st.u1);
    let pt_ = LagrangianPoint {
        y1: r,
        d1: sn / (2.0 * y2),
        cot: libm::cos(theta) / sn,
        varpi: st.u2 / st.u1,
        p: st.p,
        s: st.s,
        u3: st.u3,
        b: st.bernoulli(g),
        dvarpi: [wr + along * wt, to_y2 * wt],
        dp: [pr + along * pt, to_y2 * pt],
    };
    lagrangian_residual(g, &pt_)
}
