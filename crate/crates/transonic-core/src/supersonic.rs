//! Perturbed supersonic flow marched in `r` from the inlet through the whole
//! nozzle.
//!
//! The march works on the wall-sheared angle `sigma = theta theta0 / w(r)`
//! with `w(r) = theta0 + eps f(r)`, so the wall is the grid line
//! `sigma = theta0`. Each step is a MacCormack predictor-corrector applied in
//! well-balanced form: `Phi^{n+1} = Phi_b(r^{n+1}) + S(Phi^n) - S(Phi_b^n)`,
//! which reproduces the background exactly when `eps = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin, sqrt, tan};

use crate::background::{solve_radial_state, BackgroundSolution, Branch, Invariants};
use crate::gas::{FlowState, GasConstants};
use crate::numerics::{cubic_uniform, cumulative_simpson, lagrange4_nonuniform, locate};
use crate::profile::Profile;
use crate::{Error, Result};

/// Components of the marched state, in storage order.
pub const U1: usize = 0;
pub const U2: usize = 1;
pub const U3: usize = 2;
pub const P: usize = 3;
pub const S: usize = 4;

pub type State = [f64; 5];

/// Inlet and wall perturbation data of size `epsilon`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InletPerturbation {
    pub epsilon: f64,
    pub u1p: Profile,
    pub u2p: Profile,
    pub u3p: Profile,
    pub pp: Profile,
    pub sp: Profile,
    /// Wall shape `f(r)`; the wall is `theta = theta0 + eps f(r)`.
    pub wall: Profile,
}

impl InletPerturbation {
    pub fn unperturbed() -> Self {
        Self::default()
    }

    /// Inlet state at angle `theta`.
    pub fn inlet_state(&self, bg: &BackgroundSolution, theta: f64) -> FlowState {
        let e = self.epsilon;
        let b = bg.inlet;
        FlowState::new(
            b.u1 + e * self.u1p.value(theta),
            e * self.u2p.value(theta),
            e * self.u3p.value(theta),
            b.p + e * self.pp.value(theta),
            b.s + e * self.sp.value(theta),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompatibilityReport {
    pub checks: Vec<CompatibilityCheck>,
}

impl CompatibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CompatibilityCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    fn push(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.checks.push(CompatibilityCheck {
            name: String::from(name),
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
        });
    }
}

/// Checks the axis, wall and inlet-corner compatibility of the perturbation
/// data. Derivatives are taken analytically from the profiles.
///
/// The wall identity is the angular momentum balance at the inlet corner,
/// `Pp'(theta0) - eps rho U3p(theta0)^2 cot(theta0) + rho U1^2 r1^2 f''(r1) = 0`,
/// evaluated with the full inlet state.
pub fn validate_inlet(pert: &InletPerturbation, bg: &BackgroundSolution) -> CompatibilityReport {
    let t0 = bg.nozzle.theta0;
    let r1 = bg.nozzle.r1;
    let mut scale: f64 = 1.0;
    for p in [&pert.u1p, &pert.u2p, &pert.u3p, &pert.pp, &pert.sp] {
        for k in 0..=16 {
            scale = scale.max(p.value(t0 * k as f64 / 16.0).abs());
        }
    }
    let tol = 1e-8 * scale;
    let mut rep = CompatibilityReport::default();
    rep.push("U2p(0)", pert.u2p.value(0.0), tol);
    rep.push("U3p(0)", pert.u3p.value(0.0), tol);
    rep.push("U2p''(0)", pert.u2p.derivative(0.0, 2), tol);
    rep.push("Pp'(0)", pert.pp.derivative(0.0, 1), tol);
    rep.push("U3p'(0)", pert.u3p.derivative(0.0, 1), tol);
    rep.push("Sp'(0)", pert.sp.derivative(0.0, 1), tol);
    rep.push("U1p'(0)", pert.u1p.derivative(0.0, 1), tol);
    rep.push("U2p(theta0)", pert.u2p.value(t0), tol);
    let st = pert.inlet_state(bg, t0);
    let rho = st.density(&bg.gas);
    let wall_momentum = pert.pp.derivative(t0, 1)
        - pert.epsilon * rho * pert.u3p.value(t0) * pert.u3p.value(t0) * cos(t0) / sin(t0)
        + rho * st.u1 * st.u1 * r1 * r1 * pert.wall.derivative(r1, 2);
    rep.push("wall angular momentum", wall_momentum, tol);
    rep.push("f(r1)", pert.wall.value(r1), tol);
    rep.push("f'(r1)", pert.wall.derivative(r1, 1), tol);
    rep
}

/// Treatment of the wall row in the march.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallTreatment {
    /// One-sided second-order differences plus the slip condition.
    OneSided,
    /// Mirror ghosts about `theta0` (straight walls only): `U2` odd, the rest even.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    /// Number of angular intervals.
    pub n_sigma: usize,
    pub cfl: f64,
    /// Radial Mach number `U1/c` must stay above `1 + mach_margin`.
    pub mach_margin: f64,
    /// Lower bound on the number of radial steps.
    pub min_steps: usize,
    pub wall: WallTreatment,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self { n_sigma: 128, cfl: 0.8, mach_margin: 0.05, min_steps: 128, wall: WallTreatment::OneSided }
    }
}

/// Marched supersonic field on rows of constant `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupersonicField {
    pub gas: GasConstants,
    pub theta0: f64,
    pub r1: f64,
    pub r2: f64,
    pub epsilon: f64,
    pub wall: Profile,
    pub radii: Vec<f64>,
    pub n_sigma: usize,
    data: Vec<State>,
    /// Radial background on each row; interpolation acts on deviations from it.
    base: Vec<State>,
    invariants: Invariants,
}

impl SupersonicField {
    pub fn n_rows(&self) -> usize {
        self.radii.len()
    }

    pub fn d_sigma(&self) -> f64 {
        self.theta0 / self.n_sigma as f64
    }

    pub fn sigma(&self, j: usize) -> f64 {
        j as f64 * self.d_sigma()
    }

    /// Wall angle `theta0 + eps f(r)`.
    pub fn wall_angle(&self, r: f64) -> f64 {
        self.theta0 + self.epsilon * self.wall.value(r)
    }

    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.sigma(j) * self.wall_angle(self.radii[i]) / self.theta0
    }

    pub fn node(&self, i: usize, j: usize) -> State {
        self.data[i * (self.n_sigma + 1) + j]
    }

    pub fn row(&self, i: usize) -> &[State] {
        let w = self.n_sigma + 1;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn state(&self, i: usize, j: usize) -> FlowState {
        to_flow(&self.node(i, j))
    }

    /// Angular row at an arbitrary radius by cubic interpolation across rows.
    pub fn row_at(&self, r: f64) -> Result<Vec<State>> {
        let span = self.r2 - self.r1;
        if !(r >= self.r1 - 1e-12 * span && r <= self.r2 + 1e-12 * span) {
            return Err(Error::OutOfChart(format!("radius {r} outside [{}, {}]", self.r1, self.r2)));
        }
        let nr = self.n_rows();
        let k = locate(&self.radii, r).saturating_sub(1).min(nr - 4);
        let xs = [self.radii[k], self.radii[k + 1], self.radii[k + 2], self.radii[k + 3]];
        let w = self.n_sigma + 1;
        let here = self.base_state(r)?;
        let mut out = vec![[0.0; 5]; w];
        for (j, o) in out.iter_mut().enumerate() {
            for c in 0..5 {
                let ys: [f64; 4] = core::array::from_fn(|q| self.data[(k + q) * w + j][c] - self.base[k + q][c]);
                o[c] = here[c] + lagrange4_nonuniform(&xs, &ys, r);
            }
        }
        Ok(out)
    }

    /// State at physical `(r, theta)`.
    pub fn sample(&self, r: f64, theta: f64) -> Result<FlowState> {
        let row = self.row_at(r)?;
        let sigma = theta * self.theta0 / self.wall_angle(r);
        Ok(self.sample_row(&row, sigma))
    }

    fn sample_row(&self, row: &[State], sigma: f64) -> FlowState {
        let mut st = [0.0; 5];
        let mut col = vec![0.0; row.len()];
        for (c, v) in st.iter_mut().enumerate() {
            for (x, s) in col.iter_mut().zip(row) {
                *x = s[c];
            }
            *v = cubic_uniform(&col, 0.0, self.d_sigma(), sigma);
        }
        to_flow(&st)
    }

    /// Angles and Lagrangian ordinates `y2 = sqrt(r^2 int_0^theta rho U1 sin)`
    /// along the row at radius `r`.
    pub fn streamfunction_row(&self, r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let row = self.row_at(r)?;
        Ok(self.streamfunction_of(&row, r))
    }

    fn streamfunction_of(&self, row: &[State], r: f64) -> (Vec<f64>, Vec<f64>) {
        let scale = self.wall_angle(r) / self.theta0;
        let thetas: Vec<f64> = (0..row.len()).map(|j| self.sigma(j) * scale).collect();
        let integrand: Vec<f64> = row
            .iter()
            .zip(&thetas)
            .map(|(s, th)| {
                let rho = self.gas.density_unchecked(s[P], s[S]);
                rho * s[U1] * sin(*th) * scale
            })
            .collect();
        let cum = cumulative_simpson(&integrand, self.d_sigma());
        let y2 = cum.iter().map(|v| sqrt((r * r * v).max(0.0))).collect();
        (thetas, y2)
    }

    /// Angle and state at Lagrangian coordinates `(y1, y2)`.
    pub fn evaluate_at_lagrangian(&self, y1: f64, y2: f64) -> Result<(f64, FlowState)> {
        let row = self.row_at(y1)?;
        let (_, ys) = self.streamfunction_of(&row, y1);
        let top = *ys.last().unwrap_or(&0.0);
        if !(y2 >= 0.0 && y2 <= top * (1.0 + 1e-6)) {
            return Err(Error::OutOfChart(format!("y2 = {y2} outside [0, {top}] at y1 = {y1}")));
        }
        let n = ys.len();
        let k = locate(&ys, y2).saturating_sub(1).min(n - 4);
        let xs = [ys[k], ys[k + 1], ys[k + 2], ys[k + 3]];
        let ss = [self.sigma(k), self.sigma(k + 1), self.sigma(k + 2), self.sigma(k + 3)];
        let sigma = lagrange4_nonuniform(&xs, &ss, y2);
        let theta = sigma * self.wall_angle(y1) / self.theta0;
        Ok((theta, self.sample_row(&row, sigma)))
    }

    /// Unperturbed supersonic background at radius `r`.
    pub fn base_state(&self, r: f64) -> Result<State> {
        let inv = &self.invariants;
        let b = solve_radial_state(&self.gas, r, inv.m, inv.b, inv.s, Branch::Supersonic)?;
        Ok([b.u1, 0.0, 0.0, b.p, b.s])
    }

    /// Largest deviation of any component from the radial background.
    pub fn deviation_from_background(&self, bg: &BackgroundSolution) -> Result<f64> {
        let mut dev: f64 = 0.0;
        for (i, r) in self.radii.iter().enumerate() {
            let b = background_state(bg, *r)?;
            for st in self.row(i) {
                for c in 0..5 {
                    dev = dev.max((st[c] - b[c]).abs());
                }
            }
        }
        Ok(dev)
    }

    /// Radial Mach number `U1 / c` on the whole field.
    pub fn min_radial_mach(&self) -> f64 {
        self.data
            .iter()
            .map(|s| s[U1] / sqrt(self.gas.gamma * s[P] / self.gas.density_unchecked(s[P], s[S])))
            .fold(f64::INFINITY, f64::min)
    }
}

fn to_flow(s: &State) -> FlowState {
    FlowState::new(s[U1], s[U2], s[U3], s[P], s[S])
}

fn background_state(bg: &BackgroundSolution, r: f64) -> Result<State> {
    let b = bg.supersonic(r)?;
    Ok([b.u1, 0.0, 0.0, b.p, b.s])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Forward,
    Backward,
}

struct Marcher<'a> {
    gas: &'a GasConstants,
    theta0: f64,
    eps: f64,
    wall: &'a Profile,
    n: usize,
    ds: f64,
    treatment: WallTreatment,
}

impl Marcher<'_> {
    fn w(&self, r: f64) -> f64 {
        self.theta0 + self.eps * self.wall.value(r)
    }

    fn dw(&self, r: f64) -> f64 {
        self.eps * self.wall.derivative(r, 1)
    }

    /// Angular differences per component.
    fn differences(&self, row: &[State], sweep: Sweep) -> Vec<State> {
        let n = self.n;
        let h = self.ds;
        let mut d = vec![[0.0; 5]; n + 1];
        for c in 0..5 {
            let odd = c == U2;
            // axis: central difference with parity ghost
            d[0][c] = if odd { row[1][c] / h } else { 0.0 };
            for j in 1..n {
                d[j][c] = match sweep {
                    Sweep::Forward => (row[j + 1][c] - row[j][c]) / h,
                    Sweep::Backward => (row[j][c] - row[j - 1][c]) / h,
                };
            }
            d[n][c] = match self.treatment {
                WallTreatment::OneSided => (3.0 * row[n][c] - 4.0 * row[n - 1][c] + row[n - 2][c]) / (2.0 * h),
                WallTreatment::Reflection => {
                    if odd {
                        (-row[n - 1][c] - row[n - 1][c]) / (2.0 * h)
                    } else {
                        0.0
                    }
                }
            };
        }
        d
    }

    /// `d Phi / dr` at fixed `sigma`.
    fn rate(&self, r: f64, row: &[State], sweep: Sweep) -> Vec<State> {
        let g = self.gas;
        let w = self.w(r);
        let dw = self.dw(r);
        let dsig = self.differences(row, sweep);
        let jac = self.theta0 / w;
        let mut out = vec![[0.0; 5]; self.n + 1];
        for j in 0..=self.n {
            let sigma = j as f64 * self.ds;
            let theta = sigma * w / self.theta0;
            let st = &row[j];
            let (u1, u2, u3, p, s) = (st[U1], st[U2], st[U3], st[P], st[S]);
            let mut dt = [0.0; 5];
            for c in 0..5 {
                dt[c] = jac * dsig[j][c];
            }
            let rho = g.density_unchecked(p, s);
            let c2 = g.gamma * p / rho;
            let rho_s = -rho / (g.gamma * g.cv);
            let axis = j == 0;
            // cot(theta)-weighted terms with their axis limits
            let (u2cot, u3sq_cot, u3cot) = if axis {
                (dt[U2], 0.0, dt[U3])
            } else {
                let cot = 1.0 / tan(theta);
                (u2 * cot, u3 * u3 * cot, u3 * cot)
            };
            let ds_r = -(u2 / (r * u1)) * dt[S];
            let drho_t = dt[P] / c2 + rho_s * dt[S];
            let div_t = rho * dt[U2] + u2 * drho_t + rho * u2cot;
            let q1 = -2.0 * rho * u1 / r - u1 * rho_s * ds_r - div_t / r;
            let q2 = rho * (u2 * u2 + u3 * u3) / r - rho * u2 / r * dt[U1];
            let det = rho * (u1 * u1 - c2) / c2;
            let du1 = (q2 * u1 / c2 - q1) / det;
            let dp = (rho * u1 * q1 - rho * q2) / det;
            let du2 = -(u2 / (r * u1)) * dt[U2] - dt[P] / (r * rho * u1) - u2 / r + u3sq_cot / (r * u1);
            let du3 = -u3 / r - (u2 / (r * u1)) * (dt[U3] + u3cot);
            let mut rate = [du1, du2, du3, dp, ds_r];
            if axis {
                rate[U2] = 0.0;
                rate[U3] = 0.0;
            }
            let shear = sigma * dw / w;
            for c in 0..5 {
                out[j][c] = rate[c] + shear * dsig[j][c];
            }
        }
        out
    }

    fn apply_boundary(&self, r: f64, row: &mut [State]) {
        row[0][U2] = 0.0;
        row[0][U3] = 0.0;
        let n = self.n;
        row[n][U2] = match self.treatment {
            WallTreatment::OneSided => self.eps * r * self.wall.derivative(r, 1) * row[n][U1],
            WallTreatment::Reflection => 0.0,
        };
    }

    /// One MacCormack step from `r` to `r + dr`.
    fn step(&self, r: f64, dr: f64, row: &[State], first: Sweep, boundary: bool) -> Vec<State> {
        let second = if first == Sweep::Forward { Sweep::Backward } else { Sweep::Forward };
        let k1 = self.rate(r, row, first);
        let mut pred: Vec<State> = row
            .iter()
            .zip(&k1)
            .map(|(s, k)| core::array::from_fn(|c| s[c] + dr * k[c]))
            .collect();
        if boundary {
            self.apply_boundary(r + dr, &mut pred);
        }
        let k2 = self.rate(r + dr, &pred, second);
        let mut out: Vec<State> = row
            .iter()
            .zip(&pred)
            .zip(&k2)
            .map(|((s, p), k)| core::array::from_fn(|c| 0.5 * (s[c] + p[c] + dr * k[c])))
            .collect();
        if boundary {
            self.apply_boundary(r + dr, &mut out);
        }
        out
    }

    /// Largest `|d sigma / dr|` over the characteristic families.
    fn max_slope(&self, r: f64, row: &[State]) -> f64 {
        let w = self.w(r);
        let dw = self.dw(r);
        let mut m: f64 = 0.0;
        for (j, st) in row.iter().enumerate() {
            let (u1, u2) = (st[U1], st[U2]);
            let rho = self.gas.density_unchecked(st[P], st[S]);
            let c2 = self.gas.gamma * st[P] / rho;
            let disc = sqrt((u1 * u1 + u2 * u2 - c2).max(0.0) * c2);
            let denom = r * (u1 * u1 - c2);
            let sigma = j as f64 * self.ds;
            for lam in [(u1 * u2 + disc) / denom, (u1 * u2 - disc) / denom, u2 / (r * u1)] {
                m = m.max((self.theta0 / w * lam - sigma * dw / w).abs());
            }
        }
        m
    }

    fn check_mach(&self, r: f64, row: &[State], margin: f64) -> Result<()> {
        let w = self.w(r);
        for (j, st) in row.iter().enumerate() {
            let finite = st.iter().all(|v| v.is_finite());
            let rho = self.gas.density_unchecked(st[P], st[S]);
            let c = sqrt(self.gas.gamma * st[P] / rho);
            let mach = st[U1] / c;
            if !finite || !(st[P] > 0.0) || !(mach >= 1.0 + margin) {
                return Err(Error::SupersonicBreakdown {
                    r,
                    theta: j as f64 * self.ds * w / self.theta0,
                    mach,
                });
            }
        }
        Ok(())
    }
}

/// Marches the perturbed supersonic flow from `r1` to `r2`.
pub fn march(pert: &InletPerturbation, bg: &BackgroundSolution, opts: &MarchOptions) -> Result<SupersonicField> {
    let n = opts.n_sigma;
    if n < 4 {
        return Err(Error::Invalid(format!("need at least 4 angular intervals (got {n})")));
    }
    if !(pert.epsilon >= 0.0) {
        return Err(Error::Invalid(format!("epsilon must be non-negative (got {})", pert.epsilon)));
    }
    if opts.wall == WallTreatment::Reflection && !pert.wall.is_zero() && pert.epsilon != 0.0 {
        return Err(Error::Invalid(String::from("reflection wall treatment needs a straight wall")));
    }
    let nz = &bg.nozzle;
    let mr = Marcher {
        gas: &bg.gas,
        theta0: nz.theta0,
        eps: pert.epsilon,
        wall: &pert.wall,
        n,
        ds: nz.theta0 / n as f64,
        treatment: opts.wall,
    };
    let mut row: Vec<State> = (0..=n)
        .map(|j| {
            let st = pert.inlet_state(bg, j as f64 * mr.ds);
            [st.u1, st.u2, st.u3, st.p, st.s]
        })
        .collect();
    mr.apply_boundary(nz.r1, &mut row);
    mr.check_mach(nz.r1, &row, opts.mach_margin)?;

    let span = nz.r2 - nz.r1;
    let dr_cap = span / opts.min_steps.max(1) as f64;
    let mut radii = vec![nz.r1];
    let mut data = row.clone();
    let mut base = vec![background_state(bg, nz.r1)?];
    let mut r = nz.r1;
    let mut sweep = Sweep::Forward;
    while r < nz.r2 {
        let slope = mr.max_slope(r, &row);
        let mut dr = if slope > 0.0 { opts.cfl * mr.ds / slope } else { dr_cap };
        dr = dr.min(dr_cap);
        if !(dr > 1e-12 * span) {
            return Err(Error::StepSize { r });
        }
        if r + dr > nz.r2 - 1e-9 * dr {
            dr = nz.r2 - r;
        }
        let b0 = background_state(bg, r)?;
        let b1 = background_state(bg, r + dr)?;
        let brow = vec![b0; n + 1];
        let sp = mr.step(r, dr, &row, sweep, true);
        let sb = mr.step(r, dr, &brow, sweep, false);
        let mut next: Vec<State> = sp
            .iter()
            .zip(&sb)
            .map(|(a, b)| core::array::from_fn(|c| b1[c] + a[c] - b[c]))
            .collect();
        r = if r + dr >= nz.r2 - 1e-9 * dr { nz.r2 } else { r + dr };
        mr.apply_boundary(r, &mut next);
        mr.check_mach(r, &next, opts.mach_margin)?;
        radii.push(r);
        base.push(if r == nz.r2 { background_state(bg, r)? } else { b1 });
        data.extend_from_slice(&next);
        row = next;
        sweep = if sweep == Sweep::Forward { Sweep::Backward } else { Sweep::Forward };
    }
    if radii.len() < 4 {
        return Err(Error::StepSize { r });
    }
    Ok(SupersonicField {
        gas: bg.gas,
        theta0: nz.theta0,
        r1: nz.r1,
        r2: nz.r2,
        epsilon: pert.epsilon,
        wall: pert.wall.clone(),
        radii,
        n_sigma: n,
        data,
        base,
        invariants: Invariants { m: bg.m, b: bg.b, s: bg.s_minus },
    })
}
