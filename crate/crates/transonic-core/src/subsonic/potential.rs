//! The potential problem for `Upsilon* = phi + mu`:
//!
//! `d1(a1 d1 U) + a2 (1/s) ds(s d1(s)^2 ds U) + a3(z1) U(0, s) = f`
//!
//! with a Robin condition at the shock, Neumann data at the exit, zero flux
//! on the axis and Neumann data on the wall. The angular operator does not
//! depend on `z1`, so it is diagonalized once; each angular mode is then a
//! tridiagonal problem in `z1` plus the rank-one trace coupling, which
//! Sherman-Morrison removes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use super::coefficients::{FixedDomain, LinearOperatorCoefficients};
use crate::numerics::{solve_tridiagonal, symmetric_tridiagonal_eigen};
use crate::{Error, Result};

/// Right-hand side and boundary data, all on the grid of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialData {
    /// Interior source at `(z1_i, s_j)`, indexed by [`FixedDomain::idx`].
    pub rhs: Vec<f64>,
    /// Robin data `dU/dz1 + a4 U = g` at `z1 = 0`, per cell.
    pub robin: Vec<f64>,
    /// Neumann data `dU/dz1 = g` at `z1 = N`, per cell.
    pub exit: Vec<f64>,
    /// Wall data `dU/ds = g` at `s = M`, per vertex.
    pub wall: Vec<f64>,
}

impl PotentialData {
    pub fn zeros(dom: &FixedDomain) -> Self {
        Self { rhs: vec![0.0; dom.len()], robin: vec![0.0; dom.n2], exit: vec![0.0; dom.n2], wall: vec![0.0; dom.n1 + 1] }
    }
}

/// Diagnostics of one potential solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub min_pivot: f64,
    /// Smallest `|1 + e0^T T^{-1} a3|` over the modes.
    pub min_coupling: f64,
    /// Largest diagonal magnitude over smallest pivot, over the modes.
    pub condition_estimate: f64,
    /// Relative residual of the discrete equations after the solve.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSolution {
    pub upsilon: Vec<f64>,
    /// `mu = Upsilon*(0, M)`, so that `phi = Upsilon* - mu` vanishes there.
    pub mu: f64,
    pub phi: Vec<f64>,
    pub stats: SolveStats,
}

/// Quadratic through the last two cells with slope `beta` at the face:
/// returns (value at the face, slope at the last cell centre).
pub fn wall_fit(v_last: f64, v_prev: f64, beta: f64, h: f64) -> (f64, f64) {
    let diff = v_last - v_prev;
    ((9.0 * v_last - v_prev + 3.0 * h * beta) / 8.0, 0.5 * beta + diff / (2.0 * h))
}

/// Factorized operator for a fixed set of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOperator {
    pub domain: FixedDomain,
    a1_half: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    a4: f64,
    /// Angular operator: sub/super diagonals and diagonal.
    ang_lower: Vec<f64>,
    ang_diag: Vec<f64>,
    ang_upper: Vec<f64>,
    /// Eigenvalues and orthonormal eigenvectors of the symmetrized angular
    /// operator, and the similarity weights `sqrt(s_j)`.
    eig: Vec<f64>,
    modes: Vec<f64>,
    weight: Vec<f64>,
    /// Per mode: `T^{-1} a3` and `1 + (T^{-1} a3)_0`.
    coupling: Vec<Vec<f64>>,
    coupling_den: Vec<f64>,
    stats: SolveStats,
}

impl PotentialOperator {
    pub fn new(c: &LinearOperatorCoefficients) -> Result<Self> {
        Self::from_parts(&c.domain, c.a1_half.clone(), c.a2.clone(), c.a3.clone(), c.a4)
    }

    /// `a1_half[i]` is `a1` at `z1 = (i - 1/2) h1` for `i = 0..=n1+1`;
    /// `a2`, `a3` are on the vertices.
    pub fn from_parts(dom: &FixedDomain, a1_half: Vec<f64>, a2: Vec<f64>, a3: Vec<f64>, a4: f64) -> Result<Self> {
        let (n1, n2) = (dom.n1, dom.n2);
        if a1_half.len() != n1 + 2 || a2.len() != n1 + 1 || a3.len() != n1 + 1 {
            return Err(Error::Invalid(format!(
                "coefficient lengths {}, {}, {} do not match grid {n1}x{n2}",
                a1_half.len(),
                a2.len(),
                a3.len()
            )));
        }
        let h = dom.h2();
        let mut lower = vec![0.0; n2];
        let mut diag = vec![0.0; n2];
        let mut upper = vec![0.0; n2];
        for j in 0..n2 {
            let s = dom.z2(j);
            let sm = j as f64 * h;
            let sp = sm + h;
            let west = if j == 0 { 0.0 } else { sm * dom.d1_sq(sm) / (s * h * h) };
            // the wall flux is data
            let east = if j + 1 == n2 { 0.0 } else { sp * dom.d1_sq(sp) / (s * h * h) };
            lower[j] = west;
            upper[j] = east;
            diag[j] = -(west + east);
        }
        // symmetrize with weights sqrt(s_j)
        let weight: Vec<f64> = (0..n2).map(|j| sqrt(dom.z2(j))).collect();
        let off: Vec<f64> = (0..n2)
            .map(|j| if j + 1 < n2 { weight[j] * upper[j] / weight[j + 1] } else { 0.0 })
            .collect();
        let (eig, modes) = symmetric_tridiagonal_eigen(&diag, &off)?;
        let mut op = Self {
            domain: *dom,
            a1_half,
            a2,
            a3,
            a4,
            ang_lower: lower,
            ang_diag: diag,
            ang_upper: upper,
            eig,
            modes,
            weight,
            coupling: Vec::new(),
            coupling_den: Vec::new(),
            stats: SolveStats { min_pivot: f64::INFINITY, min_coupling: f64::INFINITY, ..Default::default() },
        };
        for k in 0..n2 {
            let (lo, di, up) = op.mode_matrix(k);
            let mut y = op.a3.clone();
            let piv = solve_tridiagonal(&lo, &di, &up, &mut y)?;
            let den = 1.0 + y[0];
            let dmax = di.iter().fold(0.0f64, |m, x| m.max(fabs(*x)));
            op.stats.min_pivot = op.stats.min_pivot.min(piv);
            op.stats.condition_estimate = op.stats.condition_estimate.max(dmax / piv);
            op.stats.min_coupling = op.stats.min_coupling.min(fabs(den));
            if !(fabs(den) > 1e-12) {
                return Err(Error::LinearSolve(format!("trace coupling singular in mode {k} (1 + y0 = {den})")));
            }
            op.coupling.push(y);
            op.coupling_den.push(den);
        }
        Ok(op)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    /// Tridiagonal `z1` matrix of angular mode `k` (without the trace
    /// coupling), with the Robin and Neumann ghosts eliminated.
    fn mode_matrix(&self, k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n1 = self.domain.n1;
        let h = self.domain.h1();
        let h2 = h * h;
        let mut lo = vec![0.0; n1 + 1];
        let mut di = vec![0.0; n1 + 1];
        let mut up = vec![0.0; n1 + 1];
        for i in 0..=n1 {
            let w = self.a1_half[i] / h2;
            let e = self.a1_half[i + 1] / h2;
            di[i] = -(w + e) + self.a2[i] * self.eig[k];
            if i == 0 {
                up[i] = w + e;
                di[i] += 2.0 * h * w * self.a4;
            } else if i == n1 {
                lo[i] = w + e;
            } else {
                lo[i] = w;
                up[i] = e;
            }
        }
        (lo, di, up)
    }

    /// Source with the boundary data folded in, on the grid.
    fn effective_rhs(&self, data: &PotentialData) -> Vec<f64> {
        let dom = &self.domain;
        let (n1, n2) = (dom.n1, dom.n2);
        let h1 = dom.h1();
        let h2 = dom.h2();
        let m = dom.flux;
        let s_last = dom.z2(n2 - 1);
        let wall_flux = m * dom.d1_sq(m) / (s_last * h2);
        let mut f = data.rhs.clone();
        for i in 0..=n1 {
            f[dom.idx(i, n2 - 1)] -= self.a2[i] * wall_flux * data.wall[i];
        }
        let w0 = self.a1_half[0] / (h1 * h1);
        let en = self.a1_half[n1 + 1] / (h1 * h1);
        for j in 0..n2 {
            f[dom.idx(0, j)] += 2.0 * h1 * w0 * data.robin[j];
            f[dom.idx(n1, j)] -= 2.0 * h1 * en * data.exit[j];
        }
        f
    }

    /// The discrete operator applied to a grid field (boundary data taken as
    /// zero); the solve inverts `apply(U) = effective source`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let dom = &self.domain;
        let (n1, n2) = (dom.n1, dom.n2);
        let h = dom.h1();
        let h2 = h * h;
        let mut out = vec![0.0; dom.len()];
        for i in 0..=n1 {
            let w = self.a1_half[i] / h2;
            let e = self.a1_half[i + 1] / h2;
            for j in 0..n2 {
                let c = u[dom.idx(i, j)];
                let z = if i == 0 {
                    (w + e) * (u[dom.idx(1, j)] - c) + 2.0 * h * w * self.a4 * c
                } else if i == n1 {
                    (w + e) * (u[dom.idx(n1 - 1, j)] - c)
                } else {
                    w * (u[dom.idx(i - 1, j)] - c) + e * (u[dom.idx(i + 1, j)] - c)
                };
                let mut ang = self.ang_diag[j] * c;
                if j > 0 {
                    ang += self.ang_lower[j] * u[dom.idx(i, j - 1)];
                }
                if j + 1 < n2 {
                    ang += self.ang_upper[j] * u[dom.idx(i, j + 1)];
                }
                out[dom.idx(i, j)] = z + self.a2[i] * ang + self.a3[i] * u[dom.idx(0, j)];
            }
        }
        out
    }

    pub fn solve(&self, data: &PotentialData) -> Result<PotentialSolution> {
        let dom = &self.domain;
        let (n1, n2) = (dom.n1, dom.n2);
        if data.rhs.len() != dom.len() || data.robin.len() != n2 || data.exit.len() != n2 || data.wall.len() != n1 + 1 {
            return Err(Error::Invalid("potential data does not match the grid".into()));
        }
        if let Some(x) = data.rhs.iter().chain(&data.robin).chain(&data.exit).chain(&data.wall).find(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite potential data {x}")));
        }
        let f = self.effective_rhs(data);
        // to modal coordinates: fhat_k(i) = sum_j Q_jk w_j f(i, j)
        let mut fhat = vec![0.0; (n1 + 1) * n2];
        for i in 0..=n1 {
            for k in 0..n2 {
                let mut acc = 0.0;
                for j in 0..n2 {
                    acc += self.modes[j * n2 + k] * self.weight[j] * f[dom.idx(i, j)];
                }
                fhat[k * (n1 + 1) + i] = acc;
            }
        }
        let mut stats = self.stats;
        for k in 0..n2 {
            let (lo, di, up) = self.mode_matrix(k);
            let x = &mut fhat[k * (n1 + 1)..(k + 1) * (n1 + 1)];
            let piv = solve_tridiagonal(&lo, &di, &up, x)?;
            stats.min_pivot = stats.min_pivot.min(piv);
            let y = &self.coupling[k];
            let t = x[0] / self.coupling_den[k];
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi -= yi * t;
            }
        }
        let mut upsilon = vec![0.0; dom.len()];
        for i in 0..=n1 {
            for j in 0..n2 {
                let mut acc = 0.0;
                for k in 0..n2 {
                    acc += self.modes[j * n2 + k] * fhat[k * (n1 + 1) + i];
                }
                upsilon[dom.idx(i, j)] = acc / self.weight[j];
            }
        }
        // re-substitution guards the assembly of the coupled rows
        let back = self.apply(&upsilon);
        let scale = f.iter().fold(0.0f64, |m, x| m.max(fabs(*x)));
        let res = back.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max(fabs(a - b)));
        stats.residual = if scale > 0.0 { res / scale } else { res };
        if !(stats.residual < 1e-8) {
            return Err(Error::LinearSolve(format!("assembly mismatch: relative residual {}", stats.residual)));
        }
        let h2 = dom.h2();
        let (mu, _) = wall_fit(upsilon[dom.idx(0, n2 - 1)], upsilon[dom.idx(0, n2 - 2)], data.wall[0], h2);
        let phi = upsilon.iter().map(|v| v - mu).collect();
        Ok(PotentialSolution { upsilon, mu, phi, stats })
    }
}

/// `W2`, `W4` on the grid and `W6(M)` recovered from the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub w2: Vec<f64>,
    pub w4: Vec<f64>,
    pub w6_m: f64,
}

/// `W2 = -(1/lambda1) d1 ds(phi)`,
/// `W4 = (dz1(phi) + lambda3 Upsilon*(0, s) - T1) / lambda2` and
/// `W6(M) = -a mu`, where `tail` is `T1 = int_s^M G1 / d1`.
pub fn recover_w2_w4(
    sol: &PotentialSolution,
    c: &LinearOperatorCoefficients,
    data: &PotentialData,
    tail: &[f64],
) -> Recovered {
    let dom = &c.domain;
    let (n1, n2) = (dom.n1, dom.n2);
    let (h1, h2) = (dom.h1(), dom.h2());
    let u = &sol.upsilon;
    let mut w2 = vec![0.0; dom.len()];
    let mut w4 = vec![0.0; dom.len()];
    for i in 0..=n1 {
        for j in 0..n2 {
            let ds = if j + 1 == n2 {
                wall_fit(u[dom.idx(i, j)], u[dom.idx(i, j - 1)], data.wall[i], h2).1
            } else {
                let left = if j == 0 { u[dom.idx(i, 0)] } else { u[dom.idx(i, j - 1)] };
                (u[dom.idx(i, j + 1)] - left) / (2.0 * h2)
            };
            w2[dom.idx(i, j)] = -dom.d1(dom.z2(j)) * ds / c.lambda1[i];
            let dz = if i == 0 {
                data.robin[j] - c.a4 * u[dom.idx(0, j)]
            } else if i == n1 {
                data.exit[j]
            } else {
                (u[dom.idx(i + 1, j)] - u[dom.idx(i - 1, j)]) / (2.0 * h1)
            };
            w4[dom.idx(i, j)] = (dz + c.lambda3[i] * u[dom.idx(0, j)] - tail[dom.idx(i, j)]) / c.lambda2[i];
        }
    }
    Recovered { w2, w4, w6_m: -c.jump.a * sol.mu }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::observed_order;
    use crate::shock_rh::linear_jump_coefficients;
    use crate::subsonic::coefficients::tabulate;
    use crate::test_support::default_bg;
    use core::f64::consts::PI;

    fn coeffs(n1: usize, n2: usize) -> LinearOperatorCoefficients {
        let bg = default_bg();
        let jc = linear_jump_coefficients(&bg, 1e-6).unwrap();
        let dom = FixedDomain::new(&bg, bg.total_flux(), n1, n2).unwrap();
        tabulate(&bg, &jc, &dom).unwrap()
    }

    /// Exact solution with its derivatives: (U, U_z, U_zz, U_s, U_ss).
    type Exact = fn(f64, f64, f64, f64) -> [f64; 5];

    fn manufactured(c: &LinearOperatorCoefficients, exact: Exact) -> (PotentialData, Vec<f64>) {
        let dom = &c.domain;
        let (nn, m) = (dom.length, dom.flux);
        let k = dom.kappa_b;
        let mut data = PotentialData::zeros(dom);
        let mut truth = vec![0.0; dom.len()];
        for i in 0..=dom.n1 {
            let z = dom.z1(i);
            for j in 0..dom.n2 {
                let s = dom.z2(j);
                let [v, vz, vzz, vs, vss] = exact(z, s, nn, m);
                let q = dom.d1_sq(s);
                let dq = -k * k * s / 2.0;
                let ang = q * vss + (q / s + dq) * vs;
                let trace = exact(0.0, s, nn, m)[0];
                data.rhs[dom.idx(i, j)] = c.a1_prime[i] * vz + c.a1[i] * vzz + c.a2[i] * ang + c.a3[i] * trace;
                truth[dom.idx(i, j)] = v;
            }
            data.wall[i] = exact(z, m, nn, m)[3];
        }
        for j in 0..dom.n2 {
            let s = dom.z2(j);
            let e0 = exact(0.0, s, nn, m);
            data.robin[j] = e0[1] + c.a4 * e0[0];
            data.exit[j] = exact(nn, s, nn, m)[1];
        }
        (data, truth)
    }

    fn bump(z: f64, s: f64, nn: f64, m: f64) -> [f64; 5] {
        let w = PI / nn;
        let (cz, sz) = (libm::cos(w * z), libm::sin(w * z));
        let g = s * s * (m - s) * (m - s);
        let gs = 2.0 * s * (m - s) * (m - s) - 2.0 * s * s * (m - s);
        let gss = 2.0 * (m - s) * (m - s) - 8.0 * s * (m - s) + 2.0 * s * s;
        [cz * g, -w * sz * g, -w * w * cz * g, cz * gs, cz * gss]
    }

    fn smooth(z: f64, s: f64, nn: f64, m: f64) -> [f64; 5] {
        let a = 1.0 + z / nn + 0.5 * (z / nn) * (z / nn);
        let az = 1.0 / nn + z / (nn * nn);
        let azz = 1.0 / (nn * nn);
        let b = 1.0 + libm::cos(PI * s / m);
        let bs = -PI / m * libm::sin(PI * s / m);
        let bss = -(PI / m) * (PI / m) * libm::cos(PI * s / m);
        [a * b, az * b, azz * b, a * bs, a * bss]
    }

    fn order_of(exact: Exact) -> (f64, Vec<f64>) {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let c = coeffs(n, n);
            let op = PotentialOperator::new(&c).unwrap();
            let (data, truth) = manufactured(&c, exact);
            let sol = op.solve(&data).unwrap();
            let err = sol.upsilon.iter().zip(&truth).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            hs.push(1.0 / n as f64);
            errs.push(err);
        }
        (observed_order(&hs, &errs), errs)
    }

    #[test]
    fn manufactured_bump_converges_at_second_order() {
        let (order, errs) = order_of(bump);
        assert!(order >= 1.8, "order {order}, errors {errs:?}");
    }

    #[test]
    fn manufactured_with_boundary_data_converges_at_second_order() {
        let (order, errs) = order_of(smooth);
        assert!(order >= 1.8, "order {order}, errors {errs:?}");
    }

    #[test]
    fn zero_data_gives_zero_potential() {
        let c = coeffs(16, 12);
        let op = PotentialOperator::new(&c).unwrap();
        let data = PotentialData::zeros(&c.domain);
        let sol = op.solve(&data).unwrap();
        assert!(sol.upsilon.iter().all(|v| *v == 0.0));
        assert_eq!(sol.mu, 0.0);
        let rec = recover_w2_w4(&sol, &c, &data, &vec![0.0; c.domain.len()]);
        assert!(rec.w2.iter().chain(&rec.w4).all(|v| *v == 0.0));
        assert_eq!(rec.w6_m, 0.0);
    }

    #[test]
    fn solve_inverts_apply() {
        let c = coeffs(24, 20);
        let op = PotentialOperator::new(&c).unwrap();
        let dom = c.domain;
        let field: Vec<f64> = (0..dom.len()).map(|k| libm::sin(0.37 * k as f64) + 0.1 * (k % 7) as f64).collect();
        let mut data = PotentialData::zeros(&dom);
        data.rhs = op.apply(&field);
        let sol = op.solve(&data).unwrap();
        for (a, b) in sol.upsilon.iter().zip(&field) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let st = sol.stats;
        assert!(st.min_pivot > 0.0 && st.condition_estimate.is_finite() && st.min_coupling > 0.0);
    }

    #[test]
    fn angular_spectrum_is_nonpositive_with_constant_mode() {
        let c = coeffs(8, 32);
        let op = PotentialOperator::new(&c).unwrap();
        let eig = op.eigenvalues();
        assert!(eig.iter().all(|e| *e <= 1e-9));
        assert!(eig.iter().any(|e| e.abs() < 1e-9));
    }

    #[test]
    fn recovered_fields_satisfy_the_first_equation() {
        // W2, W4 from a potential satisfy
        // dz1(lambda1 W2) + d1 ds(lambda2 W4) + lambda3 W2(0, s) = -d1 ds(T1) = G1;
        // central differences commute, so in the interior this holds to round-off
        for n in [16usize, 32, 64] {
            let c = coeffs(n, n);
            let dom = c.domain;
            let (data, truth) = manufactured(&c, smooth);
            let mu = {
                let m = dom.flux;
                smooth(0.0, m, dom.length, m)[0]
            };
            let sol = PotentialSolution {
                phi: truth.iter().map(|v| v - mu).collect(),
                upsilon: truth,
                mu,
                stats: SolveStats::default(),
            };
            let tail: Vec<f64> = (0..dom.len()).map(|k| {
                let s = dom.z2(k % dom.n2);
                0.1 * (dom.flux - s) * (dom.flux - s)
            }).collect();
            let rec = recover_w2_w4(&sol, &c, &data, &tail);
            let (h1, h2) = (dom.h1(), dom.h2());
            let mut worst: f64 = 0.0;
            for i in 1..dom.n1 {
                for j in 1..dom.n2 - 1 {
                    let s = dom.z2(j);
                    let a = (c.lambda1[i + 1] * rec.w2[dom.idx(i + 1, j)] - c.lambda1[i - 1] * rec.w2[dom.idx(i - 1, j)])
                        / (2.0 * h1);
                    let b = dom.d1(s) * c.lambda2[i] * (rec.w4[dom.idx(i, j + 1)] - rec.w4[dom.idx(i, j - 1)]) / (2.0 * h2);
                    let t = c.lambda3[i] * rec.w2[dom.idx(0, j)];
                    let source = dom.d1(s) * 0.2 * (dom.flux - s);
                    worst = worst.max((a + b + t - source).abs());
                }
            }
            assert!(worst < 1e-11, "n = {n}: residual {worst}");
        }
    }
}
