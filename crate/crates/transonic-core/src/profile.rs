//! Smooth one-dimensional data profiles with analytic derivatives.

use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::{cos, sin};

/// A smooth scalar profile.
///
/// `Poly` is `sum c_k (x - origin)^k`; `Cos` is `sum a_k cos(k pi x / L)`
/// for `k = 0, 1, ...`; `Sin` is `sum b_k sin(k pi x / L)` for `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Profile {
    #[default]
    Zero,
    Poly { origin: f64, coeffs: Vec<f64> },
    Cos { period: f64, coeffs: Vec<f64> },
    Sin { period: f64, coeffs: Vec<f64> },
}

impl Profile {
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Derivative of the given order (0 is the value).
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Poly { origin, coeffs } => {
                let t = x - origin;
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().rev() {
                    let k = k as u32;
                    if k < order {
                        continue;
                    }
                    let mut fall = 1.0;
                    for j in 0..order {
                        fall *= (k - j) as f64;
                    }
                    let mut pw = 1.0;
                    for _ in 0..(k - order) {
                        pw *= t;
                    }
                    acc += c * fall * pw;
                }
                acc
            }
            Profile::Cos { period, coeffs } => {
                let mut acc = 0.0;
                for (k, a) in coeffs.iter().enumerate() {
                    let w = k as f64 * PI / period;
                    acc += a * trig_derivative(w, x, order, true);
                }
                acc
            }
            Profile::Sin { period, coeffs } => {
                let mut acc = 0.0;
                for (k, b) in coeffs.iter().enumerate() {
                    let w = (k + 1) as f64 * PI / period;
                    acc += b * trig_derivative(w, x, order, false);
                }
                acc
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Poly { coeffs, .. } | Profile::Cos { coeffs, .. } | Profile::Sin { coeffs, .. } => {
                coeffs.iter().all(|c| *c == 0.0)
            }
        }
    }
}

fn trig_derivative(w: f64, x: f64, order: u32, cosine: bool) -> f64 {
    let mut scale = 1.0;
    for _ in 0..order {
        scale *= w;
    }
    // d^n cos = cos(x + n pi/2), d^n sin = sin(x + n pi/2)
    let phase = w * x + order as f64 * PI / 2.0;
    if order > 0 && w == 0.0 {
        return 0.0;
    }
    scale * if cosine { cos(phase) } else { sin(phase) }
}
