//! Shared fixtures for unit tests.

use alloc::vec;
use core::f64::consts::PI;

use crate::background::{BackgroundSolution, Nozzle};
use crate::gas::{FlowState, GasConstants};
use crate::profile::Profile;
use crate::supersonic::InletPerturbation;

pub fn default_bg() -> BackgroundSolution {
    let g = GasConstants::air();
    let inlet = FlowState::radial(2.0, 1.0 / 1.4, 0.0);
    let nz = Nozzle::new(1.0, 2.0, PI / 6.0).unwrap();
    BackgroundSolution::with_shock(&g, &inlet, &nz, 1.5).unwrap()
}

pub fn default_pert(eps: f64, t0: f64, wall: bool) -> InletPerturbation {
    InletPerturbation {
        epsilon: eps,
        u1p: Profile::Cos { period: t0, coeffs: vec![0.0, 1.0] },
        u2p: Profile::Sin { period: t0, coeffs: vec![0.3] },
        u3p: Profile::Cos { period: t0, coeffs: vec![1.0, 0.0, -1.0] },
        pp: Profile::Cos { period: t0, coeffs: vec![0.0, 1.0] },
        sp: Profile::Cos { period: t0, coeffs: vec![0.0, 1.0] },
        wall: if wall { Profile::Poly { origin: 1.0, coeffs: vec![0.0, 0.0, 0.0, 1.0] } } else { Profile::Zero },
    }
}
