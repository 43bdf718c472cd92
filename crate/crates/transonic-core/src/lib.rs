//! Steady transonic shocks in axisymmetric Euler flow with swirl through a
//! divergent conic nozzle.
//!
//! The pipeline is: a spherically symmetric background shock
//! ([`background`]), a marched perturbed supersonic field ([`supersonic`]),
//! a streamline-straightening chart ([`lagrangian`]), the jump machinery on
//! the shock ([`shock_rh`]) and the free-boundary fixed-point iteration in
//! the subsonic region ([`subsonic`]).
//!
//! The crate is `no_std` with `alloc`; all I/O lives in the companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod background;
pub mod error;
pub mod gas;
pub mod lagrangian;
pub mod numerics;
pub mod profile;
pub mod shock_rh;
pub mod subsonic;
pub mod supersonic;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
