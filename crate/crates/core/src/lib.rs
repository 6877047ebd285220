//! Planck-cell resolved out-of-time-order correlators.
//!
//! The crate builds orthonormal bases with one state per phase-space cell of
//! area `2πħ`, the macroscopic operators `Q̂`, `P̂` that are diagonal in them,
//! three model systems (kicked rotor on the torus, the two-mode LMG model and
//! an inverted oscillator between hard walls), their classical limits, and
//! the cell-resolved OTOC
//!
//! ```text
//! C(t, x) = -<x| [A(t), B]^2 |x>
//! ```
//!
//! together with its thermal averages, the quantum spreading function and the
//! second-order expansion in it.
//!
//! The crate is `no_std` compatible (it needs `alloc`). The default `std`
//! feature only enables faer's runtime SIMD dispatch, which makes the dense
//! kernels roughly an order of magnitude faster.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod classical;
mod error;
pub mod models;
pub mod numerics;
pub mod observables;
pub mod otoc;
pub mod planck;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, C64};
