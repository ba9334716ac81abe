//! Slepian spectral filtering for complex-valued linear dynamical systems
//! whose transition spectrum lies in the sector `{|z| <= 1, |arg z| <= beta}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense symmetric eigensolver, regularized Hermitian solves
//!   and the seeded random streams every experiment draws from.
//! * [`infomatrix`]: the information matrix `Z_W(beta)`, its Hankel and
//!   Toeplitz factors, a quadrature oracle and the effective dimension `k*`.
//! * [`filters`]: Slepian and Fourier filter banks and history projection.
//! * [`learners`]: the forward (VAW) online forecaster, batch ridge regression
//!   and loss/regret bookkeeping.
//! * [`systems`]: sector-constrained LTI generators, the unitary Liouvillian
//!   construction and the shift-register hard instance.
//! * [`experiments`]: the reproducible experiment drivers behind the CLI.

pub mod error;
pub mod experiments;
pub mod filters;
pub mod infomatrix;
pub mod learners;
pub mod numerics;
pub mod systems;

pub use error::{Error, Result};
