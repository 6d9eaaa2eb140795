//! Numerical building blocks for localized regularity arguments for the
//! three-dimensional incompressible Navier–Stokes equations: fields on a
//! periodic box, Lorentz norms, heat and Oseen kernels, Stokes operators,
//! cut-off localization, Picard iteration, exact exponent bookkeeping and
//! residual checks for test flows.

pub mod error;
pub mod fft;
pub mod flows;
pub mod grid;
pub mod io;
pub mod jet;
pub mod kernels;
pub mod ledger;
pub mod localization;
pub mod lorentz;
pub mod picard;
pub mod quadrature;
pub mod stokes;

pub use error::{Error, Result};
