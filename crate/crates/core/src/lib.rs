//! Time-fractional diffusion on an L1-type Caputo grid.

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod fracderiv;
pub mod kernelapprox;
pub mod timestepper;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
