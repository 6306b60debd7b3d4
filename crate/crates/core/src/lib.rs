//! Numerics for the gamma subordinator and its inverse: special functions,
//! densities, moments, Sonine kernels, convolution-type non-local operators,
//! Laplace-transform verification and Monte Carlo oracles.

pub mod error;
pub mod quad;
pub mod gamma_sub;
pub mod inv_gamma;
pub mod specfun;
pub mod nonlocal_ops;
pub mod montecarlo;
pub mod laplace_check;

pub use error::{Error, Result};
pub use quad::{QuadSpec, SeriesSpec};
pub use gamma_sub::GammaParams;
