//! Exact nonreflecting boundary kernels for circular and spherical artificial
//! boundaries, their O(1)-per-step temporal convolution, an exact exterior
//! solution used as an oracle, and a Legendre spectral-Galerkin / Newmark
//! solver for the truncated modal wave equation.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: modified Bessel functions and the complex zeros of `K_n`, `K_{n+1/2}`.
//! - [`kernel`]: the boundary kernels `sigma` and `omega` as pole sums plus a branch-cut rule.
//! - [`convolution`]: recursive exponential convolution.
//! - [`oracle`]: the exact modal solution of the wave-maker problem and residual metrics.
//! - [`solver`]: spectral-Galerkin assembly and Newmark time marching.
//! - [`golden`]: published reference values.
//! - [`talbot`]: numerical Laplace inversion, used for cross-validation only.

pub mod convolution;
pub mod error;
pub mod exec;
pub mod golden;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod specfun;
pub mod talbot;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
