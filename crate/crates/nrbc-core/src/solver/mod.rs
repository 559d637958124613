//! Legendre spectral-Galerkin discretisation in `r` and Newmark integration in
//! `t` for one mode of the truncated exterior problem, coupled to the
//! nonreflecting boundary kernel through the recursive convolution.

pub mod galerkin;
pub mod modal;
pub mod newmark;
pub mod wavemaker;

pub use galerkin::{assemble, basis_values, beta, lift, Geometry, SpectralOperator};
pub use modal::{
    discrete_norms, energy_growth, exponential_boundary, newmark_init, newmark_init_with_kernel, solve_mode, step_of, BoundaryData,
    Forcing, ModalProblem, ModalSolution, ModalStepper, Profile, Snapshot,
};
pub use newmark::{Coupling, LinearSystem, NewmarkParams, NewmarkState};
pub use wavemaker::{solve_modes, wave_maker_errors, ErrorRow, ModeResult, WaveMakerRun};
