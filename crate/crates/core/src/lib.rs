//! Spectral solvers for the nonlocal nonlinear Schrodinger equation
//!
//! ```text
//! i u_t - lambda u_xx = zeta D^beta(|u|^{2 sigma} u)
//! ```
//!
//! on a periodic interval, where `D^beta` multiplies Fourier coefficients by `|k|^beta`.
//! The crate computes standing and boosted waves by Petviashvili iteration, evolves
//! data with a split-step Fourier scheme, and runs the stability and semiclassical
//! experiments built on those two pieces.

pub mod error;
pub mod io;
pub mod model;
pub mod petviashvili;
pub mod semiclassical;
pub mod spectral;
pub mod stability;
pub mod timestepper;

pub use error::{Error, Result};
pub use model::{
    classify_global, critical_sigma, gn_check, pohozaev_residuals, Classification, Functionals,
    InvariantSnapshot, ModelParams, PohozaevResiduals, Regime, WaveParams,
};
pub use petviashvili::{
    exact_profile_beta0, solve_boosted, solve_standing_wave, ConvergenceTrace, InitialGuess,
    ProfileRecord, SolveOptions,
};
pub use spectral::{ComplexField, Grid, SpectralField};
pub use timestepper::{evolve, EvolutionResult, Outcome, Scheme, StepConfig};
