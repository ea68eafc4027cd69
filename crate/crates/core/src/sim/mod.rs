//! Periodic 1D solver for the closed fluid system in normal variables,
//! with a self-consistent electric field (`q = m = 1`), and a cold
//! multi-stream kinetic reference.
//!
//! The field convention is `phi'' = -(rho - n0)`, `E = -phi'`, zero-mean
//! gauge, so `phi` is the functional derivative of the field energy.

mod grid;
mod model;
mod run;
mod solver;
mod state;

pub use grid::{Derivative, FieldSolution, Grid, Operators, NEUTRALITY_TOL};
pub use model::FluidModel;
pub use run::{
    oscillation_frequency, relative_drift, run_fluid, run_streams, Drifts, RunOptions, RunOutput,
    BREAKING_SLOPE,
};
pub use solver::{DiagnosticRecord, FluidSolver, Scheme, StreamRecord, StreamSolver, RHO_MIN};
pub use state::{fluid_from_streams, streams_from_fluid, Field, FieldState, Perturbation, StreamState};

use thiserror::Error;

use crate::closures::ClosureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("neutrality violated: mean density {mean} but n0 = {n0}")]
    Neutrality { mean: f64, n0: f64 },
    #[error("density {value:e} at grid point {index} is not positive")]
    Positivity { index: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("time step {0} must be positive and finite")]
    TimeStep(f64),
    #[error("wave breaking in stream {stream} at t = {t}: dv/dx = {slope:e}")]
    WaveBreaking { t: f64, stream: usize, slope: f64 },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Closure(#[from] ClosureError),
}
