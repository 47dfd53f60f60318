//! Open-boundary ASEP: exact kinetic Monte Carlo for the microscopic particle
//! system, Godunov and viscous finite-volume solvers for its macroscopic
//! density equations, and the entropy/boundary-trace machinery that connects
//! the two.

pub mod config;
pub mod entropy;
pub mod model;
pub mod pde;
pub mod sim;
pub mod traces;

pub use model::{mesoscopic_k, Grid, ModelParams, Profile, RateSchedule, RngStream};
pub use pde::{BoundaryData, DensityField};
pub use sim::{LatticeState, Snapshot};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("CFL condition violated: dt = {dt} exceeds {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("reducible chain: {0}")]
    ReducibleChain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
