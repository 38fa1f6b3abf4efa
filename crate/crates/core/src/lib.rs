//! Numerical laboratory for the imaginary-time semigroups of magnetic
//! relativistic Schrödinger operators: dense oracles, Chernoff product
//! approximants and path-integral Monte Carlo.

pub mod chernoff;
pub mod error;
pub mod grid;
pub mod levy;
pub mod linalg;
pub mod montecarlo;
pub mod oracle;
pub mod potential;
pub mod properties;
pub mod propagators;
pub mod special;

pub use error::{Error, Result};
pub use grid::{make_grid, Field, GridSpec};
pub use potential::{GaugeFunction, PotentialSpec, Prescription, ScalarPotential, VectorPotential};
