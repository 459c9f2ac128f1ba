//! Relaxation of near-planar Mullins-Sekerka interfaces.
//!
//! The crate provides a periodic spectral calculus, the two-phase field
//! solver for a graph interface, time integrators, and diagnostics that
//! monitor energy, dissipation and distance along a trajectory.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod geometry;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
