//! Event-driven simulation of CSMA-based wireless link scheduling.
//!
//! The crate provides the classical CSMA dynamics on interference graphs,
//! the unlocking (U-CSMA) policy in ideal and fully distributed busy-tone
//! variants, queue and delay accounting, utility-maximizing congestion
//! control, cluster-geometry analytics for grid topologies, and a mean-field
//! ODE validator for the active-link density.

pub mod engine;
pub mod error;
pub mod graph;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{InterferenceGraph, LinkId};

/// Scalar used by the simulation kernel and the default instantiations of
/// the generic numerics.
pub type Scalar = f64;
