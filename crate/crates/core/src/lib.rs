//! Identifiability toolkit: exact computation and sampled verification of
//! identifiable sets, critical cones and growth conditions for polyhedral sets,
//! polyhedral and piecewise linear-quadratic functions.

pub mod error;
pub mod numerics;
pub mod polyhedra;
pub mod functions;
pub mod identify;
pub mod algorithms;
pub mod critcone;
pub mod manifold;
pub mod optimality;
pub mod sampling;

pub use error::{Error, Result};
