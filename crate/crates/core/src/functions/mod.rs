//! Polyhedral, piecewise linear-quadratic and composite functions.

pub mod composite;
pub mod plq;
pub mod polyhedral;
pub mod prox;
pub mod smooth;

pub use composite::CompositeFunction;
pub use plq::{PlqCell, PlqFunction};
pub use polyhedral::{AffinePiece, ExtValue, Halfspace, PolyhedralFunction, SubdifferentialCache};
pub use prox::PolyhedralProx;
pub use smooth::{PolyMap, Polynomial, Term};
