use serde::{Deserialize, Serialize};

use super::elimination::project_out;
use super::polyhedron::Polyhedron;
use crate::error::{Error, Result};
use crate::numerics::Rational;

/// A set-valued map `Rⁿ ⇉ Rᵐ` whose graph is a finite union of polyhedra in
/// `Rⁿ⁺ᵐ` (coordinates `x` then `v`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolyhedralMap {
    pub n: usize,
    pub m: usize,
    pub pieces: Vec<Polyhedron>,
}

impl PiecewisePolyhedralMap {
    pub fn new(n: usize, m: usize, pieces: Vec<Polyhedron>) -> Result<Self> {
        if let Some(p) = pieces.iter().find(|p| p.dim() != n + m) {
            return Err(Error::DimensionMismatch(format!("piece in R^{} for a map R^{n} -> R^{m}", p.dim())));
        }
        Ok(PiecewisePolyhedralMap { n, m, pieces })
    }

    fn joined(&self, x: &[Rational], v: &[Rational]) -> Result<Vec<Rational>> {
        if x.len() != self.n || v.len() != self.m {
            return Err(Error::DimensionMismatch("pair does not match the map".into()));
        }
        Ok(x.iter().chain(v).cloned().collect())
    }

    /// Indices of the pieces whose graph contains `(x, v)`.
    pub fn pieces_at(&self, x: &[Rational], v: &[Rational]) -> Result<Vec<usize>> {
        let p = self.joined(x, v)?;
        Ok((0..self.pieces.len()).filter(|&i| self.pieces[i].contains(&p)).collect())
    }

    pub fn contains_pair(&self, x: &[Rational], v: &[Rational]) -> Result<bool> {
        Ok(!self.pieces_at(x, v)?.is_empty())
    }
}

/// `⋃ π(Vᵢ)` over the pieces containing `(x̄, v̄)`, where `π` drops `v`.
pub fn ppm_minimal_identifiable(g: &PiecewisePolyhedralMap, xbar: &[Rational], vbar: &[Rational]) -> Result<Vec<Polyhedron>> {
    let idx = g.pieces_at(xbar, vbar)?;
    if idx.is_empty() {
        return Err(Error::PairNotInGraph);
    }
    idx.iter().map(|&i| project_out(&g.pieces[i], g.n)).collect()
}
