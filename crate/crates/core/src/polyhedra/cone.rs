use serde::{Deserialize, Serialize};

use super::elimination::project_out;
use super::polyhedron::Polyhedron;
use crate::error::{Error, Result};
use crate::numerics::linalg::{zeros, Vector};
use crate::numerics::simplex::{LinearProgram, Relation};
use crate::numerics::Rational;

/// `conv(conv_gens) + cone(ray_gens)`. With no convex generators the set is
/// the cone itself (the origin is implied).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenCone {
    pub dim: usize,
    #[serde(rename = "conv")]
    pub conv_gens: Vec<Vector>,
    #[serde(rename = "rays")]
    pub ray_gens: Vec<Vector>,
}

impl GenCone {
    pub fn rays(dim: usize, ray_gens: Vec<Vector>) -> GenCone {
        GenCone { dim, conv_gens: Vec::new(), ray_gens }
    }

    pub fn new(dim: usize, conv_gens: Vec<Vector>, ray_gens: Vec<Vector>) -> GenCone {
        GenCone { dim, conv_gens, ray_gens }
    }

    fn check(&self, v: &[Rational]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("vector of length {} for a set in R^{}", v.len(), self.dim)));
        }
        Ok(())
    }

    /// Variables `λ` (convex weights) then `μ` (ray weights), all nonnegative,
    /// with `Σλ = 1` when there are convex generators.
    fn representation_lp(&self, v: &[Rational], extra: usize) -> LinearProgram {
        let k = self.conv_gens.len();
        let r = self.ray_gens.len();
        let nv = k + r + extra;
        let mut lp = LinearProgram::new(nv).nonneg(0..k + r);
        for d in 0..self.dim {
            let mut row = zeros(nv);
            for (i, g) in self.conv_gens.iter().enumerate() {
                row[i] = g[d].clone();
            }
            for (j, g) in self.ray_gens.iter().enumerate() {
                row[k + j] = g[d].clone();
            }
            lp.row(row, Relation::Eq, v[d].clone());
        }
        if k > 0 {
            let mut row = zeros(nv);
            for x in row.iter_mut().take(k) {
                *x = Rational::one();
            }
            lp.row(row, Relation::Eq, Rational::one());
        }
        lp
    }

    pub fn contains(&self, v: &[Rational]) -> Result<bool> {
        self.check(v)?;
        if self.conv_gens.is_empty() && self.ray_gens.is_empty() {
            return Ok(v.iter().all(|x| x.is_zero()));
        }
        Ok(self.representation_lp(v, 0).solve()?.is_optimal())
    }

    /// Coefficients `(λ, μ)` of one representation of `v`, if any.
    pub fn representation(&self, v: &[Rational]) -> Result<Option<Vector>> {
        self.check(v)?;
        if self.conv_gens.is_empty() && self.ray_gens.is_empty() {
            return Ok(v.iter().all(|x| x.is_zero()).then(Vec::new));
        }
        Ok(self.representation_lp(v, 0).solve()?.x)
    }

    /// Membership in the relative interior: some representation has every
    /// coefficient strictly positive.
    pub fn ri_contains(&self, v: &[Rational]) -> Result<bool> {
        self.check(v)?;
        let k = self.conv_gens.len() + self.ray_gens.len();
        if k == 0 {
            return Ok(v.iter().all(|x| x.is_zero()));
        }
        let mut lp = self.representation_lp(v, 1);
        for i in 0..k {
            let mut row = zeros(k + 1);
            row[i] = Rational::one();
            row[k] = Rational::from_int(-1);
            lp.row(row, Relation::Ge, Rational::zero());
        }
        let mut obj = zeros(k + 1);
        obj[k] = Rational::one();
        lp.row(obj.clone(), Relation::Le, Rational::one());
        let sol = lp.maximize(obj).solve()?;
        Ok(sol.value.is_some_and(|t| t.is_positive()))
    }

    /// Inequality description by Fourier–Motzkin elimination of the
    /// generator weights.
    pub fn to_polyhedron(&self) -> Result<Polyhedron> {
        let n = self.dim;
        let k = self.conv_gens.len();
        let r = self.ray_gens.len();
        let nv = n + k + r;
        let mut p = Polyhedron::universe(nv);
        for d in 0..n {
            let mut row = zeros(nv);
            row[d] = Rational::one();
            for (i, g) in self.conv_gens.iter().chain(&self.ray_gens).enumerate() {
                row[n + i] = -&g[d];
            }
            let negrow: Vector = row.iter().map(|x| -x).collect();
            p.push_row(row, Rational::zero());
            p.push_row(negrow, Rational::zero());
        }
        for i in 0..k + r {
            let mut row = zeros(nv);
            row[n + i] = Rational::from_int(-1);
            p.push_row(row, Rational::zero());
        }
        if k > 0 {
            let mut row = zeros(nv);
            for x in row.iter_mut().skip(n).take(k) {
                *x = Rational::one();
            }
            let negrow: Vector = row.iter().map(|x| -x).collect();
            p.push_row(row, Rational::one());
            p.push_row(negrow, Rational::from_int(-1));
        }
        project_out(&p, n)
    }

    /// Generators of the polar cone `{w : ⟨w, g⟩ ≤ 0 for every ray g}`.
    /// Only meaningful when there are no convex generators.
    pub fn polar_generators(&self) -> Result<Vec<Vector>> {
        let h = GenCone::rays(self.dim, self.ray_gens.clone()).to_polyhedron()?;
        Ok(h.a().clone())
    }
}
