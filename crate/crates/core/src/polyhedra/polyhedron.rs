use serde::{Deserialize, Serialize};

use super::cone::GenCone;
use crate::error::{Error, Result};
use crate::numerics::linalg::{dot, rank, Matrix, Vector};
use crate::numerics::simplex::{LinearProgram, LpStatus, Relation};
use crate::numerics::Rational;

/// `{x ∈ Rⁿ : A x ≤ b}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polyhedron {
    n: usize,
    a: Matrix,
    b: Vector,
}

#[derive(Serialize, Deserialize)]
struct PolyhedronJson {
    #[serde(rename = "A")]
    a: Matrix,
    b: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl Serialize for Polyhedron {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyhedronJson {
            a: self.a.clone(),
            b: self.b.clone(),
            n: self.a.is_empty().then_some(self.n),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polyhedron {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyhedronJson::deserialize(d)?;
        let n = match (raw.a.first(), raw.n) {
            (Some(r), _) => r.len(),
            (None, Some(n)) => n,
            (None, None) => return Err(serde::de::Error::custom("polyhedron without rows needs \"n\"")),
        };
        Polyhedron::with_dim(n, raw.a, raw.b).map_err(serde::de::Error::custom)
    }
}

impl Polyhedron {
    pub fn new(a: Matrix, b: Vector) -> Result<Polyhedron> {
        let n = a
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::DimensionMismatch("use with_dim for a polyhedron without rows".into()))?;
        Polyhedron::with_dim(n, a, b)
    }

    pub fn with_dim(n: usize, a: Matrix, b: Vector) -> Result<Polyhedron> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("{} rows but {} right-hand sides", a.len(), b.len())));
        }
        if let Some(r) = a.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("row of length {} in R^{n}", r.len())));
        }
        Ok(Polyhedron { n, a, b })
    }

    /// The whole space.
    pub fn universe(n: usize) -> Polyhedron {
        Polyhedron { n, a: Vec::new(), b: Vec::new() }
    }

    /// A canonical empty set, `0·x ≤ -1`.
    pub fn empty(n: usize) -> Polyhedron {
        Polyhedron { n, a: vec![vec![Rational::zero(); n]], b: vec![Rational::from_int(-1)] }
    }

    /// The nonnegative orthant.
    pub fn orthant(n: usize) -> Polyhedron {
        let a = (0..n)
            .map(|i| {
                let mut r = vec![Rational::zero(); n];
                r[i] = Rational::from_int(-1);
                r
            })
            .collect();
        Polyhedron { n, a, b: vec![Rational::zero(); n] }
    }

    /// `[lo, hi]ⁿ`
    pub fn cube(n: usize, lo: Rational, hi: Rational) -> Polyhedron {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            let mut r = vec![Rational::zero(); n];
            r[i] = Rational::one();
            a.push(r.clone());
            b.push(hi.clone());
            r[i] = Rational::from_int(-1);
            a.push(r);
            b.push(-&lo);
        }
        Polyhedron { n, a, b }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn row(&self, i: usize) -> &Vector {
        &self.a[i]
    }

    pub fn check_point(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!("point of length {} in R^{}", x.len(), self.n)));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.a.iter().zip(&self.b).all(|(r, bi)| &dot(r, x) <= bi)
    }

    pub fn slacks(&self, x: &[Rational]) -> Vector {
        self.a.iter().zip(&self.b).map(|(r, bi)| bi - &dot(r, x)).collect()
    }

    /// `I(x)`; errors when `x ∉ Q`.
    pub fn active_set(&self, x: &[Rational]) -> Result<Vec<usize>> {
        self.check_point(x)?;
        let mut out = Vec::new();
        for (i, s) in self.slacks(x).iter().enumerate() {
            if s.is_negative() {
                return Err(Error::PointNotInSet);
            }
            if s.is_zero() {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// `T_Q(x) = {w : aᵢ·w ≤ 0, i ∈ I(x)}`.
    pub fn tangent_cone(&self, x: &[Rational]) -> Result<Polyhedron> {
        let act = self.active_set(x)?;
        Ok(self.cone_of_rows(&act))
    }

    /// `{w : aᵢ·w ≤ 0, i ∈ idx}`.
    pub fn cone_of_rows(&self, idx: &[usize]) -> Polyhedron {
        Polyhedron {
            n: self.n,
            a: idx.iter().map(|&i| self.a[i].clone()).collect(),
            b: vec![Rational::zero(); idx.len()],
        }
    }

    /// `N_Q(x) = cone{aᵢ : i ∈ I(x)}`.
    pub fn normal_cone(&self, x: &[Rational]) -> Result<GenCone> {
        let act = self.active_set(x)?;
        Ok(self.normal_cone_of(&act))
    }

    pub fn normal_cone_of(&self, idx: &[usize]) -> GenCone {
        GenCone::rays(self.n, idx.iter().map(|&i| self.a[i].clone()).collect())
    }

    /// The same set with rows `idx` turned into equalities.
    pub fn with_equalities(&self, idx: &[usize]) -> Polyhedron {
        let mut out = self.clone();
        for &i in idx {
            out.a.push(self.a[i].iter().map(|v| -v).collect());
            out.b.push(-&self.b[i]);
        }
        out
    }

    /// Intersection with another polyhedron in the same space.
    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        let mut out = self.clone();
        out.a.extend(other.a.iter().cloned());
        out.b.extend(other.b.iter().cloned());
        out
    }

    pub fn push_row(&mut self, a: Vector, b: Rational) {
        assert_eq!(a.len(), self.n);
        self.a.push(a);
        self.b.push(b);
    }

    pub(crate) fn lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.n);
        for (r, bi) in self.a.iter().zip(&self.b) {
            lp.row(r.clone(), Relation::Le, bi.clone());
        }
        lp
    }

    pub fn feasible_point(&self) -> Result<Option<Vector>> {
        let sol = self.lp().solve()?;
        Ok(sol.x)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.feasible_point()?.is_none())
    }

    /// `sup {⟨c, x⟩ : x ∈ Q}`; `None` when unbounded, error when empty.
    pub fn support(&self, c: &[Rational]) -> Result<Option<Rational>> {
        let sol = self.lp().maximize(c.to_vec()).solve()?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.value),
            LpStatus::Unbounded => Ok(None),
            LpStatus::Infeasible => Err(Error::EmptyPolyhedron),
        }
    }

    /// `Q ⊇ other`, decided row by row with one LP each.
    pub fn contains_polyhedron(&self, other: &Polyhedron) -> Result<bool> {
        if other.is_empty()? {
            return Ok(true);
        }
        for (r, bi) in self.a.iter().zip(&self.b) {
            match other.support(r)? {
                Some(v) if &v <= bi => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Set equality, not representation equality.
    pub fn same_set(&self, other: &Polyhedron) -> Result<bool> {
        Ok(self.contains_polyhedron(other)? && other.contains_polyhedron(self)?)
    }

    /// Dimension of the affine hull, `-1` for the empty set.
    pub fn affine_dim(&self) -> Result<isize> {
        match super::faces::closure(self, &[])? {
            None => Ok(-1),
            Some((tight, _)) => {
                let rows: Matrix = tight.iter().map(|&i| self.a[i].clone()).collect();
                Ok((self.n - rank(&rows, self.n)) as isize)
            }
        }
    }

    /// Rows that hold with equality on the whole set.
    pub fn implied_equalities(&self) -> Result<Vec<usize>> {
        super::faces::closure(self, &[])?
            .map(|(t, _)| t)
            .ok_or(Error::EmptyPolyhedron)
    }
}
