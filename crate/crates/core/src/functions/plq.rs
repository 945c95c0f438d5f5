use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use super::polyhedral::ExtValue;
use crate::error::{Error, Result};
use crate::numerics::linalg::{dist_sq, dot, independent_rows, is_psd, mat_vec, null_space, rank, solve_linear, sub, Matrix, Vector};
use crate::numerics::{LpStatus, Rational};
use crate::polyhedra::{faces_enumerate, GenCone, Polyhedron};

/// `½xᵀPx + qᵀx + r` on a polyhedral cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlqCell {
    pub cell: Polyhedron,
    pub p: Matrix,
    pub q: Vector,
    pub r: Rational,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    #[serde(rename = "A")]
    a: Matrix,
    b: Vector,
    #[serde(rename = "P")]
    p: Matrix,
    q: Vector,
    r: Rational,
}

impl Serialize for PlqCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CellJson { a: self.cell.a().clone(), b: self.cell.b().clone(), p: self.p.clone(), q: self.q.clone(), r: self.r.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlqCell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CellJson::deserialize(d)?;
        let cell = Polyhedron::with_dim(raw.q.len(), raw.a, raw.b).map_err(serde::de::Error::custom)?;
        Ok(PlqCell { cell, p: raw.p, q: raw.q, r: raw.r })
    }
}

impl PlqCell {
    pub fn eval(&self, x: &[Rational]) -> Rational {
        let px = mat_vec(&self.p, x);
        &(&(&dot(x, &px) * &Rational::new(1, 2)) + &dot(&self.q, x)) + &self.r
    }

    pub fn gradient(&self, x: &[Rational]) -> Vector {
        mat_vec(&self.p, x).iter().zip(&self.q).map(|(a, b)| a + b).collect()
    }
}

/// A piecewise linear-quadratic function. Values agree on shared boundaries;
/// a `convex` flag is only accepted after certification.
#[derive(Debug, Clone, Serialize)]
pub struct PlqFunction {
    pub cells: Vec<PlqCell>,
    pub convex: bool,
    #[serde(skip)]
    faces: OnceCell<Vec<Vec<(Matrix, Vector)>>>,
}

#[derive(Deserialize)]
struct PlqJson {
    cells: Vec<PlqCell>,
    #[serde(default)]
    convex: bool,
}

impl<'de> Deserialize<'de> for PlqFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PlqJson::deserialize(d)?;
        PlqFunction::new(raw.cells, raw.convex).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for PlqFunction {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells && self.convex == other.convex
    }
}

/// The quadratic `x ↦ ½xᵀPx + qᵀx + r` restricted to an affine set
/// `x0 + span(N)` vanishes identically.
fn vanishes_on(p: &Matrix, q: &Vector, r: &Rational, x0: &[Rational], basis: &Matrix) -> bool {
    let cell = PlqCell { cell: Polyhedron::universe(x0.len()), p: p.clone(), q: q.clone(), r: r.clone() };
    if !cell.eval(x0).is_zero() {
        return false;
    }
    let g = cell.gradient(x0);
    basis.iter().all(|u| dot(&g, u).is_zero() && basis.iter().all(|w| dot(u, &mat_vec(p, w)).is_zero()))
}

impl PlqFunction {
    pub fn new(cells: Vec<PlqCell>, convex: bool) -> Result<PlqFunction> {
        let n = cells
            .first()
            .map(|c| c.q.len())
            .ok_or_else(|| Error::InvalidFunction("a PLQ function needs at least one cell".into()))?;
        for c in &cells {
            if c.cell.dim() != n || c.q.len() != n || c.p.len() != n || c.p.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch("PLQ cell dimensions disagree".into()));
            }
            if (0..n).any(|i| (0..n).any(|j| c.p[i][j] != c.p[j][i])) {
                return Err(Error::InvalidFunction("cell matrix P must be symmetric".into()));
            }
        }
        let f = PlqFunction { cells, convex, faces: OnceCell::new() };
        f.check_boundaries()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.cells[0].q.len()
    }

    /// `f + ½xᵀPx + qᵀx`; stays convex when `f` is and `P ⪰ 0`.
    pub fn plus_quadratic(&self, p: &Matrix, q: &Vector) -> Result<PlqFunction> {
        let n = self.dim();
        if p.len() != n || q.len() != n || p.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("quadratic term does not match the function".into()));
        }
        let cells = self
            .cells
            .iter()
            .map(|c| PlqCell {
                cell: c.cell.clone(),
                p: c.p.iter().zip(p).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
                q: c.q.iter().zip(q).map(|(x, y)| x + y).collect(),
                r: c.r.clone(),
            })
            .collect();
        PlqFunction::new(cells, self.convex && is_psd(p))
    }

    /// Continuity on every overlap; when convexity is claimed also positive
    /// semidefinite cells and nonnegative gradient jumps across shared facets.
    fn check_boundaries(&self) -> Result<()> {
        let n = self.dim();
        if self.convex && !self.cells.iter().all(|c| is_psd(&c.p)) {
            return Err(Error::NotConvex);
        }
        for i in 0..self.cells.len() {
            for j in i + 1..self.cells.len() {
                let (c1, c2) = (&self.cells[i], &self.cells[j]);
                let s = c1.cell.intersect(&c2.cell);
                let Some((tight, x0)) = crate::polyhedra::faces::closure(&s, &[])? else {
                    continue;
                };
                let eqs: Matrix = tight.iter().map(|&k| s.row(k).clone()).collect();
                let basis = null_space(&eqs, n);
                let dp: Matrix = c2.p.iter().zip(&c1.p).map(|(a, b)| sub(a, b)).collect();
                let dq = sub(&c2.q, &c1.q);
                let dr = &c2.r - &c1.r;
                if !vanishes_on(&dp, &dq, &dr, &x0, &basis) {
                    return Err(Error::InvalidFunction(format!("cells {i} and {j} disagree on their overlap")));
                }
                if !self.convex || rank(&eqs, n) != 1 {
                    continue;
                }
                // shared facet: the jump of the gradient must point out of cell i
                let Some(&k) = tight.iter().find(|&&k| k < c1.cell.rows()) else {
                    continue;
                };
                let a = c1.cell.row(k).clone();
                let beta = c1.cell.b()[k].clone();
                let opposite = c2.cell.lp().minimize(a.clone()).solve()?;
                if opposite.status != LpStatus::Optimal || opposite.value.as_ref().unwrap() < &beta {
                    continue;
                }
                // t(x) = ⟨a, ΔP x + Δq⟩, minimized over the facet
                let slope: Vector = (0..n).map(|c| dp.iter().zip(&a).map(|(row, ai)| &row[c] * ai).sum()).collect();
                let off = dot(&a, &dq);
                let sol = s.lp().minimize(slope).solve()?;
                match sol.status {
                    LpStatus::Optimal if !(&sol.value.unwrap() + &off).is_negative() => {}
                    _ => return Err(Error::NotConvex),
                }
            }
        }
        Ok(())
    }

    pub fn cells_at(&self, x: &[Rational]) -> Vec<usize> {
        (0..self.cells.len()).filter(|&k| self.cells[k].cell.contains(x)).collect()
    }

    pub fn in_domain(&self, x: &[Rational]) -> bool {
        self.cells.iter().any(|c| c.cell.contains(x))
    }

    pub fn value(&self, x: &[Rational]) -> Result<ExtValue> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch("point does not match the function".into()));
        }
        Ok(match self.cells.iter().find(|c| c.cell.contains(x)) {
            Some(c) => ExtValue::Finite(c.eval(x)),
            None => ExtValue::PosInf,
        })
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        match self.value(x)? {
            ExtValue::Finite(v) => Ok(v),
            ExtValue::PosInf => Err(Error::PointNotInDomain),
        }
    }

    /// Generators of `N_dom(x) = ⋂ N_C(x)` over the cells containing `x`.
    fn domain_normal_generators(&self, cells: &[usize], x: &[Rational]) -> Result<Vec<Vector>> {
        let n = self.dim();
        let cones: Vec<GenCone> = cells.iter().map(|&k| self.cells[k].cell.normal_cone(x)).collect::<Result<_>>()?;
        if cones.len() == 1 {
            return Ok(cones[0].ray_gens.clone());
        }
        let mut tangent_gens = Vec::new();
        for c in &cones {
            tangent_gens.extend(c.polar_generators()?);
        }
        GenCone::rays(n, tangent_gens).polar_generators()
    }

    /// `conv{∇f_C(x) : x ∈ C} + N_dom(x)`, valid for convex functions.
    pub fn subdifferential(&self, x: &[Rational]) -> Result<GenCone> {
        if !self.convex {
            return Err(Error::Unsupported("subdifferential of a nonconvex PLQ function".into()));
        }
        let cells = self.cells_at(x);
        if cells.is_empty() {
            return Err(Error::PointNotInDomain);
        }
        let mut grads: Vec<Vector> = Vec::new();
        for &k in &cells {
            let g = self.cells[k].gradient(x);
            if !grads.contains(&g) {
                grads.push(g);
            }
        }
        let rays = self.domain_normal_generators(&cells, x)?;
        Ok(GenCone::new(self.dim(), grads, rays))
    }

    fn cell_faces(&self) -> Result<&Vec<Vec<(Matrix, Vector)>>> {
        if self.faces.get().is_none() {
            let n = self.dim();
            let mut all = Vec::new();
            for c in &self.cells {
                let mut per = Vec::new();
                for f in faces_enumerate(&c.cell)? {
                    let rows: Matrix = f.tight.iter().map(|&i| c.cell.row(i).clone()).collect();
                    let idx = independent_rows(&rows, n);
                    let b: Matrix = idx.iter().map(|&i| rows[i].clone()).collect();
                    let rhs: Vector = idx.iter().map(|&i| c.cell.b()[f.tight[i]].clone()).collect();
                    per.push((b, rhs));
                }
                all.push(per);
            }
            let _ = self.faces.set(all);
        }
        Ok(self.faces.get().unwrap())
    }

    /// `argmin_y f(y) + |y - z|²/(2λ)` for convex `f`: every face of every
    /// cell contributes the minimizer of that cell's objective over the face's
    /// affine hull; the best feasible candidate is the answer.
    pub fn prox(&self, lambda: &Rational, z: &[Rational]) -> Result<Vector> {
        if !self.convex {
            return Err(Error::Unsupported("prox of a nonconvex PLQ function".into()));
        }
        if !lambda.is_positive() {
            return Err(Error::InvalidFunction("prox parameter must be positive".into()));
        }
        let n = self.dim();
        if z.len() != n {
            return Err(Error::DimensionMismatch("prox point does not match the function".into()));
        }
        let inv = lambda.recip();
        let faces = self.cell_faces()?;
        let mut best: Option<(Rational, Vector)> = None;
        for (c, per) in self.cells.iter().zip(faces) {
            for (b, rhs) in per {
                let k = b.len();
                // [H Bᵀ; B 0] [y; μ] = [z/λ - q; rhs]
                let mut sys: Matrix = Vec::with_capacity(n + k);
                let mut right: Vector = Vec::with_capacity(n + k);
                for i in 0..n {
                    let mut row: Vector = c.p[i].clone();
                    row[i] = &row[i] + &inv;
                    row.extend(b.iter().map(|br| br[i].clone()));
                    sys.push(row);
                    right.push(&(&z[i] * &inv) - &c.q[i]);
                }
                for (br, ri) in b.iter().zip(rhs) {
                    let mut row = br.clone();
                    row.extend(std::iter::repeat_n(Rational::zero(), k));
                    sys.push(row);
                    right.push(ri.clone());
                }
                let Some(sol) = solve_linear(&sys, &right, n + k)?.solution else {
                    continue;
                };
                let y = sol[..n].to_vec();
                if !c.cell.contains(&y) {
                    continue;
                }
                let obj = &c.eval(&y) + &(&dist_sq(&y, z) * &(&inv * &Rational::new(1, 2)));
                if best.as_ref().is_none_or(|(bo, _)| &obj < bo) {
                    best = Some((obj, y));
                }
            }
        }
        best.map(|(_, y)| y).ok_or(Error::PointNotInDomain)
    }
}
