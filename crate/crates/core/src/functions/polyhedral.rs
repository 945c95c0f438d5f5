use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::plq::{PlqCell, PlqFunction};
use crate::error::{Error, Result};
use crate::numerics::linalg::{dist_sq, dot, sub, zeros, Matrix, Vector};
use crate::numerics::Rational;
use crate::polyhedra::{project_out, GenCone, Polyhedron, Projector};

/// A value in `R ∪ {+∞}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtValue {
    Finite(Rational),
    PosInf,
}

impl ExtValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtValue::Finite(v) => Some(v),
            ExtValue::PosInf => None,
        }
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::Finite(v) => write!(f, "{v}"),
            ExtValue::PosInf => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vector,
    pub b: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Halfspace {
    pub c: Vector,
    pub d: Rational,
}

/// `f(x) = max_i ⟨aᵢ, x⟩ + bᵢ` on `{x : ⟨cⱼ, x⟩ ≤ dⱼ}`, `+∞` elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolyhedralFunction {
    pub pieces: Vec<AffinePiece>,
    #[serde(default)]
    pub constraints: Vec<Halfspace>,
}

#[derive(Deserialize)]
struct PolyhedralJson {
    pieces: Vec<AffinePiece>,
    #[serde(default)]
    constraints: Vec<Halfspace>,
}

impl<'de> Deserialize<'de> for PolyhedralFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyhedralJson::deserialize(d)?;
        PolyhedralFunction::new(raw.pieces, raw.constraints).map_err(serde::de::Error::custom)
    }
}

impl PolyhedralFunction {
    pub fn new(pieces: Vec<AffinePiece>, constraints: Vec<Halfspace>) -> Result<Self> {
        let n = pieces
            .first()
            .map(|p| p.a.len())
            .ok_or_else(|| Error::InvalidFunction("a polyhedral function needs at least one piece".into()))?;
        if pieces.iter().any(|p| p.a.len() != n) || constraints.iter().any(|c| c.c.len() != n) {
            return Err(Error::DimensionMismatch("pieces and constraints must share one dimension".into()));
        }
        Ok(PolyhedralFunction { pieces, constraints })
    }

    /// Builds from `(a, b)` pairs and `(c, d)` pairs.
    pub fn from_parts(pieces: Vec<(Vector, Rational)>, constraints: Vec<(Vector, Rational)>) -> Result<Self> {
        PolyhedralFunction::new(
            pieces.into_iter().map(|(a, b)| AffinePiece { a, b }).collect(),
            constraints.into_iter().map(|(c, d)| Halfspace { c, d }).collect(),
        )
    }

    /// `|x|` on the line.
    pub fn abs() -> Self {
        Self::from_parts(
            vec![(vec![Rational::one()], Rational::zero()), (vec![Rational::from_int(-1)], Rational::zero())],
            vec![],
        )
        .unwrap()
    }

    /// `max(x₁, …, xₙ)`.
    pub fn max_coordinate(n: usize) -> Self {
        let pieces = (0..n)
            .map(|i| {
                let mut a = zeros(n);
                a[i] = Rational::one();
                (a, Rational::zero())
            })
            .collect();
        Self::from_parts(pieces, vec![]).unwrap()
    }

    /// `Σ |xᵢ|` as a max over sign patterns.
    pub fn l1_norm(n: usize) -> Self {
        let pieces = (0..1usize << n)
            .map(|mask| {
                let a = (0..n).map(|i| Rational::from_int(if mask >> i & 1 == 1 { -1 } else { 1 })).collect();
                (a, Rational::zero())
            })
            .collect();
        Self::from_parts(pieces, vec![]).unwrap()
    }

    /// A linear function.
    pub fn linear(a: Vector) -> Self {
        Self::from_parts(vec![(a, Rational::zero())], vec![]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].a.len()
    }

    fn check(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("point of length {} for a function on R^{}", x.len(), self.dim())));
        }
        Ok(())
    }

    pub fn in_domain(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|h| dot(&h.c, x) <= h.d)
    }

    pub fn domain(&self) -> Polyhedron {
        let a: Matrix = self.constraints.iter().map(|h| h.c.clone()).collect();
        let b: Vector = self.constraints.iter().map(|h| h.d.clone()).collect();
        Polyhedron::with_dim(self.dim(), a, b).unwrap()
    }

    fn piece_values(&self, x: &[Rational]) -> Vec<Rational> {
        self.pieces.iter().map(|p| &dot(&p.a, x) + &p.b).collect()
    }

    pub fn value(&self, x: &[Rational]) -> Result<ExtValue> {
        self.check(x)?;
        if !self.in_domain(x) {
            return Ok(ExtValue::PosInf);
        }
        Ok(ExtValue::Finite(self.piece_values(x).into_iter().max().unwrap()))
    }

    /// Finite value or `PointNotInDomain`.
    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        match self.value(x)? {
            ExtValue::Finite(v) => Ok(v),
            ExtValue::PosInf => Err(Error::PointNotInDomain),
        }
    }

    /// `(I(x), J(x))`: attaining pieces and active constraints.
    pub fn active_sets(&self, x: &[Rational]) -> Result<(Vec<usize>, Vec<usize>)> {
        self.check(x)?;
        if !self.in_domain(x) {
            return Err(Error::PointNotInDomain);
        }
        let vals = self.piece_values(x);
        let top = vals.iter().max().unwrap().clone();
        let i = (0..vals.len()).filter(|&k| vals[k] == top).collect();
        let j = (0..self.constraints.len()).filter(|&k| dot(&self.constraints[k].c, x) == self.constraints[k].d).collect();
        Ok((i, j))
    }

    pub fn subdifferential_of(&self, i: &[usize], j: &[usize]) -> GenCone {
        GenCone::new(
            self.dim(),
            i.iter().map(|&k| self.pieces[k].a.clone()).collect(),
            j.iter().map(|&k| self.constraints[k].c.clone()).collect(),
        )
    }

    /// `∂f(x) = conv{aᵢ : i ∈ I(x)} + cone{cⱼ : j ∈ J(x)}`.
    pub fn subdifferential(&self, x: &[Rational]) -> Result<GenCone> {
        let (i, j) = self.active_sets(x)?;
        Ok(self.subdifferential_of(&i, &j))
    }

    /// `∂^∞f(x) = cone{cⱼ : j ∈ J(x)}`, cross-checked against the normal cone
    /// of the epigraph.
    pub fn horizon_subdifferential(&self, x: &[Rational]) -> Result<GenCone> {
        let (_, j) = self.active_sets(x)?;
        let formula = GenCone::rays(self.dim(), j.iter().map(|&k| self.constraints[k].c.clone()).collect());
        let oracle = self.horizon_from_epigraph(x)?;
        if !formula.to_polyhedron()?.same_set(&oracle)? {
            return Err(Error::OracleMismatch("horizon subdifferential disagrees with the epigraph".into()));
        }
        Ok(formula)
    }

    /// `{v : (v, 0) ∈ N_epi f(x, f(x))}` as an inequality system.
    pub fn horizon_from_epigraph(&self, x: &[Rational]) -> Result<Polyhedron> {
        let n = self.dim();
        let fx = self.eval(x)?;
        let epi = self.epigraph();
        let mut pt = x.to_vec();
        pt.push(fx);
        let mut h = epi.normal_cone(&pt)?.to_polyhedron()?;
        let mut last = zeros(n + 1);
        last[n] = Rational::one();
        h.push_row(last.clone(), Rational::zero());
        h.push_row(last.iter().map(|v| -v).collect(), Rational::zero());
        project_out(&h, n)
    }

    /// Rows `(aᵢ, -1)·(x, r) ≤ -bᵢ` then `(cⱼ, 0)·(x, r) ≤ dⱼ`.
    pub fn epigraph(&self) -> Polyhedron {
        let n = self.dim();
        let mut p = Polyhedron::universe(n + 1);
        for pc in &self.pieces {
            let mut row = pc.a.clone();
            row.push(Rational::from_int(-1));
            p.push_row(row, -&pc.b);
        }
        for h in &self.constraints {
            let mut row = h.c.clone();
            row.push(Rational::zero());
            p.push_row(row, h.d.clone());
        }
        p
    }

    /// `{x ∈ dom f : supp_λ ⊆ I(x), supp_μ ⊆ J(x)}`.
    pub fn face_region(&self, supp_lambda: &[usize], supp_mu: &[usize]) -> Polyhedron {
        let mut p = self.domain();
        for &i in supp_lambda {
            for (k, pk) in self.pieces.iter().enumerate() {
                if k != i {
                    p.push_row(sub(&pk.a, &self.pieces[i].a), &self.pieces[i].b - &pk.b);
                }
            }
        }
        for &j in supp_mu {
            let h = &self.constraints[j];
            p.push_row(h.c.iter().map(|v| -v).collect(), -&h.d);
        }
        p
    }

    /// The region where piece `i` attains the max, inside the domain.
    pub fn piece_region(&self, i: usize) -> Polyhedron {
        self.face_region(&[i], &[])
    }

    /// Same function written with one quadratic-free cell per piece.
    pub fn to_plq(&self) -> Result<PlqFunction> {
        let n = self.dim();
        let mut cells = Vec::new();
        for (i, pc) in self.pieces.iter().enumerate() {
            let region = self.piece_region(i);
            if region.is_empty()? {
                continue;
            }
            cells.push(PlqCell {
                cell: region,
                p: vec![zeros(n); n],
                q: pc.a.clone(),
                r: pc.b.clone(),
            });
        }
        PlqFunction::new(cells, true)
    }
}

/// Inequality descriptions of `∂f(x)` keyed by `(I(x), J(x))`, with
/// projectors for exact distances.
type ActivePair = (Vec<usize>, Vec<usize>);

pub struct SubdifferentialCache {
    f: PolyhedralFunction,
    projectors: RefCell<HashMap<ActivePair, Rc<Projector>>>,
}

impl SubdifferentialCache {
    pub fn new(f: PolyhedralFunction) -> Self {
        SubdifferentialCache { f, projectors: RefCell::new(HashMap::new()) }
    }

    pub fn function(&self) -> &PolyhedralFunction {
        &self.f
    }

    fn projector(&self, key: (Vec<usize>, Vec<usize>)) -> Result<Rc<Projector>> {
        if let Some(p) = self.projectors.borrow().get(&key) {
            return Ok(p.clone());
        }
        let h = self.f.subdifferential_of(&key.0, &key.1).to_polyhedron()?;
        let p = Rc::new(Projector::new(h)?);
        self.projectors.borrow_mut().insert(key, p.clone());
        Ok(p)
    }

    pub fn contains(&self, x: &[Rational], v: &[Rational]) -> Result<bool> {
        let key = self.f.active_sets(x)?;
        Ok(self.projector(key)?.polyhedron().contains(v))
    }

    pub fn distance_sq(&self, x: &[Rational], v: &[Rational]) -> Result<Rational> {
        let key = self.f.active_sets(x)?;
        let w = self.projector(key)?.project(v)?;
        Ok(dist_sq(&w, v))
    }

    /// Nearest subgradient to `v` at `x`.
    pub fn nearest(&self, x: &[Rational], v: &[Rational]) -> Result<Vector> {
        let key = self.f.active_sets(x)?;
        self.projector(key)?.project(v)
    }
}
