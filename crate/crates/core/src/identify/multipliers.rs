use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::PolyhedralFunction;
use crate::numerics::linalg::{rank, solve_linear, zeros, Matrix, Vector};
use crate::numerics::simplex::Relation;
use crate::numerics::Rational;
use crate::polyhedra::Polyhedron;

/// Ceiling on the number of multiplier coordinates for vertex enumeration.
pub const VERTEX_COORD_BUDGET: usize = 16;

/// Multipliers `(λ, μ)` over the active generators that reproduce `v̄`.
///
/// Coordinates are `λ` for the active indices in `lambda_index`, then `μ` for
/// those in `mu_index`. For functions the `λ` sum to one; for sets there is no
/// normalization and every multiplier is a `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierSet {
    pub lambda_index: Vec<usize>,
    pub mu_index: Vec<usize>,
    /// Equality system `columns · w = rhs`, one column per coordinate.
    pub columns: Matrix,
    pub rhs: Vector,
    pub polytope: Polyhedron,
}

impl MultiplierSet {
    /// `Σ λₖ gₖ + Σ μₖ hₖ = target` with `λ, μ ≥ 0` and, when `normalized`,
    /// `Σ λ = 1`.
    pub fn build(
        lambda_index: Vec<usize>,
        lambda_gens: Vec<Vector>,
        mu_index: Vec<usize>,
        mu_gens: Vec<Vector>,
        target: &[Rational],
        normalized: bool,
    ) -> MultiplierSet {
        let d = lambda_gens.len() + mu_gens.len();
        let n = target.len();
        let mut columns: Matrix = lambda_gens.iter().chain(&mu_gens).cloned().collect();
        let mut rhs = target.to_vec();
        if normalized {
            for (k, c) in columns.iter_mut().enumerate() {
                c.push(if k < lambda_gens.len() { Rational::one() } else { Rational::zero() });
            }
            rhs.push(Rational::one());
        }
        let eqs = rhs.len();
        let mut p = Polyhedron::universe(d);
        for k in 0..d {
            let mut row = zeros(d);
            row[k] = Rational::from_int(-1);
            p.push_row(row, Rational::zero());
        }
        for e in 0..eqs {
            let row: Vector = columns.iter().map(|c| c[e].clone()).collect();
            p.push_row(row.iter().map(|v| -v).collect(), -&rhs[e]);
            p.push_row(row, rhs[e].clone());
        }
        debug_assert!(columns.iter().all(|c| c.len() == eqs) && eqs >= n);
        MultiplierSet { lambda_index, mu_index, columns, rhs, polytope: p }
    }

    pub fn coords(&self) -> usize {
        self.lambda_index.len() + self.mu_index.len()
    }

    pub fn is_empty(&self) -> Result<bool> {
        self.polytope.is_empty()
    }

    /// `Σ wₖ gₖ` over the first `n` entries of the columns.
    pub fn combine(&self, w: &[Rational], n: usize) -> Vector {
        let mut out = zeros(n);
        for (c, wk) in self.columns.iter().zip(w) {
            if wk.is_zero() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(c) {
                *o += &(wk * v);
            }
        }
        out
    }

    /// A multiplier whose support contains the support of every other one:
    /// one LP per coordinate not yet seen positive, the points averaged.
    pub fn max_support_witness(&self) -> Result<Option<Vector>> {
        let Some(base) = self.polytope.feasible_point()? else {
            return Ok(None);
        };
        let d = self.coords();
        let mut points = vec![base];
        for c in 0..d {
            if points.iter().any(|p| p[c].is_positive()) {
                continue;
            }
            let mut obj = zeros(d);
            obj[c] = Rational::one();
            let mut lp = self.polytope.lp().maximize(obj.clone());
            lp.row(obj, Relation::Le, Rational::one());
            if let Some(x) = lp.solve()?.x {
                if x[c].is_positive() {
                    points.push(x);
                }
            }
        }
        let w = Rational::new(1, points.len() as i64);
        let mut avg = zeros(d);
        for p in &points {
            for (a, v) in avg.iter_mut().zip(p) {
                *a += &(&w * v);
            }
        }
        Ok(Some(avg))
    }

    /// Host indices where `w` is positive, split into `λ` and `μ` parts.
    pub fn support(&self, w: &[Rational]) -> (Vec<usize>, Vec<usize>) {
        let nl = self.lambda_index.len();
        let l = (0..nl).filter(|&k| w[k].is_positive()).map(|k| self.lambda_index[k]).collect();
        let m = (0..self.mu_index.len()).filter(|&k| w[nl + k].is_positive()).map(|k| self.mu_index[k]).collect();
        (l, m)
    }

    /// Whether some multiplier is positive on every active index, with a
    /// maximal-support witness.
    pub fn strict_complementarity(&self) -> Result<(bool, Vector)> {
        let Some(w) = self.max_support_witness()? else {
            return Err(Error::EmptyMultiplierSet);
        };
        Ok((w.iter().all(|v| v.is_positive()), w))
    }

    /// Vertices of the polytope: feasible points whose support columns are
    /// linearly independent, found by enumerating column subsets.
    pub fn vertices(&self) -> Result<Vec<Vector>> {
        let d = self.coords();
        if d > VERTEX_COORD_BUDGET {
            return Err(Error::FaceBudgetExceeded { rows: d, budget: VERTEX_COORD_BUDGET });
        }
        let eqs = self.rhs.len();
        let r = rank(&self.columns, eqs);
        let mut out: Vec<Vector> = Vec::new();
        for mask in 0u32..(1 << d) {
            let size = mask.count_ones() as usize;
            if size > r {
                continue;
            }
            let cols: Vec<usize> = (0..d).filter(|&k| mask & (1 << k) != 0).collect();
            let a: Matrix = (0..eqs).map(|e| cols.iter().map(|&k| self.columns[k][e].clone()).collect()).collect();
            let sol = solve_linear(&a, &self.rhs, size)?;
            if sol.rank != size {
                continue;
            }
            let Some(x) = sol.solution else { continue };
            if x.iter().any(|v| v.is_negative()) {
                continue;
            }
            let mut w = zeros(d);
            for (&k, v) in cols.iter().zip(x) {
                w[k] = v;
            }
            if !out.contains(&w) {
                out.push(w);
            }
        }
        Ok(out)
    }
}

/// Normal-cone multipliers of `v̄` at `x̄ ∈ Q`: `Σ λᵢ aᵢ = v̄` over `I(x̄)`.
pub fn multiplier_set_for_set(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<MultiplierSet> {
    q.check_point(vbar)?;
    let act = q.active_set(xbar)?;
    let gens = act.iter().map(|&i| q.row(i).clone()).collect();
    Ok(MultiplierSet::build(act, gens, Vec::new(), Vec::new(), vbar, false))
}

/// Subgradient multipliers of `v̄` at `x̄ ∈ dom f`.
pub fn multiplier_polytope(f: &PolyhedralFunction, xbar: &[Rational], vbar: &[Rational]) -> Result<MultiplierSet> {
    let (ia, ja) = f.active_sets(xbar)?;
    if vbar.len() != f.dim() {
        return Err(Error::DimensionMismatch("subgradient has the wrong length".into()));
    }
    let lg = ia.iter().map(|&i| f.pieces[i].a.clone()).collect();
    let mg = ja.iter().map(|&j| f.constraints[j].c.clone()).collect();
    Ok(MultiplierSet::build(ia, lg, ja, mg, vbar, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::ints;
    use crate::numerics::q;

    #[test]
    fn orthant_multipliers() {
        let o = Polyhedron::orthant(2);
        let ms = multiplier_set_for_set(&o, &ints(&[0, 0]), &ints(&[-1, 0])).unwrap();
        let w = ms.max_support_witness().unwrap().unwrap();
        assert_eq!(ms.support(&w), (vec![0], vec![]));
        assert!(!ms.strict_complementarity().unwrap().0);
        let ms2 = multiplier_set_for_set(&o, &ints(&[0, 0]), &ints(&[-1, -2])).unwrap();
        assert!(ms2.strict_complementarity().unwrap().0);
        let bad = multiplier_set_for_set(&o, &ints(&[0, 0]), &ints(&[1, 0])).unwrap();
        assert!(bad.is_empty().unwrap());
        assert_eq!(bad.strict_complementarity(), Err(Error::EmptyMultiplierSet));
    }

    #[test]
    fn averaged_witness_covers_all_representations() {
        // v̄ = (-1,-1) is row 2 alone or rows 0 and 1 together
        let p = Polyhedron::new(vec![ints(&[-1, 0]), ints(&[0, -1]), ints(&[-1, -1])], ints(&[0, 0, 0])).unwrap();
        let ms = multiplier_set_for_set(&p, &ints(&[0, 0]), &ints(&[-1, -1])).unwrap();
        let w = ms.max_support_witness().unwrap().unwrap();
        assert_eq!(ms.support(&w).0, vec![0, 1, 2]);
        let mut v = ms.vertices().unwrap();
        v.sort();
        assert_eq!(v, vec![ints(&[0, 0, 1]), ints(&[1, 1, 0])]);
    }

    #[test]
    fn max_function_singleton() {
        let f = PolyhedralFunction::max_coordinate(3);
        let ms = multiplier_polytope(&f, &ints(&[0, 0, 0]), &[q(1, 2), q(1, 2), q(0, 1)]).unwrap();
        assert_eq!(ms.vertices().unwrap(), vec![vec![q(1, 2), q(1, 2), q(0, 1)]]);
        let (sc, w) = ms.strict_complementarity().unwrap();
        assert!(!sc);
        assert_eq!(ms.support(&w), (vec![0, 1], vec![]));
        let far = multiplier_polytope(&f, &ints(&[0, 0, 0]), &ints(&[2, 0, 0])).unwrap();
        assert!(far.is_empty().unwrap());
    }

    #[test]
    fn abs_multipliers() {
        let f = PolyhedralFunction::abs();
        let ms = multiplier_polytope(&f, &ints(&[0]), &ints(&[0])).unwrap();
        let (sc, w) = ms.strict_complementarity().unwrap();
        assert!(sc);
        assert_eq!(w, vec![q(1, 2), q(1, 2)]);
        let ms1 = multiplier_polytope(&f, &ints(&[0]), &ints(&[1])).unwrap();
        let (sc1, w1) = ms1.strict_complementarity().unwrap();
        assert!(!sc1);
        assert_eq!(ms1.combine(&w1, 1), ints(&[1]));
    }
}
