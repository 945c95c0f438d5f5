use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::polyhedron::Polyhedron;
use crate::error::{Error, Result};
use crate::numerics::linalg::{rank, zeros, Matrix, Vector};
use crate::numerics::simplex::{LinearProgram, LpStatus, Relation};
use crate::numerics::Rational;

pub const DEFAULT_FACE_BUDGET: usize = 20;

/// Row-count ceiling for face enumeration; `IDKIT_FACE_BUDGET` overrides.
pub fn face_budget() -> usize {
    std::env::var("IDKIT_FACE_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_FACE_BUDGET)
}

/// A nonempty face stored by its maximal tight set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceDescriptor {
    pub tight: Vec<usize>,
    pub dim: usize,
    /// A point in the relative interior.
    pub point: Vector,
}

impl FaceDescriptor {
    pub fn contains_point(&self, q: &Polyhedron, x: &[Rational]) -> bool {
        q.contains(x) && self.tight.iter().all(|&i| crate::numerics::linalg::dot(q.row(i), x) == q.b()[i])
    }

    /// The face as a polyhedron.
    pub fn polyhedron(&self, q: &Polyhedron) -> Polyhedron {
        q.with_equalities(&self.tight)
    }

    /// `self ⊆ other`.
    pub fn is_subface_of(&self, other: &FaceDescriptor) -> bool {
        other.tight.iter().all(|i| self.tight.contains(i))
    }
}

/// Smallest set of rows tight on the whole of `{x ∈ Q : aᵢx = bᵢ, i ∈ seed}`
/// together with a relative-interior point, or `None` when that set is empty.
///
/// Each round maximizes the common slack `t` of the rows outside the set; if
/// the optimum is zero the rows with positive dual weight are tight on the
/// whole face and join the set.
pub fn closure(q: &Polyhedron, seed: &[usize]) -> Result<Option<(Vec<usize>, Vector)>> {
    let n = q.dim();
    let mut tight: BTreeSet<usize> = seed.iter().copied().collect();
    loop {
        let mut lp = LinearProgram::new(n + 1);
        let mut outside = Vec::new();
        for i in 0..q.rows() {
            let mut row = q.row(i).clone();
            if tight.contains(&i) {
                row.push(Rational::zero());
                lp.row(row, Relation::Eq, q.b()[i].clone());
            } else {
                row.push(Rational::one());
                lp.row(row, Relation::Le, q.b()[i].clone());
                outside.push(i);
            }
        }
        let mut t = zeros(n + 1);
        t[n] = Rational::one();
        lp.row(t.clone(), Relation::Le, Rational::one());
        let sol = lp.maximize(t).solve()?;
        match sol.status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => unreachable!("t is bounded above"),
            LpStatus::Optimal => {}
        }
        let x = sol.x.unwrap();
        if x[n].is_positive() || outside.is_empty() {
            return Ok(Some((tight.into_iter().collect(), x[..n].to_vec())));
        }
        // duals are indexed like the rows, which follow the constraint order
        let duals = sol.duals.unwrap();
        let before = tight.len();
        tight.extend(outside.iter().copied().filter(|&i| duals[i].is_positive()));
        let grew = tight.len() > before;
        if !grew {
            // zero slack with no certificate cannot happen at an optimum
            return Err(Error::OracleMismatch("face closure made no progress".into()));
        }
    }
}

fn descriptor(q: &Polyhedron, tight: Vec<usize>, point: Vector) -> FaceDescriptor {
    let rows: Matrix = tight.iter().map(|&i| q.row(i).clone()).collect();
    let dim = q.dim() - rank(&rows, q.dim());
    FaceDescriptor { tight, dim, point }
}

/// The face with maximal tight set `closure(seed)`.
pub fn face_from_tight(q: &Polyhedron, seed: &[usize]) -> Result<Option<FaceDescriptor>> {
    Ok(closure(q, seed)?.map(|(t, p)| descriptor(q, t, p)))
}

/// All nonempty faces, each once, ordered by decreasing dimension and then by
/// tight set.
pub fn faces_enumerate(q: &Polyhedron) -> Result<Vec<FaceDescriptor>> {
    let budget = face_budget();
    if q.rows() > budget {
        return Err(Error::FaceBudgetExceeded { rows: q.rows(), budget });
    }
    let Some((root, p)) = closure(q, &[])? else {
        return Ok(Vec::new());
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(root.clone());
    queue.push_back(root.clone());
    out.push(descriptor(q, root, p));
    while let Some(s) = queue.pop_front() {
        for j in 0..q.rows() {
            if s.contains(&j) {
                continue;
            }
            let mut cand = s.clone();
            cand.push(j);
            cand.sort_unstable();
            if !tried.insert(cand.clone()) {
                continue;
            }
            if let Some((t, p)) = closure(q, &cand)? {
                if seen.insert(t.clone()) {
                    queue.push_back(t.clone());
                    out.push(descriptor(q, t, p));
                }
            }
        }
    }
    out.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.tight.cmp(&b.tight)));
    Ok(out)
}

/// `argmax_{x∈Q} ⟨v, x⟩` as a face; the dual support of one optimal solution
/// is extended to the maximal tight set.
pub fn face_of_maximizers(q: &Polyhedron, v: &[Rational]) -> Result<FaceDescriptor> {
    q.check_point(v)?;
    let sol = q.lp().maximize(v.to_vec()).solve()?;
    match sol.status {
        LpStatus::Infeasible => return Err(Error::EmptyPolyhedron),
        LpStatus::Unbounded => return Err(Error::Unbounded),
        LpStatus::Optimal => {}
    }
    let support: Vec<usize> = sol.duals.unwrap().iter().enumerate().filter(|(_, y)| y.is_positive()).map(|(i, _)| i).collect();
    face_from_tight(q, &support)?.ok_or_else(|| Error::OracleMismatch("optimal face is empty".into()))
}

/// Vertices (zero-dimensional faces) as points.
pub fn vertices(q: &Polyhedron) -> Result<Vec<Vector>> {
    Ok(faces_enumerate(q)?.into_iter().filter(|f| f.dim == 0).map(|f| f.point).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{int_matrix, ints};
    use crate::numerics::q;

    fn square() -> Polyhedron {
        Polyhedron::cube(2, q(0, 1), q(1, 1))
    }

    #[test]
    fn square_has_nine_faces() {
        let f = faces_enumerate(&square()).unwrap();
        assert_eq!(f.len(), 9);
        assert_eq!(f.iter().filter(|f| f.dim == 0).count(), 4);
        assert_eq!(f.iter().filter(|f| f.dim == 1).count(), 4);
        assert_eq!(f[0].tight, Vec::<usize>::new());
    }

    #[test]
    fn orthant_faces() {
        let f = faces_enumerate(&Polyhedron::orthant(2)).unwrap();
        let tights: Vec<_> = f.iter().map(|f| f.tight.clone()).collect();
        assert_eq!(tights, vec![vec![], vec![0], vec![1], vec![0, 1]]);
    }

    #[test]
    fn degenerate_apex_is_one_face() {
        // three planes through the origin in R² plus a box
        let p = Polyhedron::new(
            int_matrix(&[&[-1, 0], &[0, -1], &[-1, -1], &[1, 0], &[0, 1]]),
            ints(&[0, 0, 0, 1, 1]),
        )
        .unwrap();
        let f = faces_enumerate(&p).unwrap();
        assert_eq!(f.len(), 9);
        assert!(f.iter().any(|f| f.tight == vec![0, 1, 2] && f.dim == 0));
    }

    #[test]
    fn empty_and_universe() {
        assert!(faces_enumerate(&Polyhedron::empty(2)).unwrap().is_empty());
        let u = faces_enumerate(&Polyhedron::universe(3)).unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].dim, 3);
    }

    #[test]
    fn maximizer_faces() {
        let s = square();
        let f = face_of_maximizers(&s, &ints(&[1, 0])).unwrap();
        assert_eq!(f.tight, vec![0]);
        assert_eq!(f.dim, 1);
        let g = face_of_maximizers(&s, &ints(&[1, 1])).unwrap();
        assert_eq!(g.tight, vec![0, 2]);
        let all = face_of_maximizers(&s, &ints(&[0, 0])).unwrap();
        assert_eq!(all.tight, Vec::<usize>::new());
        assert_eq!(face_of_maximizers(&Polyhedron::orthant(2), &ints(&[1, 0])), Err(Error::Unbounded));
    }

    #[test]
    fn budget_guard() {
        let big = Polyhedron::cube(11, q(0, 1), q(1, 1));
        assert!(matches!(faces_enumerate(&big), Err(Error::FaceBudgetExceeded { rows: 22, budget: 20 })));
    }
}
