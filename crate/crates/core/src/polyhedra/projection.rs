//! Exact Euclidean projection onto a polyhedron.
//!
//! The projection lies in the relative interior of exactly one face, where it
//! coincides with the projection onto that face's affine hull. Every face's
//! affine projector is precomputed; the answer is the nearest candidate that
//! is feasible. A warm start tries the previous winner first and accepts it
//! when the KKT condition `z - y ∈ N_Q(y)` holds.

use std::cell::{Cell, OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use super::faces::faces_enumerate;
use super::polyhedron::Polyhedron;
use crate::error::{Error, Result};
use crate::numerics::linalg::{dist_sq, identity, independent_rows, inverse, mat_t_vec, mat_vec, sub, Matrix, Vector};
use crate::numerics::Rational;

/// Orthogonal projection onto `{x : B x = c}`, stored as `z ↦ P z + o`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    linear: Matrix,
    offset: Vector,
}

impl AffineProjector {
    /// Rows may be dependent but must be consistent.
    pub fn onto(rows: &[Vector], rhs: &[Rational], n: usize) -> AffineProjector {
        let idx = independent_rows(rows, n);
        if idx.is_empty() {
            return AffineProjector { linear: identity(n), offset: vec![Rational::zero(); n] };
        }
        let b: Matrix = idx.iter().map(|&i| rows[i].clone()).collect();
        let c: Vector = idx.iter().map(|&i| rhs[i].clone()).collect();
        let gram: Matrix = b.iter().map(|r| mat_vec(&b, r)).collect();
        let ginv = inverse(&gram).expect("independent rows give an invertible Gram matrix");
        // P = I - Bᵀ G⁻¹ B, o = Bᵀ G⁻¹ c
        let ginv_b: Matrix = ginv.iter().map(|r| mat_t_vec(&b, r, n)).collect();
        let mut linear = identity(n);
        for (i, row) in linear.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let mut acc = Rational::zero();
                for k in 0..b.len() {
                    if !b[k][i].is_zero() && !ginv_b[k][j].is_zero() {
                        acc += &(&b[k][i] * &ginv_b[k][j]);
                    }
                }
                *x -= &acc;
            }
        }
        let w = mat_vec(&ginv, &c);
        let offset = mat_t_vec(&b, &w, n);
        AffineProjector { linear, offset }
    }

    pub fn apply(&self, z: &[Rational]) -> Vector {
        mat_vec(&self.linear, z).iter().zip(&self.offset).map(|(x, o)| x + o).collect()
    }

    pub fn linear_part(&self) -> &Matrix {
        &self.linear
    }
}

/// Inequality descriptions of `N_Q(x) = cone{aᵢ : i ∈ I(x)}`, cached by
/// active set.
pub struct NormalConeCache {
    q: Polyhedron,
    hrep: RefCell<HashMap<Vec<usize>, Rc<Polyhedron>>>,
    projectors: RefCell<HashMap<Vec<usize>, Rc<Projector>>>,
}

impl NormalConeCache {
    pub fn new(q: Polyhedron) -> NormalConeCache {
        NormalConeCache { q, hrep: RefCell::new(HashMap::new()), projectors: RefCell::new(HashMap::new()) }
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.q
    }

    pub fn hrep(&self, active: &[usize]) -> Result<Rc<Polyhedron>> {
        if let Some(h) = self.hrep.borrow().get(active) {
            return Ok(h.clone());
        }
        let h = Rc::new(self.q.normal_cone_of(active).to_polyhedron()?);
        self.hrep.borrow_mut().insert(active.to_vec(), h.clone());
        Ok(h)
    }

    /// `v ∈ N_Q(x)`; false when `x ∉ Q`.
    pub fn contains(&self, x: &[Rational], v: &[Rational]) -> Result<bool> {
        match self.q.active_set(x) {
            Ok(act) => Ok(self.hrep(&act)?.contains(v)),
            Err(Error::PointNotInSet) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Squared distance from `v` to `N_Q(x)`; errors when `x ∉ Q`.
    pub fn distance_sq(&self, x: &[Rational], v: &[Rational]) -> Result<Rational> {
        let act = self.q.active_set(x)?;
        let p = self.cone_projector(&act)?;
        let w = p.project(v)?;
        Ok(dist_sq(&w, v))
    }

    pub fn cone_projector(&self, active: &[usize]) -> Result<Rc<Projector>> {
        if let Some(p) = self.projectors.borrow().get(active) {
            return Ok(p.clone());
        }
        let h = self.hrep(active)?;
        let p = Rc::new(Projector::new((*h).clone())?);
        self.projectors.borrow_mut().insert(active.to_vec(), p.clone());
        Ok(p)
    }
}

pub struct Projector {
    q: Polyhedron,
    faces: Vec<(Vec<usize>, AffineProjector)>,
    cones: NormalConeCache,
    last: Cell<Option<usize>>,
}

impl Projector {
    pub fn new(q: Polyhedron) -> Result<Projector> {
        let faces = faces_enumerate(&q)?;
        if faces.is_empty() {
            return Err(Error::EmptyPolyhedron);
        }
        let n = q.dim();
        let faces = faces
            .into_iter()
            .map(|f| {
                let rows: Matrix = f.tight.iter().map(|&i| q.row(i).clone()).collect();
                let rhs: Vector = f.tight.iter().map(|&i| q.b()[i].clone()).collect();
                let p = AffineProjector::onto(&rows, &rhs, n);
                (f.tight, p)
            })
            .collect();
        Ok(Projector { cones: NormalConeCache::new(q.clone()), q, faces, last: Cell::new(None) })
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.q
    }

    pub fn normal_cones(&self) -> &NormalConeCache {
        &self.cones
    }

    /// Affine projectors of all faces, keyed by maximal tight set.
    pub fn face_projectors(&self) -> impl Iterator<Item = (&Vec<usize>, &AffineProjector)> {
        self.faces.iter().map(|(t, p)| (t, p))
    }

    pub fn project(&self, z: &[Rational]) -> Result<Vector> {
        self.q.check_point(z)?;
        if self.q.contains(z) {
            return Ok(z.to_vec());
        }
        if let Some(k) = self.last.get() {
            let y = self.faces[k].1.apply(z);
            if self.q.contains(&y) && self.cones.contains(&y, &sub(z, &y))? {
                return Ok(y);
            }
        }
        let mut best: Option<(usize, Vector, Rational)> = None;
        for (k, (_, p)) in self.faces.iter().enumerate() {
            let y = p.apply(z);
            let d = dist_sq(&y, z);
            if best.as_ref().is_some_and(|(_, _, bd)| &d >= bd) {
                continue;
            }
            if self.q.contains(&y) {
                best = Some((k, y, d));
            }
        }
        let (k, y, _) = best.expect("some face always contains the projection");
        self.last.set(Some(k));
        Ok(y)
    }
}

/// A projector tuned for points near `x̄`: it first projects onto the local
/// cone `{x : aᵢx ≤ bᵢ, i ∈ I(x̄)}` and keeps the answer when it lies in `Q`
/// (then it is the projection onto `Q` as well).
pub struct LocalProjector {
    q: Polyhedron,
    local: Projector,
    full: OnceCell<Projector>,
}

impl LocalProjector {
    pub fn new(q: &Polyhedron, xbar: &[Rational]) -> Result<LocalProjector> {
        let act = q.active_set(xbar)?;
        let mut local = Polyhedron::universe(q.dim());
        for &i in &act {
            local.push_row(q.row(i).clone(), q.b()[i].clone());
        }
        Ok(LocalProjector { q: q.clone(), local: Projector::new(local)?, full: OnceCell::new() })
    }

    pub fn project(&self, z: &[Rational]) -> Result<Vector> {
        let y = self.local.project(z)?;
        if self.q.contains(&y) {
            return Ok(y);
        }
        if self.full.get().is_none() {
            let p = Projector::new(self.q.clone())?;
            let _ = self.full.set(p);
        }
        self.full.get().unwrap().project(z)
    }
}

/// One-shot projection.
pub fn project(q: &Polyhedron, z: &[Rational]) -> Result<Vector> {
    Projector::new(q.clone())?.project(z)
}

/// The optimality certificate of a projection: `y ∈ Q` and `z - y ∈ N_Q(y)`,
/// decided with an LP cone-membership test.
pub fn projection_kkt_holds(q: &Polyhedron, z: &[Rational], y: &[Rational]) -> Result<bool> {
    if !q.contains(y) {
        return Ok(false);
    }
    q.normal_cone(y)?.contains(&sub(z, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{int_matrix, ints};
    use crate::numerics::q;

    #[test]
    fn square_projection() {
        let s = Polyhedron::cube(2, q(0, 1), q(1, 1));
        assert_eq!(project(&s, &ints(&[2, 2])).unwrap(), ints(&[1, 1]));
        assert_eq!(project(&s, &[q(1, 2), q(3, 1)]).unwrap(), vec![q(1, 2), q(1, 1)]);
        assert_eq!(project(&s, &[q(1, 3), q(1, 4)]).unwrap(), vec![q(1, 3), q(1, 4)]);
    }

    #[test]
    fn simplex_projection() {
        let s = Polyhedron::new(int_matrix(&[&[1, 1], &[-1, 0], &[0, -1]]), ints(&[1, 0, 0])).unwrap();
        let y = project(&s, &ints(&[1, 1])).unwrap();
        assert_eq!(y, vec![q(1, 2), q(1, 2)]);
        assert!(projection_kkt_holds(&s, &ints(&[1, 1]), &y).unwrap());
        let y2 = project(&s, &ints(&[3, -1])).unwrap();
        assert_eq!(y2, ints(&[1, 0]));
    }

    #[test]
    fn affine_projector_onto_line() {
        let p = AffineProjector::onto(&[ints(&[1, 1]), ints(&[2, 2])], &ints(&[1, 2]), 2);
        assert_eq!(p.apply(&ints(&[0, 0])), vec![q(1, 2), q(1, 2)]);
        assert_eq!(p.apply(&ints(&[1, 0])), ints(&[1, 0]));
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let s = Polyhedron::new(
            int_matrix(&[&[1, 2], &[3, -1], &[-1, 0], &[0, -1], &[-1, 1]]),
            ints(&[4, 3, 0, 0, 1]),
        )
        .unwrap();
        let warm = Projector::new(s.clone()).unwrap();
        for i in -6..6 {
            for j in -6..6 {
                let z = vec![q(i, 2), q(j, 3)];
                let a = warm.project(&z).unwrap();
                let b = project(&s, &z).unwrap();
                assert_eq!(a, b);
                assert!(projection_kkt_holds(&s, &z, &a).unwrap());
            }
        }
    }

    #[test]
    fn local_projector_matches_global() {
        let s = Polyhedron::cube(2, q(0, 1), q(1, 1));
        let lp = LocalProjector::new(&s, &ints(&[1, 1])).unwrap();
        assert_eq!(lp.project(&ints(&[3, 3])).unwrap(), ints(&[1, 1]));
        assert_eq!(lp.project(&ints(&[-3, 3])).unwrap(), ints(&[0, 1]));
    }

    #[test]
    fn cone_distance() {
        let o = Polyhedron::orthant(2);
        let cache = NormalConeCache::new(o);
        // N at (0,1) is cone{(-1,0)}
        assert_eq!(cache.distance_sq(&ints(&[0, 1]), &ints(&[-1, 0])).unwrap(), q(0, 1));
        assert_eq!(cache.distance_sq(&ints(&[0, 1]), &ints(&[-1, 2])).unwrap(), q(4, 1));
        assert_eq!(cache.distance_sq(&ints(&[1, 1]), &ints(&[3, 4])).unwrap(), q(25, 1));
        assert!(cache.contains(&ints(&[0, 0]), &ints(&[-1, -1])).unwrap());
        assert!(!cache.contains(&ints(&[0, 0]), &ints(&[1, -1])).unwrap());
    }
}
