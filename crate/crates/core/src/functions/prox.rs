use std::cell::OnceCell;

use super::polyhedral::{PolyhedralFunction, SubdifferentialCache};
use crate::error::{Error, Result};
use crate::numerics::linalg::{axpy, dist_sq, dot, scale, sub, Vector};
use crate::numerics::Rational;
use crate::polyhedra::{LocalProjector, Projector};

/// Exact proximal map of a polyhedral function.
///
/// On the region where piece `i` attains the max, `f` is affine, so the prox
/// restricted there is a projection of `z - λaᵢ`; the best region wins. With
/// a center, only pieces active there are tried first and the answer is kept
/// when its optimality condition checks out.
pub struct PolyhedralProx {
    subdiff: SubdifferentialCache,
    local: Vec<(usize, LocalProjector)>,
    full: OnceCell<Vec<(usize, Projector)>>,
}

impl PolyhedralProx {
    pub fn new(f: PolyhedralFunction) -> Result<Self> {
        Ok(PolyhedralProx { subdiff: SubdifferentialCache::new(f), local: Vec::new(), full: OnceCell::new() })
    }

    /// A prox tuned for inputs whose prox lies near `center`.
    pub fn around(f: PolyhedralFunction, center: &[Rational]) -> Result<Self> {
        let (ia, _) = f.active_sets(center)?;
        let mut local = Vec::new();
        for i in ia {
            local.push((i, LocalProjector::new(&f.piece_region(i), center)?));
        }
        Ok(PolyhedralProx { subdiff: SubdifferentialCache::new(f), local, full: OnceCell::new() })
    }

    pub fn function(&self) -> &PolyhedralFunction {
        self.subdiff.function()
    }

    pub fn subdifferentials(&self) -> &SubdifferentialCache {
        &self.subdiff
    }

    fn objective(&self, i: usize, y: &[Rational], z: &[Rational], lambda: &Rational) -> Rational {
        let pc = &self.function().pieces[i];
        &(&dot(&pc.a, y) + &pc.b) + &(&dist_sq(y, z) / &(lambda * &Rational::from_int(2)))
    }

    fn full(&self) -> Result<&Vec<(usize, Projector)>> {
        if let Some(f) = self.full.get() {
            return Ok(f);
        }
        let f = self.function();
        let mut cells = Vec::new();
        for i in 0..f.pieces.len() {
            match Projector::new(f.piece_region(i)) {
                Ok(p) => cells.push((i, p)),
                Err(Error::EmptyPolyhedron) => {}
                Err(e) => return Err(e),
            }
        }
        let _ = self.full.set(cells);
        Ok(self.full.get().unwrap())
    }

    /// `argmin_y f(y) + |y - z|²/(2λ)`.
    pub fn prox(&self, lambda: &Rational, z: &[Rational]) -> Result<Vector> {
        if !lambda.is_positive() {
            return Err(Error::InvalidFunction("prox parameter must be positive".into()));
        }
        let f = self.function();
        if z.len() != f.dim() {
            return Err(Error::DimensionMismatch("prox input has the wrong length".into()));
        }
        if !self.local.is_empty() {
            let mut best: Option<(Vector, Rational)> = None;
            for (i, p) in &self.local {
                let y = p.project(&axpy(z, &-lambda, &f.pieces[*i].a))?;
                let val = self.objective(*i, &y, z, lambda);
                if best.as_ref().is_none_or(|(_, b)| &val < b) {
                    best = Some((y, val));
                }
            }
            let (y, _) = best.unwrap();
            let v = scale(&lambda.recip(), &sub(z, &y));
            if self.subdiff.contains(&y, &v)? {
                return Ok(y);
            }
        }
        let mut best: Option<(Vector, Rational)> = None;
        for (i, p) in self.full()? {
            let y = p.project(&axpy(z, &-lambda, &f.pieces[*i].a))?;
            let val = self.objective(*i, &y, z, lambda);
            if best.as_ref().is_none_or(|(_, b)| &val < b) {
                best = Some((y, val));
            }
        }
        let (y, _) = best.ok_or(Error::EmptyPolyhedron)?;
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::ints;
    use crate::numerics::q;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold() {
        let p = PolyhedralProx::new(PolyhedralFunction::abs()).unwrap();
        assert_eq!(p.prox(&q(1, 1), &ints(&[3])).unwrap(), ints(&[2]));
        assert_eq!(p.prox(&q(1, 1), &[q(1, 2)]).unwrap(), ints(&[0]));
        assert_eq!(p.prox(&q(2, 1), &ints(&[-5])).unwrap(), ints(&[-3]));
    }

    #[test]
    fn respects_domain() {
        // x ↦ x on x ≥ 0
        let f = PolyhedralFunction::from_parts(vec![(ints(&[1]), q(0, 1))], vec![(ints(&[-1]), q(0, 1))]).unwrap();
        let p = PolyhedralProx::new(f).unwrap();
        assert_eq!(p.prox(&q(1, 1), &ints(&[-4])).unwrap(), ints(&[0]));
        assert_eq!(p.prox(&q(1, 1), &ints(&[4])).unwrap(), ints(&[3]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn local_and_full_agree_and_satisfy_kkt(z in proptest::collection::vec(-40i64..40, 3), l in 1i64..4) {
            let f = PolyhedralFunction::l1_norm(3);
            let z: Vector = z.into_iter().map(|v| q(v, 8)).collect();
            let lam = q(l, 2);
            let full = PolyhedralProx::new(f.clone()).unwrap().prox(&lam, &z).unwrap();
            let local = PolyhedralProx::around(f.clone(), &ints(&[0, 0, 0])).unwrap().prox(&lam, &z).unwrap();
            prop_assert_eq!(&full, &local);
            let v = scale(&lam.recip(), &sub(&z, &full));
            prop_assert!(f.subdifferential(&full).unwrap().contains(&v).unwrap());
        }
    }
}
