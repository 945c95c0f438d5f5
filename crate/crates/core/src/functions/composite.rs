use serde::{Deserialize, Serialize};

use super::polyhedral::PolyhedralFunction;
use super::smooth::PolyMap;
use crate::error::{Error, Result};
use crate::numerics::linalg::{mat_t_vec, Matrix, Vector};
use crate::numerics::simplex::{LinearProgram, Relation};
use crate::numerics::Rational;
use crate::polyhedra::GenCone;

/// `f = g ∘ F` with `g` polyhedral and `F` polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeFunction {
    pub outer: PolyhedralFunction,
    pub inner: PolyMap,
}

#[derive(Deserialize)]
struct CompositeJson {
    outer: PolyhedralFunction,
    inner: PolyMap,
}

impl<'de> Deserialize<'de> for CompositeFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CompositeJson::deserialize(d)?;
        CompositeFunction::new(raw.outer, raw.inner).map_err(serde::de::Error::custom)
    }
}

impl CompositeFunction {
    pub fn new(outer: PolyhedralFunction, inner: PolyMap) -> Result<Self> {
        if outer.dim() != inner.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "outer function on R^{} composed with a map into R^{}",
                outer.dim(),
                inner.out_dim()
            )));
        }
        Ok(CompositeFunction { outer, inner })
    }

    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn value(&self, x: &[Rational]) -> Result<super::ExtValue> {
        self.outer.value(&self.inner.eval(x)?)
    }

    /// `∇F(x)ᵀ y`.
    pub fn adjoint(&self, jac: &Matrix, y: &[Rational]) -> Vector {
        mat_t_vec(jac, y, self.dim())
    }

    /// `ker ∇F(x)* ∩ ∂^∞g(F(x)) = {0}`: for each coordinate direction an LP
    /// looks for a nonzero horizon subgradient killed by the adjoint.
    pub fn qualification_check(&self, x: &[Rational]) -> Result<bool> {
        let fx = self.inner.eval(x)?;
        let jac = self.inner.jacobian(x)?;
        let horizon = self.outer.horizon_subdifferential(&fx)?;
        let k = horizon.ray_gens.len();
        if k == 0 {
            return Ok(true);
        }
        let m = self.outer.dim();
        // variables μ ≥ 0; y = Σ μⱼ cⱼ
        let y_of = |coord: usize| -> Vector { horizon.ray_gens.iter().map(|c| c[coord].clone()).collect() };
        // (∇Fᵀ y)_col = Σ_j μ_j Σ_i J[i][col] c_j[i]
        let adjoint_rows: Vec<Vector> = (0..self.dim())
            .map(|col| horizon.ray_gens.iter().map(|c| (0..m).map(|i| &jac[i][col] * &c[i]).sum()).collect())
            .collect();
        for coord in 0..m {
            for sign in [1i64, -1] {
                let mut lp = LinearProgram::new(k).nonneg(0..k);
                for row in &adjoint_rows {
                    lp.row(row.clone(), Relation::Eq, Rational::zero());
                }
                lp.row(vec![Rational::one(); k], Relation::Le, Rational::one());
                let obj: Vector = y_of(coord).iter().map(|v| v * &Rational::from_int(sign)).collect();
                let sol = lp.maximize(obj).solve()?;
                if sol.value.is_some_and(|v| v.is_positive()) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Chain rule `∂f(x) = ∇F(x)ᵀ ∂g(F(x))`, requiring the qualification.
    pub fn subdifferential(&self, x: &[Rational]) -> Result<GenCone> {
        if !self.qualification_check(x)? {
            return Err(Error::QualificationFailure);
        }
        let fx = self.inner.eval(x)?;
        let jac = self.inner.jacobian(x)?;
        let s = self.outer.subdifferential(&fx)?;
        Ok(GenCone::new(
            self.dim(),
            s.conv_gens.iter().map(|g| self.adjoint(&jac, g)).collect(),
            s.ray_gens.iter().map(|g| self.adjoint(&jac, g)).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::ints;
    use crate::numerics::q;
    use crate::functions::smooth::Polynomial;

    /// `max(x², x)`
    fn max_square_identity() -> CompositeFunction {
        let inner = PolyMap::new(1, vec![Polynomial::from_terms(&[(q(1, 1), &[2])]), Polynomial::coordinate(1, 0)]).unwrap();
        CompositeFunction::new(PolyhedralFunction::max_coordinate(2), inner).unwrap()
    }

    #[test]
    fn chain_rule_at_kink() {
        let f = max_square_identity();
        assert!(f.qualification_check(&ints(&[0])).unwrap());
        let s = f.subdifferential(&ints(&[0])).unwrap();
        assert!(s.contains(&ints(&[1])).unwrap());
        assert!(s.contains(&ints(&[0])).unwrap());
        assert!(!s.contains(&ints(&[2])).unwrap());
    }

    #[test]
    fn qualification_fails_for_folded_indicator() {
        // g = δ_{y ≤ 0}, F(x) = x²: the horizon normal 1 is killed by F'(0) = 0
        let g = PolyhedralFunction::from_parts(vec![(ints(&[0]), q(0, 1))], vec![(ints(&[1]), q(0, 1))]).unwrap();
        let inner = PolyMap::new(1, vec![Polynomial::from_terms(&[(q(1, 1), &[2])])]).unwrap();
        let f = CompositeFunction::new(g, inner).unwrap();
        assert!(!f.qualification_check(&ints(&[0])).unwrap());
        assert_eq!(f.subdifferential(&ints(&[0])), Err(Error::QualificationFailure));
    }

    #[test]
    fn dimension_guard() {
        let inner = PolyMap::identity(3);
        assert!(matches!(CompositeFunction::new(PolyhedralFunction::abs(), inner), Err(Error::DimensionMismatch(_))));
    }
}
