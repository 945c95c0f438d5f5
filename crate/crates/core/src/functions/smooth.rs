use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{Matrix, Vector};
use crate::numerics::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coef: Rational,
    pub exps: Vec<u32>,
}

/// A polynomial with rational coefficients; evaluation at rational points is
/// exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(terms: Vec<Term>) -> Self {
        Polynomial { terms }
    }

    /// Builds from `(coef, exponents)` pairs.
    pub fn from_terms(terms: &[(Rational, &[u32])]) -> Self {
        Polynomial { terms: terms.iter().map(|(c, e)| Term { coef: c.clone(), exps: e.to_vec() }).collect() }
    }

    /// `x_i` in `Rⁿ`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Polynomial { terms: vec![Term { coef: Rational::one(), exps: e }] }
    }

    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    /// Number of variables, or `None` for the empty polynomial.
    pub fn arity(&self) -> Option<usize> {
        self.terms.first().map(|t| t.exps.len())
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for t in &self.terms {
            let mut m = t.coef.clone();
            for (xi, &e) in x.iter().zip(&t.exps) {
                if e > 0 {
                    m = &m * &xi.pow(e);
                }
            }
            acc += &m;
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[var] > 0)
            .map(|t| {
                let mut e = t.exps.clone();
                let k = e[var];
                e[var] -= 1;
                Term { coef: &t.coef * &Rational::from_int(k as i64), exps: e }
            })
            .collect();
        Polynomial { terms }
    }

    pub fn gradient(&self, x: &[Rational]) -> Vector {
        (0..x.len()).map(|i| self.derivative(i).eval(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef.to_f64() * x.iter().zip(&t.exps).map(|(xi, &e)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }
}

/// A polynomial map `F : Rⁿ → Rᵐ`, one polynomial per output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolyMap {
    pub n: usize,
    pub polys: Vec<Polynomial>,
}

#[derive(Deserialize)]
struct PolyMapJson {
    #[serde(default)]
    n: Option<usize>,
    polys: Vec<Polynomial>,
}

impl<'de> Deserialize<'de> for PolyMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyMapJson::deserialize(d)?;
        let n = raw
            .n
            .or_else(|| raw.polys.iter().find_map(|p| p.arity()))
            .ok_or_else(|| serde::de::Error::custom("cannot infer the input dimension; add \"n\""))?;
        PolyMap::new(n, raw.polys).map_err(serde::de::Error::custom)
    }
}

impl PolyMap {
    pub fn new(n: usize, polys: Vec<Polynomial>) -> Result<Self> {
        if polys.iter().any(|p| p.terms.iter().any(|t| t.exps.len() != n)) {
            return Err(Error::DimensionMismatch(format!("exponent vectors must have length {n}")));
        }
        Ok(PolyMap { n, polys })
    }

    pub fn identity(n: usize) -> Self {
        PolyMap { n, polys: (0..n).map(|i| Polynomial::coordinate(n, i)).collect() }
    }

    pub fn out_dim(&self) -> usize {
        self.polys.len()
    }

    fn check(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!("point of length {} for a map on R^{}", x.len(), self.n)));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Vector> {
        self.check(x)?;
        Ok(self.polys.iter().map(|p| p.eval(x)).collect())
    }

    /// `m × n` Jacobian.
    pub fn jacobian(&self, x: &[Rational]) -> Result<Matrix> {
        self.check(x)?;
        Ok(self.polys.iter().map(|p| p.gradient(x)).collect())
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval_f64(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::ints;
    use crate::numerics::q;

    fn square_and_identity() -> PolyMap {
        // F(x) = (x², x)
        PolyMap::new(1, vec![Polynomial::from_terms(&[(q(1, 1), &[2])]), Polynomial::coordinate(1, 0)]).unwrap()
    }

    #[test]
    fn values_and_jacobian() {
        let f = square_and_identity();
        assert_eq!(f.eval(&[q(3, 2)]).unwrap(), vec![q(9, 4), q(3, 2)]);
        assert_eq!(f.jacobian(&[q(3, 2)]).unwrap(), vec![ints(&[3]), ints(&[1])]);
    }

    #[test]
    fn json_shape() {
        let s = r#"{"polys":[{"terms":[{"coef":"1/2","exps":[2,0]},{"coef":"-1","exps":[0,1]}]}]}"#;
        let f: PolyMap = serde_json::from_str(s).unwrap();
        assert_eq!(f.n, 2);
        assert_eq!(f.eval(&ints(&[2, 3])).unwrap(), vec![q(-1, 1)]);
        assert!(serde_json::from_str::<PolyMap>(r#"{"polys":[{"terms":[{"coef":"1","exps":[1]},{"coef":"1","exps":[1,1]}]}]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn jacobian_matches_central_differences(
                coefs in proptest::collection::vec(-5i64..=5, 4),
                exps in proptest::collection::vec(proptest::collection::vec(0u32..=3, 2), 4),
                x in proptest::collection::vec(-20i64..=20, 2),
            ) {
                let terms: Vec<Term> = coefs.iter().zip(&exps).map(|(c, e)| Term { coef: q(*c, 1), exps: e.clone() }).collect();
                let p = Polynomial::new(terms);
                let xq: Vec<Rational> = x.iter().map(|v| q(*v, 10)).collect();
                let xf: Vec<f64> = xq.iter().map(|v| v.to_f64()).collect();
                let g = p.gradient(&xq);
                let h = 1e-5;
                for i in 0..2 {
                    let mut up = xf.clone();
                    let mut dn = xf.clone();
                    up[i] += h;
                    dn[i] -= h;
                    let fd = (p.eval_f64(&up) - p.eval_f64(&dn)) / (2.0 * h);
                    prop_assert!((fd - g[i].to_f64()).abs() < 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }
}
