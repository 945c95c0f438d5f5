//! Proximal point and projected gradient with exact iterates, and the
//! monitor that finds where a trace settles into an identifiable set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{ExtValue, PlqFunction, Polynomial};
use crate::identify::{Host, IdentifiableSet};
use crate::numerics::linalg::{norm_sq, scale, sub, Vector};
use crate::numerics::Rational;
use crate::polyhedra::{Polyhedron, Projector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iterates: Vec<Vector>,
    /// `|v_k|` for the method's own certificate; none for the start point.
    pub residuals: Vec<Option<f64>>,
    pub values: Vec<ExtValue>,
    pub identified_at: Option<usize>,
    /// The certificates `v_k` themselves, exact.
    #[serde(skip)]
    pub certificates: Vec<Option<Vector>>,
}

impl IterationTrace {
    fn start(x0: Vector, value: ExtValue) -> Self {
        IterationTrace {
            iterates: vec![x0],
            residuals: vec![None],
            values: vec![value],
            identified_at: None,
            certificates: vec![None],
        }
    }

    fn push(&mut self, x: Vector, value: ExtValue, v: Vector) {
        self.residuals.push(Some(norm_sq(&v).to_f64().sqrt()));
        self.certificates.push(Some(v));
        self.iterates.push(x);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

fn check_tol(tol: &Rational) -> Result<Rational> {
    if tol.is_negative() {
        return Err(Error::InvalidFunction("tolerance must be nonnegative".into()));
    }
    Ok(tol * tol)
}

/// `x_{k+1} = prox_{λf}(x_k)` with certificate `v = (x_k - x_{k+1})/λ`;
/// stops once `|v| ≤ tol` or after `max_iter` steps.
pub fn proximal_point(
    f: &PlqFunction,
    x0: &[Rational],
    lambda: &Rational,
    max_iter: usize,
    tol: &Rational,
) -> Result<IterationTrace> {
    if !f.convex {
        return Err(Error::NotConvex);
    }
    if !lambda.is_positive() {
        return Err(Error::InvalidFunction("λ must be positive".into()));
    }
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch("start point does not match the function".into()));
    }
    let tol2 = check_tol(tol)?;
    let inv = lambda.recip();
    let mut trace = IterationTrace::start(x0.to_vec(), f.value(x0)?);
    for _ in 0..max_iter {
        let x = trace.iterates.last().unwrap();
        let next = f.prox(lambda, x)?;
        let v = scale(&inv, &sub(x, &next));
        let done = norm_sq(&v) <= tol2;
        let value = f.value(&next)?;
        trace.push(next, value, v);
        if done {
            break;
        }
    }
    Ok(trace)
}

/// `x_{k+1} = P_Q(x_k - s∇h(x_k))` with residual `|x_k - x_{k+1}|/s`.
pub fn projected_gradient(
    h: &Polynomial,
    q: &Polyhedron,
    x0: &[Rational],
    step: &Rational,
    max_iter: usize,
    tol: &Rational,
) -> Result<IterationTrace> {
    q.check_point(x0)?;
    if !q.contains(x0) {
        return Err(Error::PointNotInSet);
    }
    if !step.is_positive() {
        return Err(Error::InvalidFunction("step must be positive".into()));
    }
    if h.arity().is_some_and(|a| a > q.dim()) {
        return Err(Error::DimensionMismatch("objective uses more variables than the set has".into()));
    }
    let tol2 = check_tol(tol)?;
    let p = Projector::new(q.clone())?;
    let inv = step.recip();
    let n = q.dim();
    let grad = |x: &[Rational]| -> Vector { h.gradient(x).into_iter().chain(std::iter::repeat(Rational::zero())).take(n).collect() };
    let mut trace = IterationTrace::start(x0.to_vec(), ExtValue::Finite(h.eval(x0)));
    for _ in 0..max_iter {
        let x = trace.iterates.last().unwrap();
        let next = p.project(&sub(x, &scale(step, &grad(x))))?;
        let v = scale(&inv, &sub(x, &next));
        let done = norm_sq(&v) <= tol2;
        let value = ExtValue::Finite(h.eval(&next));
        trace.push(next, value, v);
        if done {
            break;
        }
    }
    Ok(trace)
}

/// Smallest `k₀` with every iterate from `k₀` on in the set; `None` when
/// the last iterate is outside (or the trace is empty).
pub fn first_tail_index<F>(iterates: &[Vector], mut member: F) -> Result<Option<usize>>
where
    F: FnMut(&[Rational]) -> Result<bool>,
{
    let mut k0 = None;
    for (k, x) in iterates.iter().enumerate().rev() {
        if !member(x)? {
            break;
        }
        k0 = Some(k);
    }
    Ok(k0)
}

/// [`first_tail_index`] against a descriptor.
pub fn identification_monitor(trace: &IterationTrace, host: Host, m: &IdentifiableSet) -> Result<Option<usize>> {
    first_tail_index(&trace.iterates, |x| m.contains(host, x))
}
