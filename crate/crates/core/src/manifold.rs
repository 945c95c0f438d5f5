//! Affine identifiable manifolds, partial smoothness, valley inclusion and
//! the constant-rank behavior of the projection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::identify::verify::{check_normal, instance_radius, run_schedule};
use crate::identify::{
    minimal_identifiable_face, multiplier_polytope, multiplier_set_for_set, Host, IdentifiableSet, Verdict,
    VerifierReport, VerifyOptions, Witness,
};
use crate::numerics::linalg::{add, dist_sq, dot, null_space, rank, scale, sub, zeros, Matrix, Vector};
use crate::numerics::Rational;
use crate::polyhedra::{face_from_tight, AffineProjector, FaceDescriptor, LocalProjector, NormalConeCache, Polyhedron};
use crate::sampling;

/// `point + span(basis)`, carried by a face of the host.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineManifold {
    pub point: Vector,
    pub basis: Vec<Vector>,
    /// For set hosts a face of `Q`; for function hosts a face of `epi f`.
    pub host_face: FaceDescriptor,
}

impl AffineManifold {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.point.len()
    }

    /// Rows spanning the orthogonal complement of the basis.
    pub fn normals(&self) -> Matrix {
        null_space(&self.basis, self.ambient_dim())
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        let d = sub(x, &self.point);
        self.normals().iter().all(|row| dot(row, &d).is_zero())
    }

    /// The face of a set host as a descriptor.
    pub fn descriptor(&self) -> IdentifiableSet {
        IdentifiableSet::face(self.host_face.tight.clone(), vec![])
    }

    fn validate(&self, x: &[Rational]) -> Result<()> {
        let n = self.ambient_dim();
        if x.len() != n || self.basis.iter().any(|b| b.len() != n) {
            return Err(Error::InvalidManifold("dimensions do not match".into()));
        }
        if rank(&self.basis, n) != self.basis.len() {
            return Err(Error::InvalidManifold("basis is linearly dependent".into()));
        }
        if !self.contains(x) {
            return Err(Error::InvalidManifold("the base point is not on the manifold".into()));
        }
        Ok(())
    }
}

/// `x̄ + ker A_{I(x̄)}`: the largest affine set through `x̄` that stays in
/// `Q` nearby.
pub fn active_manifold(q: &Polyhedron, xbar: &[Rational]) -> Result<AffineManifold> {
    let act = q.active_set(xbar)?;
    let rows: Matrix = act.iter().map(|&i| q.row(i).clone()).collect();
    let host_face = face_from_tight(q, &act)?.ok_or(Error::PointNotInSet)?;
    Ok(AffineManifold { point: xbar.to_vec(), basis: null_space(&rows, q.dim()), host_face })
}

/// Under strict complementarity the minimal identifiable set is locally the
/// affine manifold cut out by the active rows; `None` otherwise.
pub fn affine_identifiable_manifold(host: Host, xbar: &[Rational], vbar: &[Rational]) -> Result<Option<AffineManifold>> {
    check_normal(host, xbar, vbar)?;
    match host {
        Host::Set(q) => {
            let (strict, _) = multiplier_set_for_set(q, xbar, vbar)?.strict_complementarity()?;
            if !strict {
                return Ok(None);
            }
            let face = minimal_identifiable_face(q, xbar, vbar)?;
            let rows: Matrix = face.tight.iter().map(|&i| q.row(i).clone()).collect();
            Ok(Some(AffineManifold { point: xbar.to_vec(), basis: null_space(&rows, q.dim()), host_face: face }))
        }
        Host::Function(f) => {
            let (strict, _) = multiplier_polytope(f, xbar, vbar)?.strict_complementarity()?;
            if !strict {
                return Ok(None);
            }
            let (act_i, act_j) = f.active_sets(xbar)?;
            let n = f.dim();
            let mut rows: Matrix = act_i.windows(2).map(|w| sub(&f.pieces[w[1]].a, &f.pieces[w[0]].a)).collect();
            rows.extend(act_j.iter().map(|&j| f.constraints[j].c.clone()));
            let m = f.pieces.len();
            let lifted: Vec<usize> = act_i.iter().copied().chain(act_j.iter().map(|&j| m + j)).collect();
            let host_face = face_from_tight(&f.epigraph(), &lifted)?
                .ok_or_else(|| Error::OracleMismatch("active epigraph face is empty".into()))?;
            Ok(Some(AffineManifold { point: xbar.to_vec(), basis: null_space(&rows, n), host_face }))
        }
        _ => Err(Error::UnsupportedDescriptor("manifolds are built for set and function hosts".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub verdict: Verdict,
    pub evidence: String,
}

impl Condition {
    fn new(ok: bool, evidence: impl Into<String>) -> Self {
        Condition { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, evidence: evidence.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSmoothnessCertificate {
    pub prox_regular: Condition,
    pub sharp: Condition,
    pub continuous: Condition,
    pub nondegenerate: Condition,
    pub overall: Verdict,
}

/// Prox-regularity, sharpness, continuity of `N_Q` along `M`, and
/// `v̄ ∈ ri N̂_Q(x̄)`. Exact except continuity, which samples `M`.
pub fn partial_smoothness_certificate(
    q: &Polyhedron,
    m: &AffineManifold,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<PartialSmoothnessCertificate> {
    m.validate(xbar)?;
    if m.ambient_dim() != q.dim() {
        return Err(Error::InvalidManifold("manifold and set live in different spaces".into()));
    }
    check_normal(Host::Set(q), xbar, vbar)?;
    let n = q.dim();
    let prox_regular = Condition::new(true, "convex polyhedron: the monotonicity inequality holds with r = 0");

    let act = q.active_set(xbar)?;
    let rows: Matrix = act.iter().map(|&i| q.row(i).clone()).collect();
    let r = rank(&rows, n);
    let orthogonal = rows.iter().all(|a| m.basis.iter().all(|b| dot(a, b).is_zero()));
    let sharp = Condition::new(
        orthogonal && r == n - m.dim(),
        format!("rank of active normals {r}, codimension of M {}, normals orthogonal to M: {orthogonal}", n - m.dim()),
    );

    let r0 = match &opts.radius {
        Some(r) => r.clone(),
        None => instance_radius(Host::Set(q), xbar, vbar)?,
    };
    let cones = NormalConeCache::new(q.clone());
    let mut worst = Rational::zero();
    let report = run_schedule(opts, r0, |rng, r, last, _| {
        let t = sampling::perturb(rng, &zeros(m.dim()), r);
        let mut x = xbar.to_vec();
        for (ti, b) in t.iter().zip(&m.basis) {
            x = add(&x, &scale(ti, b));
        }
        if !q.contains(&x) {
            return Ok(None);
        }
        let act = q.active_set(&x)?;
        let w = cones.cone_projector(&act)?.project(vbar)?;
        let d = dist_sq(&w, vbar);
        if last && d > worst {
            worst = d.clone();
        }
        Ok((!d.is_zero()).then_some(Witness { x, v: w }))
    })?;
    let continuous = Condition {
        verdict: report.verdict,
        evidence: format!(
            "{} samples on M, largest squared distance from v̄ to N_Q(x) at the final radius {}: {worst}",
            report.samples, report.final_radius
        ),
    };

    let ri = q.normal_cone(xbar)?.ri_contains(vbar)?;
    let nondegenerate = Condition::new(ri, if ri { "v̄ lies in ri N_Q(x̄)" } else { "v̄ lies on the relative boundary of N_Q(x̄)" });

    let all = [&prox_regular, &sharp, &continuous, &nondegenerate];
    let overall = if all.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if all.iter().all(|c| c.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(PartialSmoothnessCertificate { prox_regular, sharp, continuous, nondegenerate, overall })
}

/// Points of the grid `center + {-r, 0, r}ⁿ`, by index, when it is small.
fn corner_grid(center: &[Rational], r: &Rational, idx: usize) -> Option<Vector> {
    let n = center.len();
    if n > 6 || idx >= 3usize.pow(n as u32) {
        return None;
    }
    let mut code = idx;
    let mut p = center.to_vec();
    for c in p.iter_mut() {
        *c += &(r * &Rational::from_int((code % 3) as i64 - 1));
        code /= 3;
    }
    Some(p)
}

/// Perturbations `z` of `x̄ + λv̄` within `λε/4` must project into
/// `M ∩ B_ε(x̄)`. One radius; the corner grid comes first.
pub fn valley_inclusion_check(
    q: &Polyhedron,
    m: &AffineManifold,
    xbar: &[Rational],
    vbar: &[Rational],
    lambda: &Rational,
    eps: &Rational,
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    if !lambda.is_positive() || !eps.is_positive() {
        return Err(Error::InvalidFunction("λ and ε must be positive".into()));
    }
    check_normal(Host::Set(q), xbar, vbar)?;
    m.validate(xbar)?;
    let center = add(xbar, &scale(lambda, vbar));
    let r = &(lambda * eps) / &Rational::from_int(4);
    let p = LocalProjector::new(q, xbar)?;
    let eps2 = eps * eps;
    let single = VerifyOptions { levels: 1, ..opts.clone() };
    run_schedule(&single, r, |rng, r, _, idx| {
        let z = corner_grid(&center, r, idx).unwrap_or_else(|| sampling::perturb(rng, &center, r));
        let x = p.project(&z)?;
        let ok = m.contains(&x) && dist_sq(&x, xbar) < eps2;
        let v = scale(&lambda.recip(), &sub(&z, &x));
        Ok((!ok).then_some(Witness { x, v }))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub verdict: Verdict,
    pub points: usize,
    pub rank: usize,
    pub expected_rank: usize,
    /// The common linear part of the projection on the grid.
    pub linear_part: Matrix,
    pub radius: Rational,
    pub violations: Vec<Witness>,
}

/// On the grid `x̄ + λv̄ + (r/k)·{-k..k}ⁿ` the projection is affine with one
/// linear part, the projector onto the identified face's direction, and
/// lands in that face. Larger grids are subsampled to the budget.
pub fn projection_rank_check(
    q: &Polyhedron,
    xbar: &[Rational],
    vbar: &[Rational],
    lambda: &Rational,
    grid: usize,
    opts: &VerifyOptions,
) -> Result<RankReport> {
    if !lambda.is_positive() {
        return Err(Error::InvalidFunction("λ must be positive".into()));
    }
    let host = Host::Set(q);
    check_normal(host, xbar, vbar)?;
    let Some(manifold) = affine_identifiable_manifold(host, xbar, vbar)? else {
        return Err(Error::StrictComplementarityRequired);
    };
    let n = q.dim();
    let face = &manifold.host_face;
    let face_rows: Matrix = face.tight.iter().map(|&i| q.row(i).clone()).collect();
    let expected_rank = n - rank(&face_rows, n);
    let target = AffineProjector::onto(&face_rows, &face.tight.iter().map(|&i| q.b()[i].clone()).collect::<Vec<_>>(), n);
    let radius = match &opts.radius {
        Some(r) => r.clone(),
        None => &(lambda * &instance_radius(host, xbar, vbar)?) / &Rational::from_int(4),
    };
    let k = grid.max(1) as i64;
    let side = (2 * k + 1) as usize;
    let total = side.checked_pow(n as u32).unwrap_or(usize::MAX);
    let count = total.min(opts.budget.max(1));
    let center = add(xbar, &scale(lambda, vbar));
    let p = LocalProjector::new(q, xbar)?;
    let mut rng = sampling::rng(opts.seed);
    let mut violations = Vec::new();
    let mut failed = false;
    for idx in 0..count {
        let z = if count == total {
            let mut code = idx;
            let mut z = center.clone();
            for c in z.iter_mut() {
                *c += &(&radius * &Rational::new((code % side) as i64 - k, k));
                code /= side;
            }
            z
        } else {
            sampling::perturb_grid(&mut rng, &center, &radius, k)
        };
        let y = p.project(&z)?;
        let act = q.active_set(&y)?;
        let rows: Matrix = act.iter().map(|&i| q.row(i).clone()).collect();
        let local = AffineProjector::onto(&rows, &act.iter().map(|&i| q.b()[i].clone()).collect::<Vec<_>>(), n);
        let same = local.linear_part() == target.linear_part();
        if !same || !face.contains_point(q, &y) {
            failed = true;
            if violations.len() < crate::identify::verify::MAX_WITNESSES {
                violations.push(Witness { v: sub(&z, &y), x: y });
            }
        }
    }
    Ok(RankReport {
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        points: count,
        rank: expected_rank,
        expected_rank,
        linear_part: target.linear_part().clone(),
        radius,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::PolyhedralFunction;
    use crate::identify::{graph_reduction_verify, identifiability_verify};
    use crate::numerics::linalg::{int_matrix, ints};
    use crate::numerics::q;

    fn square() -> Polyhedron {
        Polyhedron::cube(2, q(0, 1), q(1, 1))
    }

    fn halfspace() -> Polyhedron {
        Polyhedron::new(vec![ints(&[1, 0])], ints(&[0])).unwrap()
    }

    fn opts() -> VerifyOptions {
        VerifyOptions::with_budget(260, 3)
    }

    #[test]
    fn affine_manifold_examples() {
        let o = Polyhedron::orthant(2);
        let m = affine_identifiable_manifold(Host::Set(&o), &ints(&[0, 0]), &ints(&[-1, -1])).unwrap().unwrap();
        assert_eq!((m.point.clone(), m.dim()), (ints(&[0, 0]), 0));
        assert!(affine_identifiable_manifold(Host::Set(&o), &ints(&[0, 0]), &ints(&[-1, 0])).unwrap().is_none());
        let abs = PolyhedralFunction::abs();
        let m = affine_identifiable_manifold(Host::Function(&abs), &ints(&[0]), &ints(&[0])).unwrap().unwrap();
        assert_eq!(m.dim(), 0);
        let h = halfspace();
        let m = affine_identifiable_manifold(Host::Set(&h), &ints(&[0, 5]), &ints(&[1, 0])).unwrap().unwrap();
        assert_eq!(m.dim(), 1);
        assert!(m.contains(&ints(&[0, -3])) && !m.contains(&ints(&[1, 0])));
    }

    #[test]
    fn certificate_examples() {
        let s = square();
        let (x, v) = (ints(&[1, 1]), ints(&[1, 1]));
        let m = affine_identifiable_manifold(Host::Set(&s), &x, &v).unwrap().unwrap();
        let c = partial_smoothness_certificate(&s, &m, &x, &v, &opts()).unwrap();
        assert_eq!(c.overall, Verdict::Pass);

        let o = Polyhedron::orthant(2);
        let axis = AffineManifold {
            point: ints(&[0, 0]),
            basis: vec![ints(&[0, 1])],
            host_face: face_from_tight(&o, &[0]).unwrap().unwrap(),
        };
        let c = partial_smoothness_certificate(&o, &axis, &ints(&[0, 0]), &ints(&[-1, 0]), &opts()).unwrap();
        assert_eq!(c.sharp.verdict, Verdict::Fail);
        assert_eq!(c.overall, Verdict::Fail);

        let h = halfspace();
        let m = affine_identifiable_manifold(Host::Set(&h), &ints(&[0, 0]), &ints(&[1, 0])).unwrap().unwrap();
        let c = partial_smoothness_certificate(&h, &m, &ints(&[0, 0]), &ints(&[1, 0]), &opts()).unwrap();
        assert!([&c.prox_regular, &c.sharp, &c.continuous, &c.nondegenerate].iter().all(|c| c.verdict == Verdict::Pass));

        let bad = AffineManifold { basis: vec![ints(&[0, 1]), ints(&[0, 2])], ..axis };
        assert!(matches!(
            partial_smoothness_certificate(&o, &bad, &ints(&[0, 0]), &ints(&[-1, 0]), &opts()),
            Err(Error::InvalidManifold(_))
        ));
    }

    #[test]
    fn valley_examples() {
        let s = square();
        let (x, v) = (ints(&[1, 1]), ints(&[1, 1]));
        let m = active_manifold(&s, &x).unwrap();
        let r = valley_inclusion_check(&s, &m, &x, &v, &q(1, 1), &q(1, 2), &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let o = Polyhedron::orthant(2);
        let origin = active_manifold(&o, &ints(&[0, 0])).unwrap();
        assert_eq!(origin.dim(), 0);
        let r = valley_inclusion_check(&o, &origin, &ints(&[0, 0]), &ints(&[-1, 0]), &q(1, 1), &q(1, 2), &opts())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = &r.violations[0];
        assert!(w.x[0].is_zero() && w.x[1].is_positive());

        let h = halfspace();
        let b = active_manifold(&h, &ints(&[0, 0])).unwrap();
        let r = valley_inclusion_check(&h, &b, &ints(&[0, 0]), &ints(&[1, 0]), &q(1, 1), &q(1, 2), &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn rank_examples() {
        let s = square();
        let r = projection_rank_check(&s, &ints(&[1, 1]), &ints(&[1, 1]), &q(1, 1), 2, &opts()).unwrap();
        assert_eq!((r.verdict, r.rank, r.points), (Verdict::Pass, 0, 25));
        let r = projection_rank_check(&halfspace(), &ints(&[0, 0]), &ints(&[1, 0]), &q(1, 1), 2, &opts()).unwrap();
        assert_eq!((r.verdict, r.rank), (Verdict::Pass, 1));
        assert_eq!(r.linear_part, int_matrix(&[&[0, 0], &[0, 1]]));
        let tri = Polyhedron::new(int_matrix(&[&[1, 1], &[-1, 0], &[0, -1]]), ints(&[1, 0, 0])).unwrap();
        let r = projection_rank_check(&tri, &[q(1, 2), q(1, 2)], &[q(1, 2), q(1, 2)], &q(1, 1), 3, &opts()).unwrap();
        assert_eq!((r.verdict, r.rank), (Verdict::Pass, 1));
        assert_eq!(r.linear_part, vec![vec![q(1, 2), q(-1, 2)], vec![q(-1, 2), q(1, 2)]]);
        assert_eq!(
            projection_rank_check(&Polyhedron::orthant(2), &ints(&[0, 0]), &ints(&[-1, 0]), &q(1, 1), 2, &opts()),
            Err(Error::StrictComplementarityRequired)
        );
    }

    #[test]
    fn four_conditions_agree_on_fixtures() {
        let cases: Vec<(Polyhedron, Vector, Vector)> = vec![
            (square(), ints(&[1, 1]), ints(&[1, 1])),
            (square(), ints(&[1, 1]), ints(&[1, 0])),
            (Polyhedron::orthant(2), ints(&[0, 0]), ints(&[-1, 0])),
            (halfspace(), ints(&[0, 0]), ints(&[1, 0])),
        ];
        for (q_, x, v) in cases {
            let m = active_manifold(&q_, &x).unwrap();
            let cert = partial_smoothness_certificate(&q_, &m, &x, &v, &opts()).unwrap().overall;
            let valley = valley_inclusion_check(&q_, &m, &x, &v, &q(1, 1), &q(1, 4), &opts()).unwrap().verdict;
            let d = m.descriptor();
            let graph = graph_reduction_verify(&q_, &d, &x, &v, &opts()).unwrap().verdict;
            let ident = identifiability_verify(Host::Set(&q_), &d, &x, &v, &opts()).unwrap().verdict;
            assert_eq!([valley, graph, ident], [cert; 3], "{x:?} {v:?}");
        }
    }
}
