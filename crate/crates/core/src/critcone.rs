//! Critical cones, tangential approximation and the polyhedral reduction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::PolyhedralFunction;
use crate::identify::verify::{check_normal, run_schedule};
use crate::identify::{minimal_identifiable_set, Host, IdentifiableSet, VerifierReport, VerifyOptions, Witness};
use crate::numerics::linalg::{add, dist_sq, neg, sub, zeros};
use crate::numerics::Rational;
use crate::polyhedra::{faces_enumerate, project_out, GenCone, LocalProjector, NormalConeCache, Polyhedron, Projector};
use crate::sampling;

/// A polyhedral cone `{w : Aw ≤ 0}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriticalCone {
    pub k: Polyhedron,
}

impl CriticalCone {
    pub fn contains(&self, w: &[Rational]) -> bool {
        self.k.contains(w)
    }

    pub fn same_set(&self, other: &Polyhedron) -> Result<bool> {
        self.k.same_set(other)
    }
}

/// `K_Q(x̄, v̄) = T_Q(x̄) ∩ v̄⊥`.
pub fn critical_cone(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<CriticalCone> {
    check_normal(Host::Set(q), xbar, vbar)?;
    let mut k = q.tangent_cone(xbar)?;
    k.push_row(vbar.to_vec(), Rational::zero());
    k.push_row(neg(vbar), Rational::zero());
    Ok(CriticalCone { k })
}

/// `N_{N_Q(x̄)}(v̄)` computed from an inequality description of `N_Q(x̄)`:
/// the rows active at `v̄` generate it.
pub fn critical_cone_via_normal_cone(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<CriticalCone> {
    check_normal(Host::Set(q), xbar, vbar)?;
    let h = q.normal_cone(xbar)?.to_polyhedron()?;
    let act = h.active_set(vbar)?;
    let gens = act.iter().map(|&i| h.row(i).clone()).collect();
    Ok(CriticalCone { k: GenCone::rays(q.dim(), gens).to_polyhedron()? })
}

/// `K_f(x̄, v̄) = N_{∂f(x̄)}(v̄) = {w : ⟨w, aᵢ - v̄⟩ ≤ 0, ⟨w, cⱼ⟩ ≤ 0}` over
/// the active pieces and constraints.
pub fn critical_cone_f(f: &PolyhedralFunction, xbar: &[Rational], vbar: &[Rational]) -> Result<CriticalCone> {
    check_normal(Host::Function(f), xbar, vbar)?;
    let (ia, ja) = f.active_sets(xbar)?;
    let mut k = Polyhedron::universe(f.dim());
    for i in ia {
        k.push_row(sub(&f.pieces[i].a, vbar), Rational::zero());
    }
    for j in ja {
        k.push_row(f.constraints[j].c.clone(), Rational::zero());
    }
    Ok(CriticalCone { k })
}

/// Whether the tangent cone of the face `M` at `x̄` equals `K_Q(x̄, v̄)`.
pub fn tangential_approx_verify(q: &Polyhedron, m: &IdentifiableSet, xbar: &[Rational], vbar: &[Rational]) -> Result<bool> {
    let IdentifiableSet::Face(face) = m else {
        return Err(Error::UnsupportedDescriptor("tangential approximation needs a single face".into()));
    };
    let k = critical_cone(q, xbar, vbar)?;
    let tm = face.region_set(q).tangent_cone(xbar)?;
    k.same_set(&tm)
}

/// The default locality radius of the reduction check.
pub fn reduction_radius(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<Rational> {
    crate::identify::instance_radius(Host::Set(q), xbar, vbar)
}

/// Sampled check of `gph N_Q - (x̄, v̄) = gph N_K` within the cube of radius
/// `δ`, at that single radius.
///
/// Samples rotate through three kinds: a pair `(w, u)` on a coarse grid with
/// both memberships decided exactly; a graph point of `N_Q` obtained by
/// projection, tested against `N_K`; and a graph point of `N_K`, tested
/// against `N_Q`.
pub fn polyhedral_reduction_verify(
    q: &Polyhedron,
    xbar: &[Rational],
    vbar: &[Rational],
    delta: &Rational,
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    if !delta.is_positive() {
        return Err(Error::InvalidFunction("δ must be positive".into()));
    }
    let k = critical_cone(q, xbar, vbar)?;
    let n = q.dim();
    let nq = NormalConeCache::new(q.clone());
    let nk = NormalConeCache::new(k.k.clone());
    let pq = LocalProjector::new(q, xbar)?;
    let pk = Projector::new(k.k.clone())?;
    let origin = zeros(n);
    let center = add(xbar, vbar);
    let single = VerifyOptions { levels: 1, ..opts.clone() };
    run_schedule(&single, delta.clone(), |rng, r, _, idx| {
        let (w, u, ok) = match idx % 3 {
            0 => {
                let w = sampling::perturb_grid(rng, &origin, r, 4);
                let u = sampling::perturb_grid(rng, &origin, r, 4);
                let lhs = nq.contains(&add(xbar, &w), &add(vbar, &u))?;
                let rhs = nk.contains(&w, &u)?;
                (w, u, lhs == rhs)
            }
            1 => {
                let z = sampling::perturb(rng, &center, r);
                let x = pq.project(&z)?;
                let w = sub(&x, xbar);
                let u = sub(&sub(&z, &x), vbar);
                let ok = nk.contains(&w, &u)?;
                (w, u, ok)
            }
            _ => {
                let p = sampling::perturb(rng, &origin, r);
                let w = pk.project(&p)?;
                let u = sub(&p, &w);
                let ok = nq.contains(&add(xbar, &w), &add(vbar, &u))?;
                (w, u, ok)
            }
        };
        Ok((!ok).then_some(Witness { x: w, v: u }))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainLevel {
    pub radius: Rational,
    /// Maximal tight sets of the faces at `x̄` whose normal cone meets the
    /// open ball of this radius around `v̄`.
    pub faces: Vec<Vec<usize>>,
    /// `clco T_{M_i}(x̄)`.
    pub tangent_cone: Polyhedron,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub levels: Vec<ChainLevel>,
    pub stabilizes: bool,
    /// First level from which the face sets no longer change.
    pub stable_from: Option<usize>,
    pub stable_set: Option<IdentifiableSet>,
    pub intersection_equals_critical_cone: bool,
}

/// Convex hull of a union of cones, as the projection of their Minkowski sum.
fn cone_hull(n: usize, cones: &[Polyhedron]) -> Result<Polyhedron> {
    if cones.is_empty() {
        let mut p = Polyhedron::universe(n);
        for i in 0..n {
            let mut e = zeros(n);
            e[i] = Rational::one();
            p.push_row(e.clone(), Rational::zero());
            p.push_row(neg(&e), Rational::zero());
        }
        return Ok(p);
    }
    if cones.len() == 1 {
        return Ok(cones[0].clone());
    }
    let l = cones.len();
    let total = n * (l + 1);
    let mut big = Polyhedron::universe(total);
    for d in 0..n {
        let mut row = zeros(total);
        row[d] = Rational::one();
        for k in 0..l {
            row[n * (k + 1) + d] = Rational::from_int(-1);
        }
        big.push_row(neg(&row), Rational::zero());
        big.push_row(row, Rational::zero());
    }
    for (k, c) in cones.iter().enumerate() {
        for i in 0..c.rows() {
            let mut row = zeros(total);
            row[n * (k + 1)..n * (k + 2)].clone_from_slice(c.row(i));
            big.push_row(row, Rational::zero());
        }
    }
    project_out(&big, n)
}

/// The nested sets `M_i = N_Q⁻¹(B_{rᵢ}(v̄))` near `x̄`, as unions of faces.
pub fn critical_cone_chain(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational], radii: &[Rational]) -> Result<ChainReport> {
    let k = critical_cone(q, xbar, vbar)?;
    let n = q.dim();
    let act = q.active_set(xbar)?;
    let local = q.cone_of_rows(&act);
    let cones = NormalConeCache::new(q.clone());
    let faces: Vec<Vec<usize>> = faces_enumerate(&local)?
        .into_iter()
        .map(|f| f.tight.iter().map(|&i| act[i]).collect())
        .collect();
    let mut dists = Vec::with_capacity(faces.len());
    for t in &faces {
        let w = cones.cone_projector(t)?.project(vbar)?;
        dists.push(dist_sq(&w, vbar));
    }
    let mut levels = Vec::new();
    for r in radii {
        let r2 = r * r;
        let chosen: Vec<Vec<usize>> = faces.iter().zip(&dists).filter(|(_, d)| **d < r2).map(|(t, _)| t.clone()).collect();
        let tcs: Vec<Polyhedron> = chosen.iter().map(|t| q.with_equalities(t).tangent_cone(xbar)).collect::<Result<_>>()?;
        levels.push(ChainLevel { radius: r.clone(), tangent_cone: cone_hull(n, &tcs)?, faces: chosen });
    }
    let mut stable_from = None;
    if let Some(last) = levels.last() {
        let mut i = levels.len() - 1;
        while i > 0 && levels[i - 1].faces == last.faces {
            i -= 1;
        }
        stable_from = Some(i);
    }
    let stabilizes = levels.len() >= 2 && stable_from.is_some_and(|s| s + 1 < levels.len());
    let stable_set = if stabilizes {
        let faces = levels.last().unwrap().faces.iter().map(|t| crate::identify::SupportFace::new(t.clone(), vec![])).collect();
        Some(IdentifiableSet::Union { faces })
    } else {
        None
    };
    let mut inter = Polyhedron::universe(n);
    for l in &levels {
        inter = inter.intersect(&l.tangent_cone);
    }
    let intersection_equals_critical_cone = !levels.is_empty() && k.same_set(&inter)?;
    Ok(ChainReport { levels, stabilizes, stable_from, stable_set, intersection_equals_critical_cone })
}

/// The chain for the Lorentz cone `{(x, t) ∈ R² × R : t ≥ |x|}` at the apex
/// with `v̄ = (e₁, -1)`, in floating point.
#[derive(Debug, Clone, Serialize)]
pub struct LorentzChainReport {
    pub radii: Vec<f64>,
    /// Half-angle around `e₁` of the boundary rays in `M_i`.
    pub half_angles: Vec<f64>,
    pub stabilizes: bool,
    /// The half-angles tend to 0, so the intersection is the ray through
    /// `(e₁, 1)`, which is the critical cone.
    pub intersection_equals_critical_cone: bool,
    pub note: String,
}

/// The boundary ray through `(u, 1)` has normals `λ(u, -1)`; their distance
/// to `v̄` is below `r` exactly when `cos∠(u, e₁) > √(4 - 2r²) - 1`.
pub fn lorentz_chain(radii: &[f64]) -> LorentzChainReport {
    let half_angles: Vec<f64> = radii
        .iter()
        .map(|r| {
            let c = (4.0 - 2.0 * r * r).max(0.0).sqrt() - 1.0;
            c.clamp(-1.0, 1.0).acos()
        })
        .collect();
    let stabilizes = half_angles.windows(2).any(|w| w[0] == w[1]);
    let intersection_equals_critical_cone = half_angles.last().is_some_and(|a| *a < 1e-2);
    LorentzChainReport {
        radii: radii.to_vec(),
        half_angles,
        stabilizes,
        intersection_equals_critical_cone,
        note: "the interchange of closed convex hull and intersection is assumed here, not verified".into(),
    }
}

/// Minimal identifiable set and critical cone together, for reports.
pub fn critical_summary(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<(IdentifiableSet, CriticalCone, bool)> {
    let m = minimal_identifiable_set(q, xbar, vbar)?;
    let k = critical_cone(q, xbar, vbar)?;
    let ok = tangential_approx_verify(q, &m, xbar, vbar)?;
    Ok((m, k, ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::Verdict;
    use crate::numerics::linalg::{int_matrix, ints};
    use crate::numerics::q;

    fn cone(rows: &[&[i64]]) -> Polyhedron {
        let a = int_matrix(rows);
        let b = zeros(a.len());
        Polyhedron::with_dim(rows.first().map_or(2, |r| r.len()), a, b).unwrap()
    }

    #[test]
    fn orthant_critical_cones() {
        let o = Polyhedron::orthant(2);
        let z = ints(&[0, 0]);
        let k = critical_cone(&o, &z, &ints(&[-1, 0])).unwrap();
        assert!(k.same_set(&cone(&[&[1, 0], &[-1, 0], &[0, -1]])).unwrap());
        let k0 = critical_cone(&o, &z, &ints(&[0, 0])).unwrap();
        assert!(k0.same_set(&o).unwrap());
        let kp = critical_cone(&o, &z, &ints(&[-1, -1])).unwrap();
        assert!(kp.same_set(&cone(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]])).unwrap());
        assert_eq!(critical_cone(&o, &z, &ints(&[1, 0])), Err(Error::NotANormal));
        for v in [ints(&[-1, 0]), ints(&[0, 0]), ints(&[-1, -1])] {
            let a = critical_cone(&o, &z, &v).unwrap();
            let b = critical_cone_via_normal_cone(&o, &z, &v).unwrap();
            assert!(a.same_set(&b.k).unwrap());
        }
    }

    #[test]
    fn function_critical_cones() {
        let abs = PolyhedralFunction::abs();
        let k = critical_cone_f(&abs, &ints(&[0]), &ints(&[1])).unwrap();
        assert!(k.same_set(&cone(&[&[-1]])).unwrap());
        let k0 = critical_cone_f(&abs, &ints(&[0]), &ints(&[0])).unwrap();
        assert!(k0.same_set(&cone(&[&[1], &[-1]])).unwrap());
        let mx = PolyhedralFunction::max_coordinate(2);
        let k = critical_cone_f(&mx, &ints(&[0, 0]), &[q(1, 2), q(1, 2)]).unwrap();
        assert!(k.same_set(&cone(&[&[1, -1], &[-1, 1]])).unwrap());
        assert_eq!(critical_cone_f(&abs, &ints(&[0]), &ints(&[3])), Err(Error::NotASubgradient));
    }

    #[test]
    fn tangential_examples() {
        let o = Polyhedron::orthant(2);
        let m = IdentifiableSet::face(vec![0], vec![]);
        assert!(tangential_approx_verify(&o, &m, &ints(&[0, 0]), &ints(&[-1, 0])).unwrap());
        let s = Polyhedron::cube(2, q(0, 1), q(1, 1));
        assert!(tangential_approx_verify(&s, &IdentifiableSet::face(vec![0], vec![]), &[q(1, 1), q(1, 2)], &ints(&[1, 0])).unwrap());
        assert!(tangential_approx_verify(&o, &IdentifiableSet::face(vec![], vec![]), &ints(&[1, 1]), &ints(&[0, 0])).unwrap());
        assert!(!tangential_approx_verify(&o, &IdentifiableSet::face(vec![0, 1], vec![]), &ints(&[0, 0]), &ints(&[-1, 0])).unwrap());
    }

    #[test]
    fn reduction_examples() {
        let opts = VerifyOptions::with_budget(600, 3);
        let o = Polyhedron::orthant(2);
        let r = polyhedral_reduction_verify(&o, &ints(&[0, 0]), &ints(&[-1, 0]), &q(1, 4), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let s = Polyhedron::cube(2, q(0, 1), q(1, 1));
        let r = polyhedral_reduction_verify(&s, &ints(&[1, 1]), &ints(&[1, 0]), &q(1, 4), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = polyhedral_reduction_verify(&s, &ints(&[1, 1]), &ints(&[1, 0]), &q(10, 1), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(!r.violations.is_empty());
    }

    #[test]
    fn chain_examples() {
        let o = Polyhedron::orthant(2);
        let radii = [q(1, 2), q(1, 4), q(1, 8)];
        let c = critical_cone_chain(&o, &ints(&[0, 0]), &ints(&[-1, 0]), &radii).unwrap();
        assert!(c.stabilizes);
        assert_eq!(c.stable_from, Some(0));
        assert_eq!(c.levels[2].faces, vec![vec![0], vec![0, 1]]);
        assert!(c.intersection_equals_critical_cone);

        let s = Polyhedron::cube(2, q(0, 1), q(1, 1));
        let c = critical_cone_chain(&s, &ints(&[1, 1]), &ints(&[1, 1]), &radii).unwrap();
        assert!(c.stabilizes);
        assert_eq!(c.levels[2].faces, vec![vec![0, 2]]);
        assert!(c.intersection_equals_critical_cone);

        let big = critical_cone_chain(&o, &ints(&[0, 0]), &ints(&[-1, 0]), &[q(2, 1), q(1, 2)]).unwrap();
        assert_eq!(big.levels[0].faces.len(), 4);
        assert!(!big.stabilizes || big.stable_from == Some(1));
    }

    #[test]
    fn lorentz_chain_never_stabilizes() {
        let r = lorentz_chain(&[0.5, 0.25, 0.125, 0.0625, 1e-3, 1e-5]);
        assert!(!r.stabilizes);
        assert!(r.half_angles.windows(2).all(|w| w[1] < w[0]));
        assert!(r.intersection_equals_critical_cone);
    }
}
