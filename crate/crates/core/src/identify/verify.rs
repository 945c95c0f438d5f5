use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{PolyhedralFunction, PolyhedralProx};
use crate::numerics::linalg::{add, dist_sq, max_abs, scale, sub, zeros, Vector};
use crate::numerics::Rational;
use crate::polyhedra::{faces_enumerate, LocalProjector, NormalConeCache, Polyhedron};
use crate::sampling;

use super::construct::{minimal_identifiable_set, minimal_identifiable_set_f};
use super::descriptor::{Host, IdentifiableSet, SupportFace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vector,
    pub v: Vector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub verdict: Verdict,
    pub samples: usize,
    pub violations: Vec<Witness>,
    pub seed: u64,
    pub final_radius: Rational,
    #[serde(skip)]
    pub radii: Vec<Rational>,
}

/// At most this many witnesses are kept in a report.
pub const MAX_WITNESSES: usize = 32;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub budget: usize,
    pub seed: u64,
    /// Starting radius; the instance radius is used when absent.
    pub radius: Option<Rational>,
    pub levels: usize,
    /// Largest distance still counted as zero by the necessity check.
    pub tolerance: Rational,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            budget: sampling::DEFAULT_LEVELS * sampling::DEFAULT_PER_LEVEL,
            seed: 0,
            radius: None,
            levels: sampling::DEFAULT_LEVELS,
            tolerance: Rational::zero(),
        }
    }
}

impl VerifyOptions {
    pub fn with_budget(budget: usize, seed: u64) -> Self {
        VerifyOptions { budget, seed, ..Default::default() }
    }
}

/// Runs `sample(rng, radius, level_is_final, index_in_level)` along the
/// radius schedule; only failures at the final radius count.
pub(crate) fn run_schedule<F>(opts: &VerifyOptions, r0: Rational, mut sample: F) -> Result<VerifierReport>
where
    F: FnMut(&mut ChaCha8Rng, &Rational, bool, usize) -> Result<Option<Witness>>,
{
    let levels = opts.levels.max(1);
    let radii = sampling::radii(&r0, levels);
    let final_radius = radii.last().unwrap().clone();
    if opts.budget == 0 {
        return Ok(VerifierReport {
            verdict: Verdict::Inconclusive,
            samples: 0,
            violations: Vec::new(),
            seed: opts.seed,
            final_radius,
            radii,
        });
    }
    let mut rng = sampling::rng(opts.seed);
    let mut violations = Vec::new();
    let mut failed = false;
    let b = opts.budget;
    for (k, r) in radii.iter().enumerate() {
        let count = (k + 1) * b / levels - k * b / levels;
        let last = k + 1 == levels;
        for idx in 0..count {
            if let Some(w) = sample(&mut rng, r, last, idx)? {
                if last {
                    failed = true;
                    if violations.len() < MAX_WITNESSES {
                        violations.push(w);
                    }
                }
            }
        }
    }
    Ok(VerifierReport {
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        samples: b,
        violations,
        seed: opts.seed,
        final_radius,
        radii,
    })
}

/// Draws pairs of the graph of `N_Q` or `∂f` near `(x̄, v̄)` by projecting
/// (or taking the prox of) points near `x̄ + v̄`.
enum GraphSampler {
    Set(Box<LocalProjector>),
    Function(PolyhedralProx),
}

impl GraphSampler {
    fn new(host: Host, xbar: &[Rational]) -> Result<Self> {
        match host {
            Host::Set(q) => Ok(GraphSampler::Set(Box::new(LocalProjector::new(q, xbar)?))),
            Host::Function(f) => Ok(GraphSampler::Function(PolyhedralProx::around(f.clone(), xbar)?)),
            _ => Err(Error::UnsupportedDescriptor("sampling needs a set or function host".into())),
        }
    }

    fn pair(&self, z: &[Rational]) -> Result<(Vector, Vector)> {
        let x = match self {
            GraphSampler::Set(p) => p.project(z)?,
            GraphSampler::Function(p) => p.prox(&Rational::one(), z)?,
        };
        let v = sub(z, &x);
        Ok((x, v))
    }
}

pub(crate) fn check_normal(host: Host, xbar: &[Rational], vbar: &[Rational]) -> Result<()> {
    match host {
        Host::Set(q) => {
            q.check_point(vbar)?;
            if !q.normal_cone(xbar)?.contains(vbar)? {
                return Err(Error::NotANormal);
            }
        }
        Host::Function(f) => {
            if vbar.len() != f.dim() {
                return Err(Error::DimensionMismatch("subgradient has the wrong length".into()));
            }
            if !f.subdifferential(xbar)?.contains(vbar)? {
                return Err(Error::NotASubgradient);
            }
        }
        _ => return Err(Error::UnsupportedDescriptor("verification needs a set or function host".into())),
    }
    Ok(())
}

fn l1(a: &[Rational]) -> Rational {
    a.iter().map(|v| v.abs()).sum()
}

/// A starting radius small enough that, for the minimal identifiable set,
/// every sampled pair keeps the right active rows: half the smaller of the
/// inactive-row slack margin and the distance from `v̄` to the normal cones
/// of faces at `x̄` that cannot carry it, both scaled to the sup-norm cube.
pub fn instance_radius(host: Host, xbar: &[Rational], vbar: &[Rational]) -> Result<Rational> {
    match host {
        Host::Set(q) => set_radius(q, xbar, vbar),
        Host::Function(f) => {
            let fx = f.eval(xbar)?;
            let mut pt = xbar.to_vec();
            pt.push(fx);
            let mut nv = vbar.to_vec();
            nv.push(Rational::from_int(-1));
            let r = set_radius(&f.epigraph(), &pt, &nv)?;
            let lip = f.pieces.iter().map(|p| l1(&p.a)).max().unwrap_or_else(Rational::zero);
            Ok(&r / &(&lip + &Rational::one()))
        }
        _ => Err(Error::UnsupportedDescriptor("radius needs a set or function host".into())),
    }
}

fn set_radius(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<Rational> {
    let n = Rational::from_int(q.dim().max(1) as i64);
    let act = q.active_set(xbar)?;
    let mut bound: Option<Rational> = None;
    let mut take = |r: Rational| {
        bound = Some(match bound.take() {
            Some(b) => b.min(r),
            None => r,
        })
    };
    let slacks = q.slacks(xbar);
    for (i, s) in slacks.iter().enumerate() {
        let norm = l1(q.row(i));
        if !act.contains(&i) && norm.is_positive() {
            take(s / &(&norm * &n));
        }
    }
    let IdentifiableSet::Face(SupportFace { supp_lambda: supp, .. }) = minimal_identifiable_set(q, xbar, vbar)? else {
        unreachable!()
    };
    let local = q.cone_of_rows(&act);
    let cones = NormalConeCache::new(q.clone());
    let mut best: Option<Rational> = None;
    for face in faces_enumerate(&local)? {
        let rows: Vec<usize> = face.tight.iter().map(|&k| act[k]).collect();
        if supp.iter().all(|i| rows.contains(i)) {
            continue;
        }
        let w = cones.cone_projector(&rows)?.project(vbar)?;
        let d = dist_sq(&w, vbar);
        best = Some(match best {
            Some(b) => b.min(d),
            None => d,
        });
    }
    if let Some(d2) = best {
        take(&d2.sqrt_lower(30) / &n);
    }
    let r = bound.unwrap_or_else(Rational::one).min(Rational::one());
    Ok(&r * &Rational::new(1, 2))
}

fn start_radius(opts: &VerifyOptions, host: Host, xbar: &[Rational], vbar: &[Rational]) -> Result<Rational> {
    match &opts.radius {
        Some(r) if r.is_positive() => Ok(r.clone()),
        Some(_) => Err(Error::InvalidFunction("radius must be positive".into())),
        None => instance_radius(host, xbar, vbar),
    }
}

/// Sampled check that pairs of the graph converging to `(x̄, v̄)` have their
/// points in `M`.
pub fn identifiability_verify(
    host: Host,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    check_normal(host, xbar, vbar)?;
    let r0 = start_radius(opts, host, xbar, vbar)?;
    let sampler = GraphSampler::new(host, xbar)?;
    let center = add(xbar, vbar);
    run_schedule(opts, r0, |rng, r, _, _| {
        let z = sampling::perturb(rng, &center, r);
        let (x, v) = sampler.pair(&z)?;
        Ok((!m.contains(host, &x)?).then_some(Witness { x, v }))
    })
}

/// The same check run on `epi f` with the lifted descriptor and `(v̄, -1)`.
pub fn identifiability_verify_epigraph(
    f: &PolyhedralFunction,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    let (epi, pt, nv, lifted) = lift(f, m, xbar, vbar)?;
    identifiability_verify(Host::Set(&epi), &lifted, &pt, &nv, opts)
}

/// Necessity on the epigraph, as for [`identifiability_verify_epigraph`].
pub fn necessity_verify_epigraph(
    f: &PolyhedralFunction,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    let (epi, pt, nv, lifted) = lift(f, m, xbar, vbar)?;
    necessity_verify(Host::Set(&epi), &lifted, &pt, &nv, opts)
}

fn lift(
    f: &PolyhedralFunction,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
) -> Result<(Polyhedron, Vector, Vector, IdentifiableSet)> {
    let mut pt = xbar.to_vec();
    pt.push(f.eval(xbar)?);
    let mut nv = vbar.to_vec();
    nv.push(Rational::from_int(-1));
    Ok((f.epigraph(), pt, nv, m.lift_to_epigraph(f)?))
}

enum ConeDistance {
    Set(NormalConeCache),
    Function(crate::functions::SubdifferentialCache),
}

impl ConeDistance {
    fn new(host: Host) -> Result<Self> {
        match host {
            Host::Set(q) => Ok(ConeDistance::Set(NormalConeCache::new(q.clone()))),
            Host::Function(f) => Ok(ConeDistance::Function(crate::functions::SubdifferentialCache::new(f.clone()))),
            _ => Err(Error::UnsupportedDescriptor("distances need a set or function host".into())),
        }
    }

    /// Nearest element of `N_Q(x)` or `∂f(x)` to `v`.
    fn nearest(&self, x: &[Rational], v: &[Rational]) -> Result<Vector> {
        match self {
            ConeDistance::Set(c) => {
                let act = c.polyhedron().active_set(x)?;
                c.cone_projector(&act)?.project(v)
            }
            ConeDistance::Function(c) => c.nearest(x, v),
        }
    }
}

/// Projectors onto the pieces of `M` that contain `x̄`.
fn region_projectors(host: Host, m: &IdentifiableSet, xbar: &[Rational]) -> Result<Vec<LocalProjector>> {
    let mut out = Vec::new();
    for r in m.regions(host)? {
        if r.contains(xbar) {
            out.push(LocalProjector::new(&r, xbar)?);
        }
    }
    if out.is_empty() {
        return Err(Error::PointNotInSet);
    }
    Ok(out)
}

/// Sampled check that `v̄` stays (up to the tolerance) in the normal cone or
/// subdifferential at points of `M` approaching `x̄`; distances are exact.
pub fn necessity_verify(
    host: Host,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    check_normal(host, xbar, vbar)?;
    let r0 = start_radius(opts, host, xbar, vbar)?;
    let regions = region_projectors(host, m, xbar)?;
    let dist = ConeDistance::new(host)?;
    let tol2 = &opts.tolerance * &opts.tolerance;
    run_schedule(opts, r0, |rng, r, _, _| {
        let k = rng.gen_range(0..regions.len());
        let x = regions[k].project(&sampling::perturb(rng, xbar, r))?;
        let w = dist.nearest(&x, vbar)?;
        Ok((dist_sq(&w, vbar) > tol2).then_some(Witness { x, v: w }))
    })
}

/// Two-sided sampled check that `gph N_Q` and `gph N_M` agree near
/// `(x̄, v̄)` when `M` is a face of `Q`.
pub fn graph_reduction_verify(
    q: &Polyhedron,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    let IdentifiableSet::Face(face) = m else {
        return Err(Error::UnsupportedDescriptor("graph reduction needs a single face".into()));
    };
    check_normal(Host::Set(q), xbar, vbar)?;
    let qm = face.region_set(q);
    if !qm.contains(xbar) {
        return Err(Error::PointNotInSet);
    }
    let r0 = start_radius(opts, Host::Set(q), xbar, vbar)?;
    let pq = LocalProjector::new(q, xbar)?;
    let pm = LocalProjector::new(&qm, xbar)?;
    let nq = NormalConeCache::new(q.clone());
    let nm = NormalConeCache::new(qm.clone());
    let center = add(xbar, vbar);
    run_schedule(opts, r0, |rng, r, _, idx| {
        let z = sampling::perturb(rng, &center, r);
        let ok = if idx % 2 == 0 {
            let x = pq.project(&z)?;
            let v = sub(&z, &x);
            let ok = nm.contains(&x, &v)?;
            (ok, x, v)
        } else {
            let x = pm.project(&z)?;
            let v = sub(&z, &x);
            let ok = nq.contains(&x, &v)?;
            (ok, x, v)
        };
        Ok((!ok.0).then_some(Witness { x: ok.1, v: ok.2 }))
    })
}

/// Sampled check that `P_Q(U)` is the minimal identifiable set near `x̄`,
/// `U = {x + λv : x ∈ M, v ∈ N_Q(x), |x - x̄| < ε, |v - v̄| < ε}`.
///
/// Even samples take `x ∈ M` near `x̄` and ask for a normal within `ε` of
/// `v̄` (so `x ∈ P_Q(U)`); odd samples perturb `x̄ + λv̄` and ask that the
/// projection lands in `M` with a normal within `ε` (so the perturbed point
/// lies in `U`). At the final radius the odd samples start with the grid
/// `{-r, 0, r}ⁿ` when it fits.
pub fn projection_representation(
    q: &Polyhedron,
    xbar: &[Rational],
    vbar: &[Rational],
    lambda: &Rational,
    eps: &Rational,
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    if !lambda.is_positive() || !eps.is_positive() {
        return Err(Error::InvalidFunction("λ and ε must be positive".into()));
    }
    let host = Host::Set(q);
    check_normal(host, xbar, vbar)?;
    let m = minimal_identifiable_set(q, xbar, vbar)?;
    let n = q.dim();
    let cap = &(eps * &lambda.clone().min(Rational::one())) / &Rational::from_int(2 * (n as i64 + 1));
    let r0 = start_radius(opts, host, xbar, vbar)?.min(cap);
    let regions = region_projectors(host, &m, xbar)?;
    let pq = LocalProjector::new(q, xbar)?;
    let cones = ConeDistance::new(host)?;
    let eps2 = eps * eps;
    let center = add(xbar, &scale(lambda, vbar));
    let grid = if n <= 6 { 3usize.pow(n as u32) } else { 0 };
    run_schedule(opts, r0, |rng, r, last, idx| {
        if idx % 2 == 0 {
            let k = rng.gen_range(0..regions.len());
            let x = regions[k].project(&sampling::perturb(rng, xbar, r))?;
            let w = cones.nearest(&x, vbar)?;
            let ok = dist_sq(&x, xbar) < eps2 && dist_sq(&w, vbar) < eps2;
            return Ok((!ok).then_some(Witness { x, v: w }));
        }
        let j = idx / 2;
        let z = if last && j < grid {
            let mut p = zeros(n);
            let mut code = j;
            for c in p.iter_mut() {
                *c = r * &Rational::from_int((code % 3) as i64 - 1);
                code /= 3;
            }
            add(&center, &p)
        } else {
            sampling::perturb(rng, &center, r)
        };
        let x = pq.project(&z)?;
        let v = scale(&lambda.recip(), &sub(&z, &x));
        let ok = m.contains(host, &x)? && dist_sq(&x, xbar) < eps2 && dist_sq(&v, vbar) < eps2;
        Ok((!ok).then_some(Witness { x, v }))
    })
}

/// Sup-norm distance between two pairs; used by callers that post-filter
/// witnesses.
pub fn pair_distance(a: &Witness, xbar: &[Rational], vbar: &[Rational]) -> Rational {
    max_abs(&sub(&a.x, xbar)).max(max_abs(&sub(&a.v, vbar)))
}

/// Minimal identifiable set for a set or function host.
pub fn minimal_for_host(host: Host, xbar: &[Rational], vbar: &[Rational]) -> Result<IdentifiableSet> {
    match host {
        Host::Set(q) => minimal_identifiable_set(q, xbar, vbar),
        Host::Function(f) => minimal_identifiable_set_f(f, xbar, vbar),
        _ => Err(Error::UnsupportedDescriptor("minimal sets are built for set and function hosts".into())),
    }
}
