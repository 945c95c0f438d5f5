//! Restricted optimality and the transfer of quadratic growth from an
//! identifiable set to the whole space.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{PlqFunction, Polynomial};
use crate::identify::verify::run_schedule;
use crate::identify::{Host, IdentifiableSet, Verdict, VerifierReport, VerifyOptions, Witness};
use crate::numerics::linalg::{add, dist_sq, neg, sub, unit, zeros, Vector};
use crate::numerics::simplex::Relation;
use crate::numerics::Rational;
use crate::polyhedra::{GenCone, LocalProjector, Polyhedron};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RestrictedOptimality {
    pub max_on_m: bool,
    pub max_on_q: bool,
    pub strict_on_m: bool,
    pub strict_on_q: bool,
}

/// `{w : Aw ≤ 0}` is `{0}`: no coordinate can move inside the unit box.
pub fn cone_is_trivial(k: &Polyhedron) -> Result<bool> {
    let n = k.dim();
    for i in 0..n {
        for s in [1i64, -1] {
            let mut lp = k.lp();
            for j in 0..n {
                lp.row(unit(n, j), Relation::Le, Rational::one());
                lp.row(neg(&unit(n, j)), Relation::Le, Rational::one());
            }
            let mut c = zeros(n);
            c[i] = Rational::from_int(s);
            if lp.maximize(c).solve()?.value.is_some_and(|v| v.is_positive()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `⟨v̄, ·⟩` has a local max at `x̄` on `R`, and whether it is strict.
fn local_max(r: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<(bool, bool)> {
    let t = r.tangent_cone(xbar)?;
    let is_max = matches!(t.support(vbar)?, Some(v) if !v.is_positive());
    if !is_max {
        return Ok((false, false));
    }
    let mut k = t;
    k.push_row(neg(vbar), Rational::zero());
    Ok((true, cone_is_trivial(&k)?))
}

/// Local maximality of `⟨v̄, ·⟩` at `x̄` on `M` and on `Q`, decided on the
/// tangent cones; the two must agree.
pub fn restricted_optimality_check(
    q: &Polyhedron,
    m: &IdentifiableSet,
    xbar: &[Rational],
    vbar: &[Rational],
) -> Result<RestrictedOptimality> {
    crate::identify::verify::check_normal(Host::Set(q), xbar, vbar)?;
    let (max_on_q, strict_on_q) = local_max(q, xbar, vbar)?;
    let (mut max_on_m, mut strict_on_m) = (true, true);
    let mut any = false;
    for r in m.regions(Host::Set(q))? {
        if !r.contains(xbar) {
            continue;
        }
        any = true;
        let (a, b) = local_max(&r, xbar, vbar)?;
        max_on_m &= a;
        strict_on_m &= b;
    }
    if !any {
        return Err(Error::PointNotInSet);
    }
    if max_on_m != max_on_q {
        return Err(Error::EquivalenceViolation(format!(
            "local maximality on M ({max_on_m}) and on Q ({max_on_q}) differ"
        )));
    }
    Ok(RestrictedOptimality { max_on_m, max_on_q, strict_on_m, strict_on_q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthVerdict {
    Growth,
    NoGrowth,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub radii: Vec<Rational>,
    /// Smallest sampled `(f(x) - f(x̄))/|x - x̄|²` at each radius.
    pub lower_quotients: Vec<Option<Rational>>,
    pub verdict: GrowthVerdict,
    /// Smallest quotient over the three smallest radii.
    pub constant: Option<Rational>,
    /// The verdict was decided exactly rather than from samples.
    pub exact: bool,
}

/// Sampled quotients only: growth when the three smallest radii all stay
/// at or above `10⁻⁶` (vacuously when no point other than `x̄` was seen).
fn sampled_verdict(lower: &[Option<Rational>]) -> (GrowthVerdict, Option<Rational>) {
    let tail: Vec<&Rational> = lower.iter().rev().take(3).flatten().collect();
    let c = tail.iter().map(|v| (*v).clone()).min();
    let floor = Rational::new(1, 1_000_000);
    match &c {
        Some(v) if v < &floor => (GrowthVerdict::NoGrowth, c),
        _ => (GrowthVerdict::Growth, c),
    }
}

fn tail_constant(lower: &[Option<Rational>]) -> Option<Rational> {
    lower.iter().rev().take(3).flatten().min().cloned()
}

fn check_critical(f: &PlqFunction, xbar: &[Rational]) -> Result<()> {
    if !f.convex {
        return Err(Error::Unsupported("growth checks need a certified convex PLQ function".into()));
    }
    if !is_critical(f, xbar)? {
        return Err(Error::NotCritical);
    }
    Ok(())
}

/// Per cell through `x̄`: growth fails exactly when the critical directions
/// `T_{C∩R}(x̄) ∩ ∇⊥ ∩ ker P` contain a nonzero vector.
fn exact_growth(f: &PlqFunction, region: Option<&Polyhedron>, xbar: &[Rational]) -> Result<(bool, Vec<Vector>)> {
    let n = f.dim();
    let mut rays = Vec::new();
    let mut grows = true;
    for c in &f.cells {
        let piece = match region {
            Some(r) => c.cell.intersect(r),
            None => c.cell.clone(),
        };
        if !piece.contains(xbar) {
            continue;
        }
        let mut d = piece.tangent_cone(xbar)?;
        let g = c.gradient(xbar);
        d.push_row(g.clone(), Rational::zero());
        d.push_row(neg(&g), Rational::zero());
        rays.extend(GenCone::rays(n, d.a().clone()).polar_generators()?);
        for row in &c.p {
            d.push_row(row.clone(), Rational::zero());
            d.push_row(neg(row), Rational::zero());
        }
        if !cone_is_trivial(&d)? {
            grows = false;
        }
    }
    Ok((grows, rays))
}

fn scale_to_box(d: &[Rational], r: &Rational) -> Option<Vector> {
    let m = d.iter().map(|v| v.abs()).max()?;
    if m.is_zero() {
        return None;
    }
    let s = r / &m;
    Some(d.iter().map(|v| v * &s).collect())
}

fn quotient(f: &PlqFunction, fx0: &Rational, xbar: &[Rational], x: &[Rational]) -> Result<Option<Rational>> {
    let d2 = dist_sq(x, xbar);
    if d2.is_zero() || !f.in_domain(x) {
        return Ok(None);
    }
    Ok(Some(&(&f.eval(x)? - fx0) / &d2))
}

fn default_radius(opts: &VerifyOptions) -> Rational {
    opts.radius.clone().unwrap_or_else(|| Rational::new(1, 4))
}

fn estimate(
    f: &PlqFunction,
    regions: Option<&[Polyhedron]>,
    xbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<GrowthEstimate> {
    let n = f.dim();
    let levels = opts.levels.max(1);
    let radii = sampling::radii(&default_radius(opts), levels);
    let mut grows = true;
    let mut dirs: Vec<Vector> = (0..n).flat_map(|i| [unit(n, i), neg(&unit(n, i))]).collect();
    let mut projectors = Vec::new();
    match regions {
        None => {
            let (g, rays) = exact_growth(f, None, xbar)?;
            grows = g;
            dirs.extend(rays);
        }
        Some(rs) => {
            for r in rs {
                if !r.contains(xbar) {
                    continue;
                }
                let (g, rays) = exact_growth(f, Some(r), xbar)?;
                grows &= g;
                dirs.extend(rays);
                projectors.push((r.clone(), LocalProjector::new(r, xbar)?));
            }
            if projectors.is_empty() {
                return Err(Error::PointNotInSet);
            }
        }
    }
    let verdict = if grows { GrowthVerdict::Growth } else { GrowthVerdict::NoGrowth };
    let fx0 = f.eval(xbar)?;
    let mut rng = sampling::rng(opts.seed);
    let mut lower = Vec::with_capacity(levels);
    let b = opts.budget;
    for (k, r) in radii.iter().enumerate() {
        let count = (k + 1) * b / levels - k * b / levels;
        let mut best: Option<Rational> = None;
        for idx in 0..count {
            let x = if idx < dirs.len() {
                let Some(w) = scale_to_box(&dirs[idx], r) else { continue };
                let x = add(xbar, &w);
                if !projectors.is_empty() && !projectors.iter().any(|(reg, _)| reg.contains(&x)) {
                    continue;
                }
                x
            } else if projectors.is_empty() {
                sampling::perturb(&mut rng, xbar, r)
            } else {
                let j = rng.gen_range(0..projectors.len());
                projectors[j].1.project(&sampling::perturb(&mut rng, xbar, r))?
            };
            if let Some(qv) = quotient(f, &fx0, xbar, &x)? {
                if best.as_ref().is_none_or(|b| &qv < b) {
                    best = Some(qv);
                }
            }
        }
        lower.push(best);
    }
    Ok(GrowthEstimate { constant: tail_constant(&lower), radii, lower_quotients: lower, verdict, exact: true })
}

/// Growth estimates on `M` (a union of polyhedra) and on the whole space.
/// Verdicts are exact per cell; sampled quotients are carried as evidence.
pub fn growth_equivalence_check(
    f: &PlqFunction,
    m: &[Polyhedron],
    xbar: &[Rational],
    opts: &VerifyOptions,
) -> Result<(GrowthEstimate, GrowthEstimate)> {
    check_critical(f, xbar)?;
    let on_m = estimate(f, Some(m), xbar, opts)?;
    let ambient = estimate(f, None, xbar, opts)?;
    Ok((on_m, ambient))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthTransfer {
    /// The inequality held on `M`, so the transfer applies.
    pub applicable: bool,
    pub on_m: VerifierReport,
    pub ambient: Option<VerifierReport>,
    /// Smallest `f(x) - f(x̄) - g(x - x̄)` seen at the final radius.
    pub min_margin: Option<Rational>,
}

/// Sampled check that `f(x) > f(x̄) + g(x - x̄)` near `x̄` on `M` carries
/// over to the whole space.
pub fn growth_transfer_check(
    f: &PlqFunction,
    m: &[Polyhedron],
    xbar: &[Rational],
    g: &Polynomial,
    opts: &VerifyOptions,
) -> Result<GrowthTransfer> {
    let n = f.dim();
    if g.arity().is_some_and(|a| a > n) {
        return Err(Error::InvalidGrowthFunction);
    }
    let origin = zeros(n);
    if !g.eval(&origin).is_zero() || g.gradient(&origin).iter().take(n).any(|v| !v.is_zero()) {
        return Err(Error::InvalidGrowthFunction);
    }
    check_critical(f, xbar)?;
    let fx0 = f.eval(xbar)?;
    let margin = |x: &[Rational]| -> Result<Option<Rational>> {
        if x == xbar || !f.in_domain(x) {
            return Ok(None);
        }
        Ok(Some(&(&f.eval(x)? - &fx0) - &g.eval(&sub(x, xbar))))
    };
    let projectors: Vec<LocalProjector> =
        m.iter().filter(|r| r.contains(xbar)).map(|r| LocalProjector::new(r, xbar)).collect::<Result<_>>()?;
    if projectors.is_empty() {
        return Err(Error::PointNotInSet);
    }
    let r0 = default_radius(opts);
    let half = VerifyOptions { budget: opts.budget / 2, ..opts.clone() };
    let mut min_margin: Option<Rational> = None;
    let mut note = |v: &Rational, last: bool| {
        if last && min_margin.as_ref().is_none_or(|b| v < b) {
            min_margin = Some(v.clone());
        }
    };
    let on_m = run_schedule(&half, r0.clone(), |rng, r, last, _| {
        let j = rng.gen_range(0..projectors.len());
        let x = projectors[j].project(&sampling::perturb(rng, xbar, r))?;
        let Some(mg) = margin(&x)? else { return Ok(None) };
        note(&mg, last);
        Ok((!mg.is_positive()).then(|| Witness { x, v: vec![mg] }))
    })?;
    if on_m.verdict != Verdict::Pass {
        return Ok(GrowthTransfer { applicable: on_m.verdict == Verdict::Inconclusive, on_m, ambient: None, min_margin });
    }
    let ambient_opts = VerifyOptions { budget: opts.budget - half.budget, seed: opts.seed.wrapping_add(1), ..opts.clone() };
    let dirs: Vec<Vector> = (0..n).flat_map(|i| [unit(n, i), neg(&unit(n, i))]).collect();
    let ambient = run_schedule(&ambient_opts, r0, |rng, r, last, idx| {
        let x = if idx < dirs.len() { add(xbar, &scale_to_box(&dirs[idx], r).unwrap()) } else { sampling::perturb(rng, xbar, r) };
        let Some(mg) = margin(&x)? else { return Ok(None) };
        note(&mg, last);
        Ok((!mg.is_positive()).then(|| Witness { x, v: vec![mg] }))
    })?;
    Ok(GrowthTransfer { applicable: true, on_m, ambient: Some(ambient), min_margin })
}

/// A function for the refined estimate: convex PLQ, or a polynomial.
#[derive(Debug, Clone, Copy)]
pub enum GrowthHost<'a> {
    Plq(&'a PlqFunction),
    Polynomial(&'a Polynomial),
}

/// Growth along subgradient pairs `(x, v)` with `v → 0`: prox pairs for PLQ
/// functions, gradient pairs for polynomials. Decided from samples.
pub fn refined_growth_estimate(host: GrowthHost, xbar: &[Rational], opts: &VerifyOptions) -> Result<GrowthEstimate> {
    let n = xbar.len();
    match host {
        GrowthHost::Plq(f) => check_critical(f, xbar)?,
        GrowthHost::Polynomial(p) => {
            if p.arity().is_some_and(|a| a > n) {
                return Err(Error::DimensionMismatch("polynomial uses more variables than the point has".into()));
            }
            if p.gradient(xbar).iter().take(n).any(|v| !v.is_zero()) {
                return Err(Error::NotCritical);
            }
        }
    }
    let value = |x: &[Rational]| -> Result<Rational> {
        match host {
            GrowthHost::Plq(f) => f.eval(x),
            GrowthHost::Polynomial(p) => Ok(p.eval(x)),
        }
    };
    let fx0 = value(xbar)?;
    let levels = opts.levels.max(1);
    let radii = sampling::radii(&default_radius(opts), levels);
    let mut rng = sampling::rng(opts.seed);
    let b = opts.budget;
    let mut lower = Vec::with_capacity(levels);
    for (k, r) in radii.iter().enumerate() {
        let count = (k + 1) * b / levels - k * b / levels;
        let mut best: Option<Rational> = None;
        for _ in 0..count {
            let z = sampling::perturb(&mut rng, xbar, r);
            let x = match host {
                GrowthHost::Plq(f) => f.prox(&Rational::one(), &z)?,
                GrowthHost::Polynomial(_) => z,
            };
            let d2 = dist_sq(&x, xbar);
            if d2.is_zero() {
                continue;
            }
            let qv = &(&value(&x)? - &fx0) / &d2;
            if best.as_ref().is_none_or(|b| &qv < b) {
                best = Some(qv);
            }
        }
        lower.push(best);
    }
    let (verdict, constant) =
        if b == 0 { (GrowthVerdict::Inconclusive, None) } else { sampled_verdict(&lower) };
    Ok(GrowthEstimate { radii, lower_quotients: lower, verdict, constant, exact: false })
}

/// `0 ∈ ∂f(x̄)`.
pub fn is_critical(f: &PlqFunction, xbar: &[Rational]) -> Result<bool> {
    f.subdifferential(xbar)?.contains(&zeros(f.dim()))
}
