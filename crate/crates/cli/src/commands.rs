use idkit::algorithms::{first_tail_index, identification_monitor, projected_gradient, proximal_point, IterationTrace};
use idkit::critcone::{
    critical_cone, critical_cone_f, polyhedral_reduction_verify, reduction_radius, tangential_approx_verify,
};
use idkit::functions::{PlqFunction, PolyhedralFunction};
use idkit::identify::{
    graph_reduction_verify, identifiability_verify, instance_radius, minimal_for_host, minimal_identifiable_face,
    minimal_identifiable_set, minimal_identifiable_set_composite, minimal_identifiable_set_f, multiplier_polytope,
    multiplier_set_for_set, necessity_verify, Host, IdentifiableSet, MultiplierSet, Verdict, VerifyOptions,
};
use idkit::manifold::{
    active_manifold, affine_identifiable_manifold, partial_smoothness_certificate, projection_rank_check,
    valley_inclusion_check,
};
use idkit::numerics::linalg::{neg, zeros};
use idkit::numerics::{Rational, Vector};
use idkit::optimality::{
    growth_equivalence_check, growth_transfer_check, is_critical, restricted_optimality_check, GrowthVerdict,
};
use idkit::polyhedra::{ppm_minimal_identifiable, Polyhedron};
use idkit::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::problem::{Problem, ProblemFile};
use crate::CliError;

/// How a command ended; decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Fail,
    Inconclusive,
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Outcome::Success,
            Verdict::Fail => Outcome::Fail,
            Verdict::Inconclusive => Outcome::Inconclusive,
        }
    }
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Success => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// The worse of two outcomes.
    pub fn and(self, other: Outcome) -> Outcome {
        match (self, other) {
            (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
            (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Outcome::Inconclusive,
            _ => Outcome::Success,
        }
    }
}

pub struct Report {
    pub outcome: Outcome,
    pub body: Value,
}

impl Report {
    pub(crate) fn ok(body: Value) -> Self {
        Report { outcome: Outcome::Success, body }
    }
}

/// Flags shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub radius: Option<Rational>,
}

impl Settings {
    fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Usage("this command needs --seed".into()))
    }

    fn verify_options(&self, file: Option<&ProblemFile>) -> Result<VerifyOptions, CliError> {
        let mut opts = VerifyOptions { seed: self.seed()?, radius: self.radius.clone(), ..Default::default() };
        if let Some(b) = self.budget {
            opts.budget = b;
        }
        if let Some(f) = file {
            let o = f.options();
            if let Some(l) = o.levels {
                opts.levels = l;
            }
            if let Some(t) = &o.tolerance {
                opts.tolerance = t.clone();
            }
        }
        Ok(opts)
    }
}

pub fn to_json<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize to JSON")
}

fn host(problem: &Problem) -> Result<Host<'_>, CliError> {
    match problem {
        Problem::Polyhedron(q) => Ok(Host::Set(q)),
        Problem::PolyFunction(f) => Ok(Host::Function(f)),
        Problem::Composite(c) => Ok(Host::Composite(c)),
        Problem::Plq(_) => Err(unsupported("PLQ problems")),
        Problem::Ppm(_) => Err(unsupported("PPM problems")),
    }
}

fn unsupported(what: &str) -> CliError {
    CliError::Core(Error::Unsupported(format!("{what} are not supported by this command")))
}

fn polyhedron(problem: &Problem) -> Result<&Polyhedron, CliError> {
    match problem {
        Problem::Polyhedron(q) => Ok(q),
        _ => Err(unsupported("non-POLYHEDRON problems")),
    }
}

fn multipliers_json(ms: &MultiplierSet) -> Result<Value, CliError> {
    let (strict, witness) = ms.strict_complementarity()?;
    Ok(json!({
        "lambda_index": ms.lambda_index,
        "mu_index": ms.mu_index,
        "polytope": to_json(&ms.polytope),
        "vertices": ms.vertices().ok().map(|v| to_json(&v)),
        "strict_complementarity": strict,
        "max_support_witness": to_json(&witness),
    }))
}

pub fn analyze(file: &ProblemFile) -> Result<Report, CliError> {
    let x = file.x()?;
    let body = match &file.problem {
        Problem::Polyhedron(q) => {
            if !q.contains(x) {
                return Err(Error::PointNotInSet.into());
            }
            let nc = q.normal_cone(x)?;
            let v_in = file.query.v.as_ref().map(|v| nc.contains(v)).transpose()?;
            json!({
                "kind": "POLYHEDRON",
                "x": to_json(x),
                "active_set": q.active_set(x)?,
                "tangent_cone": to_json(&q.tangent_cone(x)?),
                "normal_cone": to_json(&nc),
                "v_in_normal_cone": v_in,
            })
        }
        Problem::PolyFunction(f) => {
            if !f.in_domain(x) {
                return Err(Error::PointNotInDomain.into());
            }
            let (pieces, constraints) = f.active_sets(x)?;
            let sd = f.subdifferential(x)?;
            let v_in = file.query.v.as_ref().map(|v| sd.contains(v)).transpose()?;
            json!({
                "kind": "POLY_FUNCTION",
                "x": to_json(x),
                "value": to_json(&f.value(x)?),
                "active_pieces": pieces,
                "active_constraints": constraints,
                "subdifferential": to_json(&sd),
                "horizon_subdifferential": to_json(&f.horizon_subdifferential(x)?),
                "v_in_subdifferential": v_in,
            })
        }
        Problem::Plq(f) => {
            if !f.in_domain(x) {
                return Err(Error::PointNotInDomain.into());
            }
            let sd = f.subdifferential(x)?;
            json!({
                "kind": "PLQ",
                "x": to_json(x),
                "value": to_json(&f.value(x)?),
                "cells": f.cells_at(x),
                "subdifferential": to_json(&sd),
                "critical": sd.contains(&zeros(f.dim()))?,
            })
        }
        Problem::Composite(c) => {
            let qualified = c.qualification_check(x)?;
            let sd = if qualified { Some(to_json(&c.subdifferential(x)?)) } else { None };
            json!({
                "kind": "COMPOSITE",
                "x": to_json(x),
                "value": to_json(&c.value(x)?),
                "inner_value": to_json(&c.inner.eval(x)?),
                "jacobian": to_json(&c.inner.jacobian(x)?),
                "qualification": qualified,
                "subdifferential": sd,
            })
        }
        Problem::Ppm(g) => {
            let v = file.v()?;
            json!({
                "kind": "PPM",
                "x": to_json(x),
                "v": to_json(v),
                "pieces": g.pieces_at(x, v)?,
            })
        }
    };
    Ok(Report::ok(body))
}

pub fn identify(file: &ProblemFile, settings: &Settings) -> Result<Report, CliError> {
    let opts = settings.verify_options(Some(file))?;
    let (x, v) = (file.x()?, file.v()?);
    let body = match &file.problem {
        Problem::Polyhedron(q) => {
            let m = minimal_identifiable_set(q, x, v)?;
            let manifold = affine_identifiable_manifold(Host::Set(q), x, v)?;
            let certificate = match &manifold {
                Some(mf) => Some(to_json(&partial_smoothness_certificate(q, mf, x, v, &opts)?)),
                None => None,
            };
            json!({
                "kind": "POLYHEDRON",
                "multipliers": multipliers_json(&multiplier_set_for_set(q, x, v)?)?,
                "minimal_identifiable_set": to_json(&m),
                "face": to_json(&minimal_identifiable_face(q, x, v)?),
                "critical_cone": to_json(&critical_cone(q, x, v)?),
                "restricted_optimality": to_json(&restricted_optimality_check(q, &m, x, v)?),
                "manifold": to_json(&manifold),
                "partial_smoothness": certificate,
                "seed": opts.seed,
            })
        }
        Problem::PolyFunction(f) => {
            let manifold = affine_identifiable_manifold(Host::Function(f), x, v)?;
            json!({
                "kind": "POLY_FUNCTION",
                "multipliers": multipliers_json(&multiplier_polytope(f, x, v)?)?,
                "minimal_identifiable_set": to_json(&minimal_identifiable_set_f(f, x, v)?),
                "critical_cone": to_json(&critical_cone_f(f, x, v)?),
                "manifold": to_json(&manifold),
                "seed": opts.seed,
            })
        }
        Problem::Composite(c) => json!({
            "kind": "COMPOSITE",
            "minimal_identifiable_set": to_json(&minimal_identifiable_set_composite(c, x, v)?),
            "seed": opts.seed,
        }),
        Problem::Ppm(g) => json!({
            "kind": "PPM",
            "pieces": g.pieces_at(x, v)?,
            "minimal_identifiable_set": to_json(&ppm_minimal_identifiable(g, x, v)?),
            "seed": opts.seed,
        }),
        Problem::Plq(_) => return Err(unsupported("PLQ problems")),
    };
    Ok(Report::ok(body))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Ident,
    Necessity,
    Reduction,
    Critcone,
    Valley,
    Rank,
    Growth,
}

fn chosen_set(file: &ProblemFile, host: Host) -> Result<IdentifiableSet, CliError> {
    match &file.options().descriptor {
        Some(d) => Ok(d.clone()),
        None => Ok(minimal_for_host(host, file.x()?, file.v()?)?),
    }
}

pub fn verify(file: &ProblemFile, check: Check, settings: &Settings) -> Result<Report, CliError> {
    let opts = settings.verify_options(Some(file))?;
    let o = file.options();
    match check {
        Check::Ident | Check::Necessity | Check::Reduction => {
            let h = host(&file.problem)?;
            let (x, v) = (file.x()?, file.v()?);
            let m = chosen_set(file, h)?;
            let report = match check {
                Check::Ident => identifiability_verify(h, &m, x, v, &opts)?,
                Check::Necessity => necessity_verify(h, &m, x, v, &opts)?,
                _ => graph_reduction_verify(polyhedron(&file.problem)?, &m, x, v, &opts)?,
            };
            Ok(Report {
                outcome: report.verdict.into(),
                body: json!({ "check": check_name(check), "set": to_json(&m), "report": to_json(&report) }),
            })
        }
        Check::Critcone => {
            let q = polyhedron(&file.problem)?;
            let (x, v) = (file.x()?, file.v()?);
            let m = chosen_set(file, Host::Set(q))?;
            let delta = match o.delta.clone().or_else(|| settings.radius.clone()) {
                Some(d) => d,
                None => reduction_radius(q, x, v)?,
            };
            let report = polyhedral_reduction_verify(q, x, v, &delta, &opts)?;
            let tangential = tangential_approx_verify(q, &m, x, v)?;
            let tangential_outcome = if tangential { Outcome::Success } else { Outcome::Fail };
            Ok(Report {
                outcome: Outcome::from(report.verdict).and(tangential_outcome),
                body: json!({
                    "check": "critcone",
                    "critical_cone": to_json(&critical_cone(q, x, v)?),
                    "delta": to_json(&delta),
                    "tangential_approximation": tangential,
                    "report": to_json(&report),
                }),
            })
        }
        Check::Valley => {
            let q = polyhedron(&file.problem)?;
            let (x, v) = (file.x()?, file.v()?);
            let manifold = match affine_identifiable_manifold(Host::Set(q), x, v)? {
                Some(m) => m,
                None => active_manifold(q, x)?,
            };
            let lambda = o.lambda.clone().unwrap_or_else(Rational::one);
            let eps = match &o.eps {
                Some(e) => e.clone(),
                None => instance_radius(Host::Set(q), x, v)?,
            };
            let report = valley_inclusion_check(q, &manifold, x, v, &lambda, &eps, &opts)?;
            Ok(Report {
                outcome: report.verdict.into(),
                body: json!({
                    "check": "valley",
                    "manifold": to_json(&manifold),
                    "lambda": to_json(&lambda),
                    "eps": to_json(&eps),
                    "report": to_json(&report),
                }),
            })
        }
        Check::Rank => {
            let q = polyhedron(&file.problem)?;
            let lambda = o.lambda.clone().unwrap_or_else(Rational::one);
            let report = projection_rank_check(q, file.x()?, file.v()?, &lambda, o.grid.unwrap_or(2), &opts)?;
            Ok(Report {
                outcome: report.verdict.into(),
                body: json!({ "check": "rank", "lambda": to_json(&lambda), "report": to_json(&report) }),
            })
        }
        Check::Growth => growth(file, &opts),
    }
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::Ident => "ident",
        Check::Necessity => "necessity",
        Check::Reduction => "reduction",
        Check::Critcone => "critcone",
        Check::Valley => "valley",
        Check::Rank => "rank",
        Check::Growth => "growth",
    }
}

fn plq_of(problem: &Problem) -> Result<(PlqFunction, Option<&PolyhedralFunction>), CliError> {
    match problem {
        Problem::Plq(f) => Ok((f.clone(), None)),
        Problem::PolyFunction(f) => Ok((f.to_plq()?, Some(f))),
        _ => Err(unsupported("problems other than PLQ and POLY_FUNCTION")),
    }
}

fn growth(file: &ProblemFile, opts: &VerifyOptions) -> Result<Report, CliError> {
    let x = file.x()?;
    let (f, poly) = plq_of(&file.problem)?;
    let o = file.options();
    let m = match (&o.m, poly) {
        (Some(m), _) => m.clone(),
        (None, Some(g)) => minimal_identifiable_set_f(g, x, &zeros(g.dim()))?.regions(Host::Function(g))?,
        (None, None) => return Err(CliError::Usage("PLQ growth checks need \"m\" in the options".into())),
    };
    let (on_m, ambient) = growth_equivalence_check(&f, &m, x, opts)?;
    let mut outcome = match (on_m.verdict, ambient.verdict) {
        (GrowthVerdict::Inconclusive, _) | (_, GrowthVerdict::Inconclusive) => Outcome::Inconclusive,
        (a, b) if a == b => Outcome::Success,
        _ => Outcome::Fail,
    };
    let transfer = match &o.g {
        Some(g) => {
            let t = growth_transfer_check(&f, &m, x, g, opts)?;
            if t.applicable {
                if let Some(a) = &t.ambient {
                    outcome = outcome.and(a.verdict.into());
                }
            }
            Some(to_json(&t))
        }
        None => None,
    };
    Ok(Report {
        outcome,
        body: json!({
            "check": "growth",
            "m": to_json(&m),
            "on_m": to_json(&on_m),
            "ambient": to_json(&ambient),
            "transfer": transfer,
            "seed": opts.seed,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Prox,
    Projgrad,
}

fn trace_json(trace: &IterationTrace, m: Option<Value>) -> Value {
    json!({
        "iterates": to_json(&trace.iterates),
        "residuals": to_json(&trace.residuals),
        "values": to_json(&trace.values),
        "identified_at": trace.identified_at,
        "set": m,
    })
}

/// Not-yet-converged runs have no valid `(x̄, v̄)` to identify against.
fn soft<T>(r: idkit::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(Error::NotANormal | Error::NotASubgradient | Error::PointNotInSet | Error::PointNotInDomain) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn run(file: &ProblemFile, method: Method) -> Result<Report, CliError> {
    let o = file.options();
    let x0 = o.x0.as_ref().ok_or_else(|| CliError::Usage("run needs \"x0\" in the options".into()))?;
    let max_iter = o.max_iter.unwrap_or(100);
    let tol = o.tol.clone().unwrap_or_else(Rational::zero);
    let last = |t: &IterationTrace| -> Vector { t.iterates.last().cloned().unwrap_or_default() };
    let (mut trace, set) = match method {
        Method::Prox => {
            let (f, poly) = plq_of(&file.problem)?;
            let lambda = o.lambda.clone().unwrap_or_else(Rational::one);
            let mut trace = proximal_point(&f, x0, &lambda, max_iter, &tol)?;
            let set = match (&o.m, poly) {
                (Some(regions), _) => {
                    trace.identified_at =
                        first_tail_index(&trace.iterates, |x| Ok(regions.iter().any(|r| r.contains(x))))?;
                    Some(to_json(regions))
                }
                (None, Some(g)) => {
                    let xbar = file.query.x.clone().unwrap_or_else(|| last(&trace));
                    let vbar = file.query.v.clone().unwrap_or_else(|| zeros(g.dim()));
                    match soft(minimal_identifiable_set_f(g, &xbar, &vbar))? {
                        Some(m) => {
                            trace.identified_at = identification_monitor(&trace, Host::Function(g), &m)?;
                            Some(to_json(&m))
                        }
                        None => None,
                    }
                }
                (None, None) => {
                    if let Some(xbar) = &file.query.x {
                        if !is_critical(&f, xbar)? {
                            return Err(Error::NotCritical.into());
                        }
                    }
                    None
                }
            };
            (trace, set)
        }
        Method::Projgrad => {
            let q = polyhedron(&file.problem)?;
            let h = o.h.as_ref().ok_or_else(|| CliError::Usage("projgrad needs the objective \"h\"".into()))?;
            let step = o.step.clone().unwrap_or_else(|| Rational::new(1, 2));
            let mut trace = projected_gradient(h, q, x0, &step, max_iter, &tol)?;
            let xbar = file.query.x.clone().unwrap_or_else(|| last(&trace));
            let vbar = file.query.v.clone().unwrap_or_else(|| neg(&h.gradient(&xbar)));
            let set = match soft(minimal_identifiable_set(q, &xbar, &vbar))? {
                Some(m) => {
                    trace.identified_at = identification_monitor(&trace, Host::Set(q), &m)?;
                    Some(to_json(&m))
                }
                None => None,
            };
            (trace, set)
        }
    };
    trace.certificates.clear();
    Ok(Report::ok(trace_json(&trace, set)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Demo {
    Lorentz,
    Quartic,
    Orthant,
    Square,
    Maxfun,
}

pub struct DemoParams {
    pub eps: Rational,
    pub eps_prime: Rational,
    pub max_n: u32,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams { eps: Rational::new(1, 2), eps_prime: Rational::new(1, 4), max_n: 10 }
    }
}

pub fn demo(which: Demo, params: &DemoParams, settings: &Settings) -> Result<Report, CliError> {
    crate::demos::run(which, params, settings)
}

pub(crate) fn verify_set(
    q: &Polyhedron,
    x: &[Rational],
    v: &[Rational],
    opts: &VerifyOptions,
) -> Result<(Outcome, Value), CliError> {
    let m = minimal_identifiable_set(q, x, v)?;
    let ident = identifiability_verify(Host::Set(q), &m, x, v, opts)?;
    let nec = necessity_verify(Host::Set(q), &m, x, v, opts)?;
    let outcome = Outcome::from(ident.verdict).and(nec.verdict.into());
    Ok((
        outcome,
        json!({
            "x": to_json(&x),
            "v": to_json(&v),
            "minimal_identifiable_set": to_json(&m),
            "face": to_json(&minimal_identifiable_face(q, x, v)?),
            "strict_complementarity": multiplier_set_for_set(q, x, v)?.strict_complementarity()?.0,
            "critical_cone": to_json(&critical_cone(q, x, v)?),
            "identifiability": to_json(&ident),
            "necessity": to_json(&nec),
        }),
    ))
}

pub(crate) fn settings_options(settings: &Settings) -> Result<VerifyOptions, CliError> {
    settings.verify_options(None)
}
