use idkit::algorithms::{identification_monitor, projected_gradient};
use idkit::critcone::lorentz_chain;
use idkit::functions::{PolyhedralFunction, Polynomial};
use idkit::identify::{
    identifiability_verify, lorentz_demo, minimal_identifiable_set, minimal_identifiable_set_f, multiplier_polytope,
    necessity_verify, quartic_demo, Host,
};
use idkit::manifold::{
    affine_identifiable_manifold, partial_smoothness_certificate, projection_rank_check, valley_inclusion_check,
};
use idkit::numerics::linalg::ints;
use idkit::numerics::{q, Rational};
use idkit::polyhedra::Polyhedron;
use serde_json::{json, Value};

use crate::commands::{settings_options, to_json, verify_set, Demo, DemoParams, Outcome, Report};
use crate::CliError;

pub fn run(which: Demo, params: &DemoParams, settings: &crate::commands::Settings) -> Result<Report, CliError> {
    let opts = settings_options(settings)?;
    match which {
        Demo::Lorentz => {
            let report = lorentz_demo(&params.eps, &params.eps_prime);
            let chain = lorentz_chain(&[1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]);
            let narrative = if report.stabilizes {
                "the chain M_eps stabilizes".to_string()
            } else {
                format!(
                    "{} exact points of M_eps \\ M_eps' down to radius 1e-6: no locally minimal identifiable set",
                    report.witnesses.len()
                )
            };
            Ok(Report::ok(json!({
                "demo": "lorentz",
                "report": to_json(&report),
                "critical_cone_chain": to_json(&chain),
                "narrative": narrative,
            })))
        }
        Demo::Quartic => {
            let report = quartic_demo(params.max_n);
            let curves: Vec<Value> = report
                .curves
                .iter()
                .map(|c| {
                    json!({
                        "n": c.n,
                        "formula": c.formula,
                        "observed_limit": c.observed_limit,
                        "difference": c.observed_limit - c.formula,
                    })
                })
                .collect();
            Ok(Report::ok(json!({
                "demo": "quartic",
                "report": to_json(&report),
                "limits": curves,
                "narrative": "gradients along x -> (x, x^2/n) stay away from 0 while diagonal points carry gradients tending to 0; no locally minimal identifiable set exists at the origin",
            })))
        }
        Demo::Orthant => {
            let q = Polyhedron::orthant(2);
            let x = ints(&[0, 0]);
            let (a, edge) = verify_set(&q, &x, &ints(&[-1, 0]), &opts)?;
            let (b, vertex) = verify_set(&q, &x, &ints(&[-1, -1]), &opts)?;
            Ok(Report {
                outcome: a.and(b),
                body: json!({
                    "demo": "orthant",
                    "degenerate": edge,
                    "strict": vertex,
                    "narrative": "M = {x >= 0 : x_i = 0 for i in supp v}; the edge for v = (-1,0), the origin for v = (-1,-1)",
                }),
            })
        }
        Demo::Square => {
            let unit = Polyhedron::cube(2, Rational::zero(), Rational::one());
            let (x, v) = (ints(&[1, 1]), ints(&[1, 1]));
            let (sets, body) = verify_set(&unit, &x, &v, &opts)?;
            let manifold = affine_identifiable_manifold(Host::Set(&unit), &x, &v)?
                .ok_or(idkit::Error::StrictComplementarityRequired)?;
            let cert = partial_smoothness_certificate(&unit, &manifold, &x, &v, &opts)?;
            let valley = valley_inclusion_check(&unit, &manifold, &x, &v, &Rational::one(), &q(1, 2), &opts)?;
            let rank = projection_rank_check(&unit, &x, &v, &Rational::one(), 2, &opts)?;
            // h(x) = |x - (2, 1/2)|²/2 up to a constant
            let h = Polynomial::from_terms(&[
                (q(1, 2), &[2, 0]),
                (q(1, 2), &[0, 2]),
                (q(-2, 1), &[1, 0]),
                (q(-1, 2), &[0, 1]),
            ]);
            let mut trace = projected_gradient(&h, &unit, &ints(&[0, 0]), &q(1, 2), 60, &Rational::zero())?;
            let limit = vec![Rational::one(), q(1, 2)];
            let edge_normal = ints(&[1, 0]);
            let edge = minimal_identifiable_set(&unit, &limit, &edge_normal)?;
            trace.identified_at = identification_monitor(&trace, Host::Set(&unit), &edge)?;
            trace.certificates.clear();
            let outcome = sets
                .and(cert.overall.into())
                .and(valley.verdict.into())
                .and(rank.verdict.into())
                .and(if trace.identified_at.is_some() { Outcome::Success } else { Outcome::Fail });
            Ok(Report {
                outcome,
                body: json!({
                    "demo": "square",
                    "vertex": body,
                    "manifold": to_json(&manifold),
                    "partial_smoothness": to_json(&cert),
                    "valley": to_json(&valley),
                    "rank": to_json(&rank),
                    "projected_gradient": {
                        "edge": to_json(&edge),
                        "iterates": trace.iterates.len(),
                        "final": to_json(&trace.iterates.last()),
                        "identified_at": trace.identified_at,
                    },
                }),
            })
        }
        Demo::Maxfun => {
            let f = PolyhedralFunction::max_coordinate(3);
            let x = ints(&[0, 0, 0]);
            let v = vec![q(1, 2), q(1, 2), Rational::zero()];
            let m = minimal_identifiable_set_f(&f, &x, &v)?;
            let ident = identifiability_verify(Host::Function(&f), &m, &x, &v, &opts)?;
            let nec = necessity_verify(Host::Function(&f), &m, &x, &v, &opts)?;
            let ms = multiplier_polytope(&f, &x, &v)?;
            Ok(Report {
                outcome: Outcome::from(ident.verdict).and(nec.verdict.into()),
                body: json!({
                    "demo": "maxfun",
                    "x": to_json(&x),
                    "v": to_json(&v),
                    "subdifferential": to_json(&f.subdifferential(&x)?),
                    "multipliers": to_json(&ms),
                    "strict_complementarity": ms.strict_complementarity()?.0,
                    "minimal_identifiable_set": to_json(&m),
                    "identifiability": to_json(&ident),
                    "necessity": to_json(&nec),
                    "narrative": "M = {x : x_1 = x_2 = max x}: the pieces in the support of v stay active",
                }),
            })
        }
    }
}
