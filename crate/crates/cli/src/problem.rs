use std::path::Path;

use idkit::functions::{CompositeFunction, PlqFunction, PolyhedralFunction, Polynomial};
use idkit::identify::IdentifiableSet;
use idkit::numerics::{Rational, Vector};
use idkit::polyhedra::{PiecewisePolyhedralMap, Polyhedron};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Polyhedron,
    PolyFunction,
    Plq,
    Composite,
    Ppm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    kind: Kind,
    payload: Value,
    #[serde(default)]
    query: Query,
}

/// Optional knobs; anything the command does not use is ignored.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Set to verify instead of the minimal identifiable set.
    pub descriptor: Option<IdentifiableSet>,
    pub lambda: Option<Rational>,
    pub eps: Option<Rational>,
    pub delta: Option<Rational>,
    pub grid: Option<usize>,
    pub levels: Option<usize>,
    pub tolerance: Option<Rational>,
    pub x0: Option<Vector>,
    pub step: Option<Rational>,
    pub max_iter: Option<usize>,
    pub tol: Option<Rational>,
    /// Smooth objective for projected gradient.
    pub h: Option<Polynomial>,
    /// Growth function for the transfer check.
    pub g: Option<Polynomial>,
    /// Regions whose union is the set `M` of the growth check.
    pub m: Option<Vec<Polyhedron>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    #[serde(alias = "xbar")]
    pub x: Option<Vector>,
    #[serde(alias = "vbar")]
    pub v: Option<Vector>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Polyhedron(Polyhedron),
    PolyFunction(PolyhedralFunction),
    Plq(PlqFunction),
    Composite(CompositeFunction),
    Ppm(PiecewisePolyhedralMap),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Polyhedron(q) => q.dim(),
            Problem::PolyFunction(f) => f.dim(),
            Problem::Plq(f) => f.dim(),
            Problem::Composite(c) => c.dim(),
            Problem::Ppm(g) => g.n,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Problem::Ppm(g) => g.m,
            _ => self.dim(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub problem: Problem,
    pub query: Query,
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, CliError> {
        let raw: RawFile = serde_json::from_str(text).map_err(parse_err)?;
        let problem = match raw.kind {
            Kind::Polyhedron => Problem::Polyhedron(serde_json::from_value(raw.payload).map_err(parse_err)?),
            Kind::PolyFunction => Problem::PolyFunction(serde_json::from_value(raw.payload).map_err(parse_err)?),
            Kind::Plq => Problem::Plq(serde_json::from_value(raw.payload).map_err(parse_err)?),
            Kind::Composite => Problem::Composite(serde_json::from_value(raw.payload).map_err(parse_err)?),
            Kind::Ppm => Problem::Ppm(serde_json::from_value(raw.payload).map_err(parse_err)?),
        };
        let file = ProblemFile { problem, query: raw.query };
        file.check_dims()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        ProblemFile::parse(&text)
    }

    fn check_dims(&self) -> Result<(), CliError> {
        let n = self.problem.dim();
        let q = &self.query;
        let bad = |what: &str, len: usize, want: usize| {
            CliError::Parse(format!("{what} has length {len}, expected {want}"))
        };
        if let Some(x) = &q.x {
            if x.len() != n {
                return Err(bad("query.x", x.len(), n));
            }
        }
        if let Some(v) = &q.v {
            if v.len() != self.problem.out_dim() {
                return Err(bad("query.v", v.len(), self.problem.out_dim()));
            }
        }
        if let Some(x0) = &q.options.x0 {
            if x0.len() != n {
                return Err(bad("options.x0", x0.len(), n));
            }
        }
        Ok(())
    }

    pub fn x(&self) -> Result<&Vector, CliError> {
        self.query.x.as_ref().ok_or_else(|| CliError::Usage("the query needs a point \"x\"".into()))
    }

    pub fn v(&self) -> Result<&Vector, CliError> {
        self.query.v.as_ref().ok_or_else(|| CliError::Usage("the query needs a vector \"v\"".into()))
    }

    pub fn options(&self) -> &Options {
        &self.query.options
    }
}
