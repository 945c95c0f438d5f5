use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{CompositeFunction, PolyhedralFunction};
use crate::numerics::Rational;
use crate::numerics::linalg::Vector;
use crate::polyhedra::Polyhedron;

/// A face given by the indices that must stay active: rows of a polyhedron,
/// or pieces (`supp_lambda`) and constraints (`supp_mu`) of a function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportFace {
    pub supp_lambda: Vec<usize>,
    #[serde(default)]
    pub supp_mu: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreimagePart {
    pub y: Vector,
    pub face: SupportFace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IdentifiableSet {
    Face(SupportFace),
    Union { faces: Vec<SupportFace> },
    /// `⋃ F⁻¹(M_y)` for a composite `g ∘ F`, faces taken on `g`.
    PreimageUnion { parts: Vec<PreimagePart> },
    /// `⋃ (M₁ ∩ … ∩ M_k)`, one face per summand in each split.
    SumUnion { splits: Vec<Vec<SupportFace>> },
}

/// The object a descriptor's indices refer to.
#[derive(Debug, Clone, Copy)]
pub enum Host<'a> {
    Set(&'a Polyhedron),
    Function(&'a PolyhedralFunction),
    Composite(&'a CompositeFunction),
    Sum(&'a [PolyhedralFunction]),
}

impl Host<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Host::Set(q) => q.dim(),
            Host::Function(f) => f.dim(),
            Host::Composite(c) => c.dim(),
            Host::Sum(fs) => fs.first().map_or(0, |f| f.dim()),
        }
    }
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|i| b.contains(i))
}

impl SupportFace {
    pub fn new(supp_lambda: Vec<usize>, supp_mu: Vec<usize>) -> Self {
        SupportFace { supp_lambda, supp_mu }
    }

    pub fn contains_set(&self, q: &Polyhedron, x: &[Rational]) -> Result<bool> {
        match q.active_set(x) {
            Ok(act) => Ok(subset(&self.supp_lambda, &act)),
            Err(Error::PointNotInSet) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn contains_function(&self, f: &PolyhedralFunction, x: &[Rational]) -> Result<bool> {
        match f.active_sets(x) {
            Ok((i, j)) => Ok(subset(&self.supp_lambda, &i) && subset(&self.supp_mu, &j)),
            Err(Error::PointNotInDomain) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn region_set(&self, q: &Polyhedron) -> Polyhedron {
        q.with_equalities(&self.supp_lambda)
    }

    pub fn region_function(&self, f: &PolyhedralFunction) -> Polyhedron {
        f.face_region(&self.supp_lambda, &self.supp_mu)
    }

    /// The graph of `f` over this face, read on `epi f` (pieces are the
    /// first rows, constraints follow). Without an active piece the graph is
    /// the union over pieces of the faces where that piece is tight.
    pub fn lift_to_epigraph(&self, f: &PolyhedralFunction) -> Vec<SupportFace> {
        let m = f.pieces.len();
        let tail: Vec<usize> = self.supp_mu.iter().map(|j| m + j).collect();
        let heads: Vec<Vec<usize>> =
            if self.supp_lambda.is_empty() { (0..m).map(|i| vec![i]).collect() } else { vec![self.supp_lambda.clone()] };
        heads
            .into_iter()
            .map(|mut rows| {
                rows.extend(tail.iter().copied());
                SupportFace { supp_lambda: rows, supp_mu: Vec::new() }
            })
            .collect()
    }
}

fn unsupported(what: &str, host: &str) -> Error {
    Error::UnsupportedDescriptor(format!("{what} descriptor on a {host} host"))
}

fn host_name(h: &Host) -> &'static str {
    match h {
        Host::Set(_) => "set",
        Host::Function(_) => "function",
        Host::Composite(_) => "composite",
        Host::Sum(_) => "sum",
    }
}

impl IdentifiableSet {
    pub fn face(supp_lambda: Vec<usize>, supp_mu: Vec<usize>) -> Self {
        IdentifiableSet::Face(SupportFace { supp_lambda, supp_mu })
    }

    fn name(&self) -> &'static str {
        match self {
            IdentifiableSet::Face(_) => "FACE",
            IdentifiableSet::Union { .. } => "UNION",
            IdentifiableSet::PreimageUnion { .. } => "PREIMAGE_UNION",
            IdentifiableSet::SumUnion { .. } => "SUM_UNION",
        }
    }

    fn faces(&self) -> Option<Vec<&SupportFace>> {
        match self {
            IdentifiableSet::Face(f) => Some(vec![f]),
            IdentifiableSet::Union { faces } => Some(faces.iter().collect()),
            _ => None,
        }
    }

    /// Exact membership `x ∈ M`.
    pub fn contains(&self, host: Host, x: &[Rational]) -> Result<bool> {
        if x.len() != host.dim() {
            return Err(Error::DimensionMismatch(format!("point of length {} for a host on R^{}", x.len(), host.dim())));
        }
        match (self, host) {
            (IdentifiableSet::PreimageUnion { parts }, Host::Composite(c)) => {
                let y = c.inner.eval(x)?;
                for p in parts {
                    if p.face.contains_function(&c.outer, &y)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (IdentifiableSet::SumUnion { splits }, Host::Sum(fs)) => {
                for split in splits {
                    if split.len() != fs.len() {
                        return Err(Error::InvalidSplit("split length differs from the number of summands".into()));
                    }
                    let mut all = true;
                    for (face, f) in split.iter().zip(fs) {
                        if !face.contains_function(f, x)? {
                            all = false;
                            break;
                        }
                    }
                    if all {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (d, Host::Set(q)) => {
                let faces = d.faces().ok_or_else(|| unsupported(d.name(), "set"))?;
                for f in faces {
                    if f.contains_set(q, x)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (d, Host::Function(g)) => {
                let faces = d.faces().ok_or_else(|| unsupported(d.name(), "function"))?;
                for f in faces {
                    if f.contains_function(g, x)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (d, h) => Err(unsupported(d.name(), host_name(&h))),
        }
    }

    /// The polyhedral pieces whose union is `M`.
    pub fn regions(&self, host: Host) -> Result<Vec<Polyhedron>> {
        match (self, host) {
            (IdentifiableSet::SumUnion { splits }, Host::Sum(fs)) => Ok(splits
                .iter()
                .map(|split| {
                    let mut parts = split.iter().zip(fs).map(|(face, f)| face.region_function(f));
                    let first = parts.next().unwrap_or_else(|| Polyhedron::universe(0));
                    parts.fold(first, |acc, p| acc.intersect(&p))
                })
                .collect()),
            (d, Host::Set(q)) => {
                let faces = d.faces().ok_or_else(|| unsupported(d.name(), "set"))?;
                Ok(faces.into_iter().map(|f| f.region_set(q)).collect())
            }
            (d, Host::Function(g)) => {
                let faces = d.faces().ok_or_else(|| unsupported(d.name(), "function"))?;
                Ok(faces.into_iter().map(|f| f.region_function(g)).collect())
            }
            (d, h) => Err(unsupported(d.name(), host_name(&h))),
        }
    }

    /// A function-host descriptor moved onto the epigraph.
    pub fn lift_to_epigraph(&self, f: &PolyhedralFunction) -> Result<IdentifiableSet> {
        match self {
            IdentifiableSet::Face(face) => {
                let mut faces = face.lift_to_epigraph(f);
                Ok(if faces.len() == 1 { IdentifiableSet::Face(faces.remove(0)) } else { IdentifiableSet::Union { faces } })
            }
            IdentifiableSet::Union { faces } => {
                Ok(IdentifiableSet::Union { faces: faces.iter().flat_map(|x| x.lift_to_epigraph(f)).collect() })
            }
            d => Err(unsupported(d.name(), "function")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::ints;

    #[test]
    fn set_membership() {
        let o = Polyhedron::orthant(2);
        let m = IdentifiableSet::face(vec![0], vec![]);
        assert!(m.contains(Host::Set(&o), &ints(&[0, 3])).unwrap());
        assert!(!m.contains(Host::Set(&o), &ints(&[1, 3])).unwrap());
        assert!(!m.contains(Host::Set(&o), &ints(&[0, -1])).unwrap());
        let r = m.regions(Host::Set(&o)).unwrap();
        assert!(r[0].same_set(&Polyhedron::new(vec![ints(&[-1, 0]), ints(&[1, 0]), ints(&[0, -1])], ints(&[0, 0, 0])).unwrap()).unwrap());
    }

    #[test]
    fn json_shape() {
        let m = IdentifiableSet::Union { faces: vec![SupportFace::new(vec![0], vec![1])] };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"UNION","faces":[{"supp_lambda":[0],"supp_mu":[1]}]}"#);
        assert_eq!(serde_json::from_str::<IdentifiableSet>(&s).unwrap(), m);
        let f: IdentifiableSet = serde_json::from_str(r#"{"kind":"FACE","supp_lambda":[1]}"#).unwrap();
        assert_eq!(f, IdentifiableSet::face(vec![1], vec![]));
    }

    #[test]
    fn mismatched_host() {
        let f = PolyhedralFunction::abs();
        let m = IdentifiableSet::SumUnion { splits: vec![] };
        assert!(matches!(m.contains(Host::Function(&f), &ints(&[0])), Err(Error::UnsupportedDescriptor(_))));
    }

    #[test]
    fn epigraph_lift_agrees() {
        let f = PolyhedralFunction::from_parts(
            vec![(ints(&[1, 0]), Rational::zero()), (ints(&[0, 1]), Rational::zero())],
            vec![(ints(&[-1, 0]), Rational::zero())],
        )
        .unwrap();
        let m = IdentifiableSet::face(vec![0, 1], vec![0]);
        let lifted = m.lift_to_epigraph(&f).unwrap();
        let epi = f.epigraph();
        for x in [ints(&[0, 0]), ints(&[1, 1]), ints(&[0, -1]), ints(&[2, 1])] {
            if !f.in_domain(&x) {
                continue;
            }
            let mut pt = x.clone();
            pt.push(f.eval(&x).unwrap());
            assert_eq!(m.contains(Host::Function(&f), &x).unwrap(), lifted.contains(Host::Set(&epi), &pt).unwrap());
        }
    }

    #[test]
    fn domain_lifts_to_graph() {
        let f = PolyhedralFunction::abs();
        let lifted = IdentifiableSet::face(vec![], vec![]).lift_to_epigraph(&f).unwrap();
        let epi = f.epigraph();
        assert!(matches!(&lifted, IdentifiableSet::Union { faces } if faces.len() == 2));
        assert!(lifted.contains(Host::Set(&epi), &ints(&[-3, 3])).unwrap());
        assert!(!lifted.contains(Host::Set(&epi), &ints(&[-3, 4])).unwrap());
    }
}
