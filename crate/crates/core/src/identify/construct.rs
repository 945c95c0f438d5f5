use crate::error::{Error, Result};
use crate::functions::{CompositeFunction, PolyhedralFunction};
use crate::numerics::linalg::{add, zeros, Vector};
use crate::numerics::simplex::{LinearProgram, Relation};
use crate::numerics::Rational;
use crate::polyhedra::{face_from_tight, FaceDescriptor, Polyhedron};

use super::descriptor::{IdentifiableSet, PreimagePart, SupportFace};
use super::multipliers::{multiplier_polytope, multiplier_set_for_set, MultiplierSet};

/// `{x ∈ Q : supp λ̄ ⊆ I(x)}` for a maximal-support multiplier `λ̄` of `v̄`.
pub fn minimal_identifiable_set(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<IdentifiableSet> {
    let ms = multiplier_set_for_set(q, xbar, vbar)?;
    let w = ms.max_support_witness()?.ok_or(Error::NotANormal)?;
    let (l, _) = ms.support(&w);
    Ok(IdentifiableSet::face(l, vec![]))
}

/// The same set as a face of `Q` with its maximal tight set.
pub fn minimal_identifiable_face(q: &Polyhedron, xbar: &[Rational], vbar: &[Rational]) -> Result<FaceDescriptor> {
    let IdentifiableSet::Face(f) = minimal_identifiable_set(q, xbar, vbar)? else {
        unreachable!("set hosts give faces")
    };
    face_from_tight(q, &f.supp_lambda)?.ok_or_else(|| Error::OracleMismatch("identifiable face is empty".into()))
}

fn support_face(ms: &MultiplierSet, w: &[Rational]) -> SupportFace {
    let (l, m) = ms.support(w);
    SupportFace::new(l, m)
}

/// `{x ∈ dom f : supp λ̄ ⊆ I(x), supp μ̄ ⊆ J(x)}` for maximal-support
/// multipliers.
pub fn minimal_identifiable_set_f(f: &PolyhedralFunction, xbar: &[Rational], vbar: &[Rational]) -> Result<IdentifiableSet> {
    let ms = multiplier_polytope(f, xbar, vbar)?;
    let w = ms.max_support_witness()?.ok_or(Error::NotASubgradient)?;
    Ok(IdentifiableSet::Face(support_face(&ms, &w)))
}

/// `⋃_y F⁻¹(M_y)` over the vertices `y` of `{y ∈ ∂g(F(x̄)) : ∇F(x̄)ᵀy = v̄}`.
pub fn minimal_identifiable_set_composite(cf: &CompositeFunction, xbar: &[Rational], vbar: &[Rational]) -> Result<IdentifiableSet> {
    if vbar.len() != cf.dim() {
        return Err(Error::DimensionMismatch("subgradient has the wrong length".into()));
    }
    if !cf.qualification_check(xbar)? {
        return Err(Error::QualificationFailure);
    }
    let g = &cf.outer;
    let fx = cf.inner.eval(xbar)?;
    let jac = cf.inner.jacobian(xbar)?;
    let (ia, ja) = g.active_sets(&fx)?;
    let lg = ia.iter().map(|&i| cf.adjoint(&jac, &g.pieces[i].a)).collect();
    let mg = ja.iter().map(|&j| cf.adjoint(&jac, &g.constraints[j].c)).collect();
    let ms = MultiplierSet::build(ia.clone(), lg, ja.clone(), mg, vbar, true);
    let verts = ms.vertices()?;
    if verts.is_empty() {
        return Err(Error::NotASubgradient);
    }
    let mut parts: Vec<PreimagePart> = Vec::new();
    for w in verts {
        let mut y = zeros(g.dim());
        for (k, &i) in ia.iter().enumerate() {
            y = add(&y, &g.pieces[i].a.iter().map(|v| v * &w[k]).collect::<Vector>());
        }
        for (k, &j) in ja.iter().enumerate() {
            y = add(&y, &g.constraints[j].c.iter().map(|v| v * &w[ia.len() + k]).collect::<Vector>());
        }
        let IdentifiableSet::Face(face) = minimal_identifiable_set_f(g, &fx, &y)? else {
            unreachable!()
        };
        if !parts.iter().any(|p| p.face == face) {
            parts.push(PreimagePart { y, face });
        }
    }
    Ok(IdentifiableSet::PreimageUnion { parts })
}

/// No nonzero horizon subgradients of the summands cancel:
/// `Σ wᵢ = 0, wᵢ ∈ ∂^∞fᵢ(x̄)` forces every `wᵢ = 0`.
pub fn sum_qualification(fs: &[PolyhedralFunction], xbar: &[Rational]) -> Result<bool> {
    let n = xbar.len();
    let mut gens: Vec<(usize, Vector)> = Vec::new();
    for (i, f) in fs.iter().enumerate() {
        let (_, j) = f.active_sets(xbar)?;
        gens.extend(j.into_iter().map(|k| (i, f.constraints[k].c.clone())));
    }
    let k = gens.len();
    if k == 0 {
        return Ok(true);
    }
    for target in 0..fs.len() {
        for d in 0..n {
            for sign in [1i64, -1] {
                let mut lp = LinearProgram::new(k).nonneg(0..k);
                for coord in 0..n {
                    lp.row(gens.iter().map(|(_, c)| c[coord].clone()).collect(), Relation::Eq, Rational::zero());
                }
                lp.row(vec![Rational::one(); k], Relation::Le, Rational::one());
                let obj: Vector = gens
                    .iter()
                    .map(|(i, c)| if *i == target { &c[d] * &Rational::from_int(sign) } else { Rational::zero() })
                    .collect();
                if lp.maximize(obj).solve()?.value.is_some_and(|v| v.is_positive()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `⋃ M_{v₁} ∩ … ∩ M_{v_k}` over the vertex splits `v̄ = Σ vᵢ`,
/// `vᵢ ∈ ∂fᵢ(x̄)`. `split` is one such decomposition and is only validated.
pub fn sum_rule_identifiable(
    fs: &[PolyhedralFunction],
    xbar: &[Rational],
    vbar: &[Rational],
    split: &[Vector],
) -> Result<IdentifiableSet> {
    let n = vbar.len();
    if fs.is_empty() || split.len() != fs.len() {
        return Err(Error::InvalidSplit(format!("{} parts for {} summands", split.len(), fs.len())));
    }
    if fs.iter().any(|f| f.dim() != n) || xbar.len() != n || split.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch("summands, point and split must share a dimension".into()));
    }
    let total = split.iter().fold(zeros(n), |acc, s| add(&acc, s));
    if total != vbar {
        return Err(Error::InvalidSplit("the parts do not sum to the subgradient".into()));
    }
    for (f, s) in fs.iter().zip(split) {
        if !f.subdifferential(xbar)?.contains(s)? {
            return Err(Error::InvalidSplit(format!("{s:?} is not a subgradient of its summand")));
        }
    }
    if !sum_qualification(fs, xbar)? {
        return Err(Error::QualificationFailure);
    }
    // splitting polytope: per summand (λ, 1ᵀλ = 1, μ), coupled through Σ = v̄
    let mut layout: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    let mut lg = Vec::new();
    let mut li = Vec::new();
    let mut mg = Vec::new();
    let mut mi = Vec::new();
    let k = fs.len();
    let embed = |v: &Vector, which: usize, lam: bool| -> Vector {
        let mut out = v.clone();
        out.extend((0..k).map(|t| if lam && t == which { Rational::one() } else { Rational::zero() }));
        out
    };
    for (t, f) in fs.iter().enumerate() {
        let (ia, ja) = f.active_sets(xbar)?;
        for &i in &ia {
            lg.push(embed(&f.pieces[i].a, t, true));
            li.push(lg.len() - 1);
        }
        for &j in &ja {
            mg.push(embed(&f.constraints[j].c, t, false));
            mi.push(mg.len() - 1);
        }
        layout.push((t, ia, ja));
    }
    let mut target = vbar.to_vec();
    target.extend(std::iter::repeat_n(Rational::one(), k));
    let ms = MultiplierSet::build(li, lg, mi, mg, &target, false);
    let nl = ms.lambda_index.len();
    let mut splits: Vec<Vec<SupportFace>> = Vec::new();
    for w in ms.vertices()? {
        let mut faces = Vec::with_capacity(k);
        let (mut lo, mut mo) = (0, nl);
        for (t, ia, ja) in &layout {
            let f = &fs[*t];
            let mut v = zeros(n);
            for (off, &i) in ia.iter().enumerate() {
                v = add(&v, &f.pieces[i].a.iter().map(|a| a * &w[lo + off]).collect::<Vector>());
            }
            for (off, &j) in ja.iter().enumerate() {
                v = add(&v, &f.constraints[j].c.iter().map(|c| c * &w[mo + off]).collect::<Vector>());
            }
            lo += ia.len();
            mo += ja.len();
            let IdentifiableSet::Face(face) = minimal_identifiable_set_f(f, xbar, &v)? else {
                unreachable!()
            };
            faces.push(face);
        }
        if !splits.contains(&faces) {
            splits.push(faces);
        }
    }
    Ok(IdentifiableSet::SumUnion { splits })
}
