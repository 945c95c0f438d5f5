//! Seeded instance generators shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use idkit::functions::{PlqFunction, PolyhedralFunction};
use idkit::identify::{minimal_identifiable_set_f, IdentifiableSet};
use idkit::numerics::linalg::{add, dot, is_zero, scale, zeros, Vector};
use idkit::numerics::Rational;
use idkit::polyhedra::{faces_enumerate, Polyhedron};
use idkit::sampling;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One line per check, written past the test harness's output capture.
pub fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "\n[{verdict}] {name}: {detail}");
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn nonzero_row(rng: &mut ChaCha8Rng, n: usize, k: i64) -> Vector {
    loop {
        let r = sampling::int_vector(rng, n, k);
        if !is_zero(&r) {
            return r;
        }
    }
}

/// `{x : Ax ≤ b}` with small integer rows and `b > 0`, so the origin is
/// interior.
pub fn random_polyhedron(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Polyhedron {
    let a = (0..m).map(|_| nonzero_row(rng, n, 3)).collect();
    let b = (0..m).map(|_| Rational::from_int(rng.gen_range(1..=4))).collect();
    Polyhedron::new(a, b).unwrap()
}

/// `count` polyhedra with `n ≤ 4`, `m ≤ 8`.
pub fn polyhedra(count: usize, seed: u64) -> Vec<Polyhedron> {
    let mut rng = sampling::rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=4);
            let m = rng.gen_range(n + 1..=8);
            random_polyhedron(&mut rng, n, m)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SetInstance {
    pub q: Polyhedron,
    pub xbar: Vector,
    pub vbar: Vector,
}

/// Vertices of `q` paired with normals: each active row, their sum, and a
/// random combination that leaves one row out.
pub fn vertex_instances(q: &Polyhedron, rng: &mut ChaCha8Rng) -> Vec<SetInstance> {
    let mut out = Vec::new();
    for face in faces_enumerate(q).unwrap().into_iter().filter(|f| f.dim == 0) {
        let act = q.active_set(&face.point).unwrap();
        let mut normals: Vec<Vector> = act.iter().map(|&i| q.row(i).clone()).collect();
        normals.push(act.iter().fold(zeros(q.dim()), |s, &i| add(&s, q.row(i))));
        if act.len() > 1 {
            let skip = rng.gen_range(0..act.len());
            let mut v = zeros(q.dim());
            for (k, &i) in act.iter().enumerate() {
                if k != skip {
                    v = add(&v, &scale(&Rational::from_int(rng.gen_range(1..=3)), q.row(i)));
                }
            }
            normals.push(v);
        }
        for vbar in normals {
            out.push(SetInstance { q: q.clone(), xbar: face.point.clone(), vbar });
        }
    }
    out
}

/// `limit` vertex instances drawn from the polyhedra of [`polyhedra`].
pub fn set_corpus(polys: usize, limit: usize, seed: u64) -> Vec<SetInstance> {
    let mut rng = sampling::rng(seed ^ 0x5e7);
    let mut all = Vec::new();
    for q in polyhedra(polys, seed) {
        let mut inst = vertex_instances(&q, &mut rng);
        if inst.len() > 3 {
            let start = rng.gen_range(0..inst.len() - 2);
            inst = inst[start..start + 3].to_vec();
        }
        all.extend(inst);
    }
    all.truncate(limit);
    all
}

#[derive(Debug, Clone)]
pub struct FunctionInstance {
    pub f: PolyhedralFunction,
    pub xbar: Vector,
    pub vbar: Vector,
    /// Every active piece and constraint carries positive weight in `v̄`.
    pub strict: bool,
}

/// A polyhedral function with several pieces active at an integer `x̄`,
/// optional tight constraints, and a subgradient built from them.
pub fn random_function(rng: &mut ChaCha8Rng, constraints: bool, strict: bool) -> FunctionInstance {
    let n = rng.gen_range(1..=3);
    let xbar = sampling::int_vector(rng, n, 2);
    let k = rng.gen_range(2..=4);
    let level = Rational::from_int(rng.gen_range(-2..=2));
    let active = rng.gen_range(1..=k);
    let mut pieces: Vec<(Vector, Rational)> = Vec::new();
    while pieces.len() < k {
        let a = sampling::int_vector(rng, n, 2);
        if pieces.iter().any(|(p, _)| p == &a) {
            continue;
        }
        let mut b = &level - &dot(&a, &xbar);
        if pieces.len() >= active {
            b -= &Rational::from_int(rng.gen_range(1..=3));
        }
        pieces.push((a, b));
    }
    let mut cons: Vec<(Vector, Rational)> = Vec::new();
    if constraints {
        for _ in 0..rng.gen_range(0..=2) {
            let c = nonzero_row(rng, n, 2);
            let tight = rng.gen_bool(0.5);
            let d = &dot(&c, &xbar) + &Rational::from_int(if tight { 0 } else { rng.gen_range(1..=2) });
            cons.push((c, d));
        }
    }
    let f = PolyhedralFunction::from_parts(pieces.clone(), cons.clone()).unwrap();
    let mut weights: Vec<i64> = (0..active).map(|_| rng.gen_range(if strict { 1 } else { 0 }..=3)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    let total: i64 = weights.iter().sum();
    let mut vbar = zeros(n);
    for (w, (a, _)) in weights.iter().zip(&pieces) {
        vbar = add(&vbar, &scale(&q(*w, total), a));
    }
    let mut full = weights.iter().all(|&w| w > 0);
    for (c, d) in &cons {
        if &dot(c, &xbar) == d {
            let mu = rng.gen_range(if strict { 1 } else { 0 }..=2);
            full &= mu > 0;
            vbar = add(&vbar, &scale(&Rational::from_int(mu), c));
        }
    }
    FunctionInstance { f, xbar, vbar, strict: full }
}

pub fn function_corpus(count: usize, seed: u64) -> Vec<FunctionInstance> {
    let mut rng = sampling::rng(seed);
    (0..count).map(|i| random_function(&mut rng, true, i % 3 == 0)).collect()
}

#[derive(Debug, Clone)]
pub struct PlqInstance {
    /// `g + ½xᵀPx + qᵀx` with `0 ∈ ∂f(x̄)`.
    pub f: PlqFunction,
    /// The polyhedral part and the subgradient of it that cancels the
    /// quadratic's gradient at `x̄`.
    pub g: PolyhedralFunction,
    pub s: Vector,
    pub xbar: Vector,
    pub m: IdentifiableSet,
    pub strict: bool,
}

pub fn plq_instance(rng: &mut ChaCha8Rng, strict: bool) -> PlqInstance {
    let base = random_function(rng, false, strict);
    let n = base.xbar.len();
    let p: Vec<Vector> = (0..n)
        .map(|i| (0..n).map(|j| Rational::from_int(if i == j { rng.gen_range(0..=2) } else { 0 })).collect())
        .collect();
    let px: Vector = p.iter().map(|row| dot(row, &base.xbar)).collect();
    let lin: Vector = base.vbar.iter().zip(&px).map(|(s, t)| -(s + t)).collect();
    let f = base.f.to_plq().unwrap().plus_quadratic(&p, &lin).unwrap();
    let m = minimal_identifiable_set_f(&base.f, &base.xbar, &base.vbar).unwrap();
    PlqInstance { f, g: base.f, s: base.vbar, xbar: base.xbar, m, strict: base.strict }
}

pub fn plq_corpus(count: usize, seed: u64, strict: bool) -> Vec<PlqInstance> {
    let mut rng = sampling::rng(seed);
    (0..count).map(|_| plq_instance(&mut rng, strict)).collect()
}
