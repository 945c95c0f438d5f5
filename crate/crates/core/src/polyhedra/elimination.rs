//! Fourier–Motzkin elimination with exact-substitution of equalities and LP
//! pruning of redundant rows.

use std::collections::{HashMap, HashSet};

use super::polyhedron::Polyhedron;
use crate::error::{Error, Result};
use crate::numerics::linalg::{Matrix, Vector};
use crate::numerics::simplex::{LinearProgram, LpStatus, Relation};
use crate::numerics::Rational;

pub const ROW_BUDGET: usize = 4096;

type Row = (Vector, Rational);

/// Scales so the first nonzero coefficient is ±1. `None` for a zero row,
/// with the flag telling whether that row is infeasible.
fn normalize(r: Row) -> std::result::Result<Row, bool> {
    let Some(k) = r.0.iter().position(|x| !x.is_zero()) else {
        return Err(r.1.is_negative());
    };
    let s = r.0[k].abs().recip();
    if s.is_one() {
        return Ok(r);
    }
    Ok((r.0.iter().map(|x| x * &s).collect(), &r.1 * &s))
}

/// Dedupes parallel rows (keeping the tightest) and drops trivial ones.
/// Returns `None` when a row reads `0 ≤ negative`.
fn tidy(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut best: HashMap<Vector, Rational> = HashMap::new();
    let mut order: Vec<Vector> = Vec::new();
    for r in rows {
        match normalize(r) {
            Err(true) => return None,
            Err(false) => {}
            Ok((a, b)) => match best.get_mut(&a) {
                Some(old) => {
                    if b < *old {
                        *old = b;
                    }
                }
                None => {
                    order.push(a.clone());
                    best.insert(a, b);
                }
            },
        }
    }
    Some(order.into_iter().map(|a| {
        let b = best[&a].clone();
        (a, b)
    }).collect())
}

fn prune(rows: Vec<Row>, n: usize) -> Result<Option<Vec<Row>>> {
    let mut keep = rows;
    let mut i = 0;
    while i < keep.len() {
        let mut lp = LinearProgram::new(n).maximize(keep[i].0.clone());
        for (j, (a, b)) in keep.iter().enumerate() {
            if j != i {
                lp.row(a.clone(), Relation::Le, b.clone());
            }
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Optimal if sol.value.as_ref().unwrap() <= &keep[i].1 => {
                keep.remove(i);
            }
            _ => i += 1,
        }
    }
    Ok(Some(keep))
}

/// Projects `{x : A x ≤ b}` onto its first `keep` coordinates.
pub fn project_out(p: &Polyhedron, keep: usize) -> Result<Polyhedron> {
    let n = p.dim();
    assert!(keep <= n);
    let mut rows: Vec<Row> = p.a().iter().cloned().zip(p.b().iter().cloned()).collect();
    rows = match tidy(rows) {
        Some(r) => r,
        None => return Ok(Polyhedron::empty(keep)),
    };
    for var in (keep..n).rev() {
        rows = eliminate(rows, var);
        rows = rows.into_iter().map(|(mut a, b)| {
            a.truncate(var);
            (a, b)
        }).collect();
        rows = match tidy(rows) {
            Some(r) => r,
            None => return Ok(Polyhedron::empty(keep)),
        };
        if rows.len() > ROW_BUDGET {
            return Err(Error::EliminationBudgetExceeded(ROW_BUDGET));
        }
        rows = match prune(rows, var)? {
            Some(r) => r,
            None => return Ok(Polyhedron::empty(keep)),
        };
    }
    if keep == n {
        rows = match prune(rows, n)? {
            Some(r) => r,
            None => return Ok(Polyhedron::empty(keep)),
        };
    }
    let (a, b): (Matrix, Vector) = rows.into_iter().unzip();
    Polyhedron::with_dim(keep, a, b)
}

fn eliminate(rows: Vec<Row>, var: usize) -> Vec<Row> {
    // an equality pair touching `var` lets us substitute instead of combining
    let set: HashSet<Row> = rows.iter().cloned().collect();
    let eq = rows.iter().position(|(a, b)| {
        !a[var].is_zero() && set.contains(&(a.iter().map(|x| -x).collect(), -b))
    });
    if let Some(e) = eq {
        let (ea, eb) = rows[e].clone();
        let twin: Row = (ea.iter().map(|x| -x).collect(), -&eb);
        let piv = ea[var].clone();
        let mut out = Vec::with_capacity(rows.len());
        let mut dropped_twin = false;
        for (i, r) in rows.into_iter().enumerate() {
            if i == e {
                continue;
            }
            if !dropped_twin && r == twin {
                dropped_twin = true;
                continue;
            }
            if r.0[var].is_zero() {
                out.push(r);
                continue;
            }
            let f = &r.0[var] / &piv;
            let a: Vector = r.0.iter().zip(&ea).map(|(x, y)| x - &(&f * y)).collect();
            let b = &r.1 - &(&f * &eb);
            out.push((a, b));
        }
        return out;
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for r in rows {
        if r.0[var].is_positive() {
            pos.push(r);
        } else if r.0[var].is_negative() {
            neg.push(r);
        } else {
            out.push(r);
        }
    }
    for (pa, pb) in &pos {
        for (na, nb) in &neg {
            let sp = -&na[var];
            let sn = pa[var].clone();
            let a: Vector = pa.iter().zip(na).map(|(x, y)| &(&sp * x) + &(&sn * y)).collect();
            let b = &(&sp * pb) + &(&sn * nb);
            out.push((a, b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{int_matrix, ints};
    use crate::numerics::q;

    #[test]
    fn triangle_shadow() {
        // triangle with vertices (0,0), (2,0), (0,1) projected on x
        let p = Polyhedron::new(int_matrix(&[&[-1, 0], &[0, -1], &[1, 2]]), ints(&[0, 0, 2])).unwrap();
        let s = project_out(&p, 1).unwrap();
        assert!(s.contains(&ints(&[0])));
        assert!(s.contains(&ints(&[2])));
        assert!(!s.contains(&[q(-1, 10)]));
        assert!(!s.contains(&[q(21, 10)]));
        assert_eq!(s.rows(), 2);
    }

    #[test]
    fn empty_projection() {
        let p = Polyhedron::new(int_matrix(&[&[1, 1], &[-1, -1]]), ints(&[0, -1])).unwrap();
        let s = project_out(&p, 1).unwrap();
        assert!(s.is_empty().unwrap());
    }

    #[test]
    fn equality_substitution() {
        // y = 2x, 0 <= y <= 4 projected on x gives [0, 2]
        let p = Polyhedron::new(
            int_matrix(&[&[2, -1], &[-2, 1], &[0, 1], &[0, -1]]),
            ints(&[0, 0, 4, 0]),
        )
        .unwrap();
        let s = project_out(&p, 1).unwrap();
        assert!(s.contains(&ints(&[2])));
        assert!(!s.contains(&[q(5, 2)]));
        assert!(!s.contains(&[q(-1, 2)]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            /// A point is in the shadow iff some lift of it is in the polyhedron.
            #[test]
            fn shadow_matches_lift(
                rows in proptest::collection::vec(proptest::collection::vec(-3i64..=3, 3), 1..6),
                pt in proptest::collection::vec(-3i64..=3, 2),
            ) {
                let a: Matrix = rows.iter().map(|r| ints(r)).collect();
                let b: Vector = (0..rows.len()).map(|i| q(i as i64 % 3 + 1, 1)).collect();
                let p = Polyhedron::new(a.clone(), b.clone()).unwrap();
                let s = project_out(&p, 2).unwrap();
                let x = ints(&pt);
                let mut lift = LinearProgram::new(1);
                for (r, bi) in a.iter().zip(&b) {
                    let rhs = bi - &(&(&r[0] * &x[0]) + &(&r[1] * &x[1]));
                    lift.row(vec![r[2].clone()], Relation::Le, rhs);
                }
                let liftable = lift.solve().unwrap().is_optimal();
                prop_assert_eq!(s.contains(&x), liftable);
            }
        }
    }
}
