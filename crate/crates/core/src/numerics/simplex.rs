//! Two-phase dense simplex over exact rationals with Bland's rule.
//!
//! The solver works on `min cᵀy, A y = b, y ≥ 0, b ≥ 0` with one artificial
//! column per row. Artificial columns stay in the tableau for the whole run so
//! that their reduced costs give the row duals at the end.

use super::linalg::{dot, Matrix, Vector};
use super::rational::Rational;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const PIVOT_GUARD: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    nonneg: Vec<bool>,
    objective: Vector,
    maximize: bool,
    rows: Vec<(Vector, Relation, Rational)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Option<Rational>,
    pub x: Option<Vector>,
    /// Row multipliers `y` with `value = Σ yᵢ rhsᵢ` and `c = Σ yᵢ aᵢ` on free
    /// variables (`c ≤ Σ yᵢ aᵢ` on nonnegative ones when maximizing).
    pub duals: Option<Vector>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    /// All variables free, objective zero (pure feasibility) until set.
    pub fn new(n: usize) -> LinearProgram {
        LinearProgram {
            n,
            nonneg: vec![false; n],
            objective: vec![Rational::zero(); n],
            maximize: false,
            rows: Vec::new(),
        }
    }

    pub fn nonneg(mut self, idx: impl IntoIterator<Item = usize>) -> Self {
        for i in idx {
            self.nonneg[i] = true;
        }
        self
    }

    pub fn maximize(mut self, c: Vector) -> Self {
        assert_eq!(c.len(), self.n);
        self.objective = c;
        self.maximize = true;
        self
    }

    pub fn minimize(mut self, c: Vector) -> Self {
        assert_eq!(c.len(), self.n);
        self.objective = c;
        self.maximize = false;
        self
    }

    pub fn row(&mut self, a: Vector, rel: Relation, rhs: Rational) {
        assert_eq!(a.len(), self.n, "constraint row has wrong length");
        self.rows.push((a, rel, rhs));
    }

    pub fn le(mut self, a: Vector, rhs: Rational) -> Self {
        self.row(a, Relation::Le, rhs);
        self
    }

    pub fn eq(mut self, a: Vector, rhs: Rational) -> Self {
        self.row(a, Relation::Eq, rhs);
        self
    }

    pub fn ge(mut self, a: Vector, rhs: Rational) -> Self {
        self.row(a, Relation::Ge, rhs);
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        // column map for the original variables
        let mut cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.n);
        let mut ns = 0;
        for &nn in &self.nonneg {
            if nn {
                cols.push((ns, None));
                ns += 1;
            } else {
                cols.push((ns, Some(ns + 1)));
                ns += 2;
            }
        }
        let mut slack_of = Vec::with_capacity(self.rows.len());
        for (_, rel, _) in &self.rows {
            if *rel == Relation::Eq {
                slack_of.push(None);
            } else {
                slack_of.push(Some(ns));
                ns += 1;
            }
        }
        let m = self.rows.len();
        let mut a: Matrix = vec![vec![Rational::zero(); ns]; m];
        let mut b: Vector = Vec::with_capacity(m);
        let mut sigma = Vec::with_capacity(m);
        for (i, (row, rel, rhs)) in self.rows.iter().enumerate() {
            let s = if rhs.is_negative() { -1 } else { 1 };
            sigma.push(s);
            let sg = Rational::from_int(s);
            for (k, coef) in row.iter().enumerate() {
                if coef.is_zero() {
                    continue;
                }
                let v = &sg * coef;
                let (p, nn) = cols[k];
                if let Some(nc) = nn {
                    a[i][nc] = -&v;
                }
                a[i][p] = v;
            }
            if let Some(sc) = slack_of[i] {
                let unit = if *rel == Relation::Le { 1 } else { -1 };
                a[i][sc] = Rational::from_int(unit * s);
            }
            b.push(&sg * rhs);
        }
        let sign = if self.maximize { Rational::from_int(-1) } else { Rational::one() };
        let mut c = vec![Rational::zero(); ns];
        for (k, ck) in self.objective.iter().enumerate() {
            let v = &sign * ck;
            let (p, nn) = cols[k];
            if let Some(nc) = nn {
                c[nc] = -&v;
            }
            c[p] = v;
        }
        let std = solve_standard(&a, &b, &c)?;
        match std {
            StdOutcome::Infeasible => Ok(LpSolution { status: LpStatus::Infeasible, value: None, x: None, duals: None }),
            StdOutcome::Unbounded => Ok(LpSolution { status: LpStatus::Unbounded, value: None, x: None, duals: None }),
            StdOutcome::Optimal { y, pi } => {
                let x: Vector = cols
                    .iter()
                    .map(|&(p, nn)| match nn {
                        Some(nc) => &y[p] - &y[nc],
                        None => y[p].clone(),
                    })
                    .collect();
                let value = dot(&self.objective, &x);
                let duals: Vector = pi
                    .iter()
                    .zip(&sigma)
                    .map(|(p, &s)| {
                        let orig = p * &Rational::from_int(s);
                        if self.maximize {
                            -orig
                        } else {
                            orig
                        }
                    })
                    .collect();
                Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), x: Some(x), duals: Some(duals) })
            }
        }
    }
}

enum StdOutcome {
    Infeasible,
    Unbounded,
    Optimal { y: Vector, pi: Vector },
}

struct Tableau {
    t: Matrix,
    rhs: Vector,
    basis: Vec<usize>,
    r: Vector,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > PIVOT_GUARD {
            return Err(Error::CyclingGuardExceeded);
        }
        let inv = self.t[row][col].recip();
        for x in self.t[row].iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        self.rhs[row] = &self.rhs[row] * &inv;
        let prow = self.t[row].clone();
        let prhs = self.rhs[row].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.t.len() {
            if i == row || self.t[i][col].is_zero() {
                continue;
            }
            let f = self.t[i][col].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.t[i][j] -= &d;
            }
            let d = &f * &prhs;
            self.rhs[i] -= &d;
        }
        if !self.r[col].is_zero() {
            let f = self.r[col].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.r[j] -= &d;
            }
        }
        self.basis[row] = col;
        Ok(())
    }

    /// Runs Bland's rule with entering columns restricted to `0..allowed`.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.r[j].is_negative() && !self.basis.contains(&j)) else {
                return Ok(true);
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                if !self.t[i][col].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.t[i][col];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Ok(false),
                Some((row, _)) => self.pivot(row, col)?,
            }
        }
    }
}

fn solve_standard(a: &Matrix, b: &Vector, c: &Vector) -> Result<StdOutcome> {
    let m = a.len();
    let ns = c.len();
    let width = ns + m;
    let t: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.resize(width, Rational::zero());
            r[ns + i] = Rational::one();
            r
        })
        .collect();
    let mut r = vec![Rational::zero(); width];
    for row in &t {
        for j in 0..ns {
            if !row[j].is_zero() {
                r[j] -= &row[j];
            }
        }
    }
    let mut tab = Tableau { t, rhs: b.clone(), basis: (ns..ns + m).collect(), r, pivots: 0 };
    tab.optimize(ns)?;
    let infeasibility: Rational = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&bj, _)| bj >= ns)
        .map(|(_, v)| v.clone())
        .sum();
    if infeasibility.is_positive() {
        return Ok(StdOutcome::Infeasible);
    }
    for i in 0..m {
        if tab.basis[i] >= ns {
            if let Some(j) = (0..ns).find(|&j| !tab.t[i][j].is_zero() && !tab.basis.contains(&j)) {
                tab.pivot(i, j)?;
            }
        }
    }
    // phase two reduced costs
    let mut r: Vector = (0..width).map(|j| if j < ns { c[j].clone() } else { Rational::zero() }).collect();
    for (i, &bj) in tab.basis.iter().enumerate() {
        let cb = if bj < ns { &c[bj] } else { continue };
        if cb.is_zero() {
            continue;
        }
        for (rj, t) in r.iter_mut().zip(&tab.t[i]) {
            if !t.is_zero() {
                *rj -= &(cb * t);
            }
        }
    }
    tab.r = r;
    if !tab.optimize(ns)? {
        return Ok(StdOutcome::Unbounded);
    }
    let mut y = vec![Rational::zero(); ns];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < ns {
            y[bj] = tab.rhs[i].clone();
        }
    }
    let pi: Vector = (0..m).map(|i| -&tab.r[ns + i]).collect();
    Ok(StdOutcome::Optimal { y, pi })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub optimum: Option<Rational>,
    pub primal: Option<Vector>,
    /// Nonnegative multipliers `y` on the rows of `A x ≤ b` with
    /// `Aᵀy = c` (maximize) or `Aᵀy = -c` (minimize) and `bᵀy = ±optimum`.
    pub dual: Option<Vector>,
}

/// Optimizes `cᵀx` over `{x : A x ≤ b}` with `x` free.
pub fn lp_solve(c: &[Rational], a: &[Vector], b: &[Rational], maximize: bool) -> Result<LpResult> {
    let n = c.len();
    if a.len() != b.len() || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("lp_solve: A, b and c disagree".into()));
    }
    let mut lp = LinearProgram::new(n);
    lp = if maximize { lp.maximize(c.to_vec()) } else { lp.minimize(c.to_vec()) };
    for (row, bi) in a.iter().zip(b) {
        lp.row(row.clone(), Relation::Le, bi.clone());
    }
    let sol = lp.solve()?;
    let dual = sol.duals.map(|d| if maximize { d } else { d.iter().map(|v| -v).collect() });
    Ok(LpResult { status: sol.status, optimum: sol.value, primal: sol.x, dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{int_matrix, ints, mat_t_vec, mat_vec};
    use crate::numerics::q;

    fn check_certificates(c: &[Rational], a: &Matrix, b: &[Rational], res: &LpResult, maximize: bool) {
        let x = res.primal.as_ref().unwrap();
        let y = res.dual.as_ref().unwrap();
        for (ax, bi) in mat_vec(a, x).iter().zip(b) {
            assert!(ax <= bi);
        }
        assert!(y.iter().all(|v| !v.is_negative()));
        let aty = mat_t_vec(a, y, c.len());
        let target: Vector = if maximize { c.to_vec() } else { c.iter().map(|v| -v).collect() };
        assert_eq!(aty, target);
        let by = dot(b, y);
        let opt = res.optimum.clone().unwrap();
        assert_eq!(if maximize { by } else { -by }, opt);
        assert_eq!(dot(c, x), opt);
    }

    #[test]
    fn box_maximum() {
        let a = int_matrix(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]]);
        let b = ints(&[1, 1, 1, 1]);
        let c = ints(&[1, 1]);
        let res = lp_solve(&c, &a, &b, true).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.optimum, Some(q(2, 1)));
        assert_eq!(res.primal, Some(ints(&[1, 1])));
        check_certificates(&c, &a, &b, &res, true);
    }

    #[test]
    fn orthant_dual() {
        let a = int_matrix(&[&[-1, 0], &[0, -1]]);
        let b = ints(&[0, 0]);
        let c = ints(&[-1, 0]);
        let res = lp_solve(&c, &a, &b, true).unwrap();
        assert_eq!(res.optimum, Some(q(0, 1)));
        assert_eq!(res.dual, Some(ints(&[1, 0])));
        check_certificates(&c, &a, &b, &res, true);
    }

    #[test]
    fn unbounded_ray() {
        let a = int_matrix(&[&[-1, 0], &[0, -1]]);
        let res = lp_solve(&ints(&[1, 0]), &a, &ints(&[0, 0]), true).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_system() {
        let a = int_matrix(&[&[1], &[-1]]);
        let res = lp_solve(&ints(&[1]), &a, &ints(&[-1, -1]), true).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_vertex() {
        let a = int_matrix(&[&[1, 1], &[-1, 0], &[0, -1]]);
        let b = ints(&[1, 0, 0]);
        let c = ints(&[2, 3]);
        let res = lp_solve(&c, &a, &b, true).unwrap();
        assert_eq!(res.optimum, Some(q(3, 1)));
        assert_eq!(res.primal, Some(ints(&[0, 1])));
        check_certificates(&c, &a, &b, &res, true);
    }

    #[test]
    fn minimize_certificates() {
        let a = int_matrix(&[&[-1, -2], &[-3, -1], &[1, 0], &[0, 1]]);
        let b = ints(&[-4, -6, 10, 10]);
        let c = ints(&[1, 1]);
        let res = lp_solve(&c, &a, &b, false).unwrap();
        assert_eq!(res.optimum, Some(q(14, 5)));
        check_certificates(&c, &a, &b, &res, false);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // several constraints through the optimum
        let a = int_matrix(&[&[1, 1], &[1, 2], &[2, 1], &[1, 0], &[0, 1], &[-1, 0], &[0, -1]]);
        let b = ints(&[2, 3, 3, 1, 1, 0, 0]);
        let c = ints(&[1, 1]);
        let res = lp_solve(&c, &a, &b, true).unwrap();
        assert_eq!(res.optimum, Some(q(2, 1)));
        check_certificates(&c, &a, &b, &res, true);
    }

    #[test]
    fn mixed_relations_and_nonneg() {
        // max x + y, x + y = 1, x - y >= 1/3, x,y >= 0
        let lp = LinearProgram::new(2)
            .nonneg([0, 1])
            .maximize(ints(&[1, 2]))
            .eq(ints(&[1, 1]), q(1, 1))
            .ge(ints(&[1, -1]), q(1, 3));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.x, Some(vec![q(2, 3), q(1, 3)]));
        assert_eq!(sol.value, Some(q(4, 3)));
        let y = sol.duals.unwrap();
        assert_eq!(&y[0] * &q(1, 1) + &y[1] * &q(1, 3), q(4, 3));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn certificates_hold(
                rows in proptest::collection::vec(proptest::collection::vec(-4i64..=4, 3), 1..7),
                c in proptest::collection::vec(-3i64..=3, 3),
            ) {
                // bounded by a box so every feasible instance is optimal
                let mut a: Matrix = rows.iter().map(|r| ints(r)).collect();
                let mut b: Vector = rows.iter().map(|r| q(r.iter().map(|v| v.abs()).sum::<i64>() + 1, 1)).collect();
                for i in 0..3 {
                    let mut e = vec![0i64; 3];
                    e[i] = 1;
                    a.push(ints(&e));
                    b.push(q(5, 1));
                    e[i] = -1;
                    a.push(ints(&e));
                    b.push(q(5, 1));
                }
                let c = ints(&c);
                for maximize in [true, false] {
                    let res = lp_solve(&c, &a, &b, maximize).unwrap();
                    prop_assert_eq!(res.status, LpStatus::Optimal);
                    check_certificates(&c, &a, &b, &res, maximize);
                }
            }
        }
    }
}
