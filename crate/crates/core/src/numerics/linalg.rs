//! Dense exact vectors and matrices.
//!
//! Matrices are row-major `Vec<Vec<Rational>>`; everything here is small
//! (dimensions in the tens) so no attempt is made at blocking.

use super::rational::Rational;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Vector = Vec<Rational>;
pub type Matrix = Vec<Vec<Rational>>;

pub fn zeros(n: usize) -> Vector {
    vec![Rational::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

pub fn ints(v: &[i64]) -> Vector {
    v.iter().map(|&x| Rational::from_int(x)).collect()
}

pub fn int_matrix(rows: &[&[i64]]) -> Matrix {
    rows.iter().map(|r| ints(r)).collect()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += &(x * y);
        }
    }
    acc
}

pub fn add(a: &[Rational], b: &[Rational]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(s: &Rational, a: &[Rational]) -> Vector {
    a.iter().map(|x| s * x).collect()
}

/// `a + s * b`
pub fn axpy(a: &[Rational], s: &Rational, b: &[Rational]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + &(s * y)).collect()
}

pub fn neg(a: &[Rational]) -> Vector {
    a.iter().map(|x| -x).collect()
}

pub fn norm_sq(a: &[Rational]) -> Rational {
    dot(a, a)
}

pub fn dist_sq(a: &[Rational], b: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += &(&d * &d);
    }
    acc
}

pub fn max_abs(a: &[Rational]) -> Rational {
    a.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}

pub fn is_zero(a: &[Rational]) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn to_f64(a: &[Rational]) -> Vec<f64> {
    a.iter().map(|x| x.to_f64()).collect()
}

pub fn norm_f64(a: &[Rational]) -> f64 {
    norm_sq(a).to_f64().sqrt()
}

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| unit(n, i)).collect()
}

pub fn transpose(m: &[Vector], cols: usize) -> Matrix {
    (0..cols).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_vec(m: &[Vector], x: &[Rational]) -> Vector {
    m.iter().map(|r| dot(r, x)).collect()
}

/// `mᵀ y`, with `cols` the column count of `m` (needed when `m` has no rows).
pub fn mat_t_vec(m: &[Vector], y: &[Rational], cols: usize) -> Vector {
    let mut out = zeros(cols);
    for (r, yi) in m.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(r) {
            if !a.is_zero() {
                *o += &(yi * a);
            }
        }
    }
    out
}

pub fn mat_mul(a: &[Vector], b: &[Vector], cols: usize) -> Matrix {
    a.iter().map(|r| mat_t_vec(b, r, cols)).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        let pivot_row = m[row].clone();
        for (r, other) in m.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (x, p) in other.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &(&f * p);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank(m: &[Vector], cols: usize) -> usize {
    let mut w = m.to_vec();
    rref(&mut w, cols).len()
}

/// Indices of a maximal linearly independent subset of the rows, chosen greedily
/// in order.
pub fn independent_rows(m: &[Vector], cols: usize) -> Vec<usize> {
    let mut basis: Matrix = Vec::new();
    let mut chosen = Vec::new();
    for (i, r) in m.iter().enumerate() {
        let mut trial = basis.clone();
        trial.push(r.clone());
        if rank(&trial, cols) == trial.len() {
            basis.push(r.clone());
            chosen.push(i);
            if basis.len() == cols {
                break;
            }
        }
    }
    chosen
}

/// Basis of `{x : m x = 0}`.
pub fn null_space(m: &[Vector], cols: usize) -> Matrix {
    let mut w = m.to_vec();
    let pivots = rref(&mut w, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = zeros(cols);
            v[f] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -&w[r][f];
            }
            v
        })
        .collect()
}

pub fn inverse(m: &[Vector]) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend(unit(n, i));
            row
        })
        .collect();
    let pivots = rref(&mut aug, n);
    if pivots.len() < n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    /// One solution of `A x = b`, or `None` when the system is inconsistent.
    pub solution: Option<Vector>,
    pub rank: usize,
    /// Basis of the null space of `A`.
    pub null_basis: Matrix,
}

/// Solves `A x = b` exactly. `cols` is the number of unknowns.
pub fn solve_linear(a: &[Vector], b: &[Rational], cols: usize) -> Result<LinearSolution> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but right-hand side of length {}",
            a.len(),
            b.len()
        )));
    }
    if let Some(r) = a.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "row of length {} in a system with {cols} unknowns",
            r.len()
        )));
    }
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug, cols + 1);
    let consistent = !pivots.contains(&cols);
    let rank = pivots.iter().filter(|&&p| p < cols).count();
    let solution = consistent.then(|| {
        let mut x = zeros(cols);
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = aug[r][cols].clone();
        }
        x
    });
    Ok(LinearSolution {
        solution,
        rank,
        null_basis: null_space(a, cols),
    })
}

/// Symmetric LDLᵀ with symmetric (diagonal) pivoting. Returns `None` when a
/// zero pivot meets a nonzero off-diagonal entry, which means the matrix is
/// indefinite; otherwise the returned diagonal has the inertia of `m`.
pub fn ldl_diagonal(m: &[Vector]) -> Option<Vector> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut diag = Vec::with_capacity(n);
    while !active.is_empty() {
        // choose the largest-magnitude diagonal pivot for determinism
        let (pos, &k) = active
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| a[i][i].abs().cmp(&a[j][j].abs()).then(j.cmp(&i)))
            .unwrap();
        let d = a[k][k].clone();
        active.remove(pos);
        if d.is_zero() {
            if active.iter().any(|&j| !a[k][j].is_zero()) {
                return None;
            }
            diag.push(d);
            continue;
        }
        for &i in &active {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &d;
            for &j in &active {
                let t = &f * &a[k][j];
                a[i][j] -= &t;
            }
        }
        diag.push(d);
    }
    Some(diag)
}

pub fn is_psd(m: &[Vector]) -> bool {
    let symmetric = (0..m.len()).all(|i| (0..m.len()).all(|j| m[i][j] == m[j][i]));
    symmetric && ldl_diagonal(m).is_some_and(|d| d.iter().all(|x| !x.is_negative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;

    #[test]
    fn solve_unique() {
        let a = int_matrix(&[&[1, 1], &[1, -1]]);
        let s = solve_linear(&a, &ints(&[2, 0]), 2).unwrap();
        assert_eq!(s.solution, Some(ints(&[1, 1])));
        assert_eq!(s.rank, 2);
        assert!(s.null_basis.is_empty());
    }

    #[test]
    fn solve_rank_deficient() {
        let a = int_matrix(&[&[1, 1], &[2, 2]]);
        let s = solve_linear(&a, &ints(&[1, 2]), 2).unwrap();
        assert_eq!(s.rank, 1);
        let x = s.solution.unwrap();
        assert_eq!(dot(&a[0], &x), q(1, 1));
        assert_eq!(s.null_basis.len(), 1);
        let nb = &s.null_basis[0];
        assert!(is_zero(&mat_vec(&a, nb)));
        assert!(!is_zero(nb));
        // the basis direction is parallel to (1,-1)
        assert_eq!(&nb[0] + &nb[1], Rational::zero());
    }

    #[test]
    fn solve_inconsistent() {
        let a = int_matrix(&[&[1, 1], &[1, 1]]);
        let s = solve_linear(&a, &ints(&[1, 2]), 2).unwrap();
        assert_eq!(s.solution, None);
        assert_eq!(s.rank, 1);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = int_matrix(&[&[1, 1]]);
        assert!(matches!(solve_linear(&a, &ints(&[1, 2]), 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn inverse_round_trip() {
        let a = vec![vec![q(2, 1), q(1, 3)], vec![q(-1, 2), q(5, 1)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv, 2), identity(2));
        assert!(inverse(&int_matrix(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn psd_detection() {
        assert!(is_psd(&int_matrix(&[&[2, -1], &[-1, 2]])));
        assert!(is_psd(&int_matrix(&[&[1, 1], &[1, 1]])));
        assert!(is_psd(&int_matrix(&[&[0, 0], &[0, 0]])));
        assert!(!is_psd(&int_matrix(&[&[0, 1], &[1, 0]])));
        assert!(!is_psd(&int_matrix(&[&[1, 2], &[2, 1]])));
        assert!(!is_psd(&int_matrix(&[&[1, 0], &[1, 1]])));
        assert!(!is_psd(&int_matrix(&[&[0, 0, 0], &[0, 1, 0], &[0, 0, -1]])));
    }

    #[test]
    fn independent_rows_skips_dependent() {
        let a = int_matrix(&[&[1, 0, 0], &[2, 0, 0], &[0, 1, 0], &[1, 1, 0]]);
        assert_eq!(independent_rows(&a, 3), vec![0, 2]);
    }
}
