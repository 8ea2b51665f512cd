//! Exact dense linear algebra over the working quadratic field: Gaussian
//! elimination (rank, nullspace, solve) and Sylvester's positive-definiteness
//! criterion. Matrices are small (dozens of rows), so no pivot strategy
//! beyond first-nonzero is needed.

use crate::scalars::QScalar;

pub type Matrix = Vec<Vec<QScalar>>;

fn row_echelon(mut m: Matrix) -> (Matrix, Vec<usize>) {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].checked_inv().expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = x.checked_mul(&inv).expect("field");
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = f.checked_mul(&m[r][j]).expect("field");
                    m[i][j] = m[i][j].checked_sub(&sub).expect("field");
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    (m, pivots)
}

pub fn rank(m: &Matrix) -> usize {
    let (_, pivots) = row_echelon(m.clone());
    pivots.len()
}

/// Basis of the right nullspace of `m`.
pub fn nullspace(m: &Matrix) -> Vec<Vec<QScalar>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    if rows == 0 {
        return (0..cols)
            .map(|i| {
                let mut v = vec![QScalar::zero(); cols];
                v[i] = QScalar::one();
                v
            })
            .collect();
    }
    let (ech, pivots) = row_echelon(m.clone());
    let piv_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if piv_set.contains(&free) {
            continue;
        }
        let mut v = vec![QScalar::zero(); cols];
        v[free] = QScalar::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -ech[ri][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve `m x = b` (unique solution assumed when the system is consistent
/// with full column rank); returns None when inconsistent or underdetermined.
pub fn solve(m: &Matrix, b: &[QScalar]) -> Option<Vec<QScalar>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut aug = m.clone();
    for (i, row) in aug.iter_mut().enumerate() {
        row.push(b[i].clone());
    }
    let (ech, pivots) = row_echelon(aug);
    // inconsistent?
    for row in &ech {
        if row[..cols].iter().all(|x| x.is_zero()) && !row[cols].is_zero() {
            return None;
        }
    }
    if pivots.iter().any(|&c| c == cols) {
        return None;
    }
    if pivots.len() < cols {
        return None;
    }
    let mut x = vec![QScalar::zero(); cols];
    for (ri, &pc) in pivots.iter().enumerate() {
        x[pc] = ech[ri][cols].clone();
    }
    Some(x)
}

/// Sylvester's criterion: a symmetric matrix is positive definite iff all
/// leading principal minors are positive. Exact over the field.
pub fn is_positive_definite(m: &Matrix) -> bool {
    let n = m.len();
    for k in 1..=n {
        let sub: Matrix = (0..k).map(|i| m[i][..k].to_vec()).collect();
        let d = determinant(&sub);
        if !d.is_positive() {
            return false;
        }
    }
    true
}

/// Determinant by fraction-free-ish Gaussian elimination (field arithmetic,
/// so plain elimination with pivot tracking suffices).
pub fn determinant(m: &Matrix) -> QScalar {
    let n = m.len();
    let mut a = m.clone();
    let mut det = QScalar::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return QScalar::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = det.checked_mul(&a[c][c]).expect("field");
        let inv = a[c][c].checked_inv().expect("nonzero");
        for i in (c + 1)..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].checked_mul(&inv).expect("field");
            for j in c..n {
                let sub = f.checked_mul(&a[c][j]).expect("field");
                a[i][j] = a[i][j].checked_sub(&sub).expect("field");
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QScalar {
        QScalar::from_int(n)
    }

    #[test]
    fn rank_and_nullspace() {
        let m = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)], vec![q(0), q(1), q(1)]];
        assert_eq!(rank(&m), 2);
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 1);
        // check m * v = 0
        for row in &m {
            let mut acc = QScalar::zero();
            for (a, b) in row.iter().zip(&ns[0]) {
                acc = acc.checked_add(&a.checked_mul(b).unwrap()).unwrap();
            }
            assert!(acc.is_zero());
        }
    }

    #[test]
    fn solve_simple() {
        let m = vec![vec![q(2), q(0)], vec![q(1), q(1)]];
        let x = solve(&m, &[q(4), q(5)]).unwrap();
        assert_eq!(x, vec![q(2), q(3)]);
        assert!(solve(&vec![vec![q(1), q(1)]], &[q(1)]).is_none());
    }

    #[test]
    fn determinant_and_pd() {
        let m = vec![vec![q(2), q(1)], vec![q(1), q(2)]];
        assert_eq!(determinant(&m), q(3));
        assert!(is_positive_definite(&m));
        let not_pd = vec![vec![q(1), q(2)], vec![q(2), q(1)]];
        assert!(!is_positive_definite(&not_pd));
    }
}
