//! Exact dense linear algebra over `BigRational`.
//!
//! Matrices are small (at most a few dozen rows), so plain `Vec<Vec<_>>`
//! with fraction-exact Gaussian elimination is enough.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type RatMatrix = Vec<Vec<BigRational>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch")]
    Dimension,
}

pub fn identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect()
}

pub fn diagonal(d: &[BigRational]) -> RatMatrix {
    let n = d.len();
    let mut m = zeros(n, n);
    for (i, v) in d.iter().enumerate() {
        m[i][i] = v.clone();
    }
    m
}

pub fn zeros(r: usize, c: usize) -> RatMatrix {
    vec![vec![BigRational::zero(); c]; r]
}

fn is_square(a: &RatMatrix) -> bool {
    a.iter().all(|row| row.len() == a.len())
}

pub fn is_symmetric(a: &RatMatrix) -> bool {
    is_square(a) && (0..a.len()).all(|i| (0..i).all(|j| a[i][j] == a[j][i]))
}

pub fn transpose(a: &RatMatrix) -> RatMatrix {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    (0..c).map(|j| (0..r).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> Result<RatMatrix, LinalgError> {
    let inner = a.first().map_or(0, Vec::len);
    if inner != b.len() {
        return Err(LinalgError::Dimension);
    }
    let cols = b.first().map_or(0, Vec::len);
    Ok(a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(BigRational::zero(), |acc, (x, brow)| acc + x * &brow[j])
                })
                .collect()
        })
        .collect())
}

pub fn determinant(a: &RatMatrix) -> Result<BigRational, LinalgError> {
    if !is_square(a) {
        return Err(LinalgError::NotSquare);
    }
    let n = a.len();
    let mut m = a.clone();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Ok(BigRational::zero());
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pivot;
            for c in col..n {
                let t = &f * &m[col][c];
                m[r][c] -= t;
            }
        }
    }
    Ok(det)
}

pub fn inverse(a: &RatMatrix) -> Result<RatMatrix, LinalgError> {
    if !is_square(a) {
        return Err(LinalgError::NotSquare);
    }
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(LinalgError::Singular)?;
        m.swap(p, col);
        inv.swap(p, col);
        let pivot = m[col][col].recip();
        for c in 0..n {
            m[col][c] *= &pivot;
            inv[col][c] *= &pivot;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in 0..n {
                let t = &f * &m[col][c];
                m[r][c] -= t;
                let t = &f * &inv[col][c];
                inv[r][c] -= t;
            }
        }
    }
    Ok(inv)
}

/// Number of positive and negative eigenvalues `(l, q)` of a nondegenerate
/// symmetric matrix, by exact symmetric elimination (congruence).
pub fn signature(a: &RatMatrix) -> Result<(usize, usize), LinalgError> {
    if !is_symmetric(a) {
        return Err(if is_square(a) {
            LinalgError::NotSymmetric
        } else {
            LinalgError::NotSquare
        });
    }
    let mut m = a.clone();
    let (mut pos, mut neg) = (0, 0);
    while !m.is_empty() {
        let n = m.len();
        let i = match (0..n).find(|&i| !m[i][i].is_zero()) {
            Some(i) => i,
            None => {
                // zero diagonal: fold a row/column with a nonzero off-diagonal
                // entry into row/column i, making m[i][i] = 2 m[i][j]
                let (i, j) = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .find(|&(i, j)| !m[i][j].is_zero())
                    .ok_or(LinalgError::Singular)?;
                for c in 0..n {
                    let t = m[j][c].clone();
                    m[i][c] += t;
                }
                for r in 0..n {
                    let t = m[r][j].clone();
                    m[r][i] += t;
                }
                i
            }
        };
        let pivot = m[i][i].clone();
        if pivot.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        let row_i = m[i].clone();
        let mut next = Vec::with_capacity(n - 1);
        for (r, row) in m.iter().enumerate() {
            if r == i {
                continue;
            }
            let f = &row[i] / &pivot;
            next.push(
                (0..n)
                    .filter(|&c| c != i)
                    .map(|c| &row[c] - &f * &row_i[c])
                    .collect(),
            );
        }
        m = next;
    }
    Ok((pos, neg))
}
