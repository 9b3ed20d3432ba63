//! Dense complex linear algebra on top of `faer`.

use crate::error::{Error, Result};
use crate::C64;
use faer::col::ColRef;
use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::Mat;

pub type CMat = Mat<C64>;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len(), "matvec dimension mismatch");
    let y = a * ColRef::from_slice(x);
    y.iter().copied().collect()
}

/// `y += a * x`.
pub fn matvec_add(a: &CMat, x: &[C64], y: &mut [C64]) {
    let ax = matvec(a, x);
    for (yi, v) in y.iter_mut().zip(ax) {
        *yi += v;
    }
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    a * faer::Scale(s)
}

/// `diag(d) * a`.
pub fn diag_left(d: &[C64], a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)])
}

/// `a * diag(d)`.
pub fn diag_right(a: &CMat, d: &[C64]) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j])
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for v in a.col_as_slice(j) {
            m = m.max(v.norm());
        }
    }
    m
}

/// Induced infinity norm (maximum absolute row sum).
pub fn norm_inf(a: &CMat) -> f64 {
    let mut rows = vec![0.0f64; a.nrows()];
    for j in 0..a.ncols() {
        for (r, v) in rows.iter_mut().zip(a.col_as_slice(j)) {
            *r += v.norm();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Induced one norm (maximum absolute column sum).
pub fn norm_one(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.col_as_slice(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_max_abs(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Places `blocks[i][j]` into one dense matrix.
pub fn assemble_blocks(blocks: &[Vec<&CMat>]) -> CMat {
    let rows: Vec<usize> = blocks.iter().map(|r| r[0].nrows()).collect();
    let cols: Vec<usize> = blocks[0].iter().map(|b| b.ncols()).collect();
    let mut out = zeros(rows.iter().sum(), cols.iter().sum());
    let mut r0 = 0;
    for (bi, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (bj, b) in row.iter().enumerate() {
            out.as_mut()
                .submatrix_mut(r0, c0, rows[bi], cols[bj])
                .copy_from(b.as_ref());
            c0 += cols[bj];
        }
        r0 += rows[bi];
    }
    out
}

pub fn block(a: &CMat, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
    a.as_ref().submatrix(r0, c0, rows, cols).to_owned()
}

/// LU factorization with partial pivoting and a condition estimate taken
/// from the explicit inverse.
pub struct DenseLu {
    lu: PartialPivLu<C64>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &CMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "LU of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Self {
            lu: a.partial_piv_lu(),
            n: a.nrows(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let mut x = CMat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        x.col_as_slice(0).to_vec()
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b)
    }

    pub fn inverse(&self) -> CMat {
        self.lu.inverse()
    }
}

/// Inverts `a`, failing when the one-norm condition estimate exceeds `max_cond`.
pub fn checked_inverse(a: &CMat, max_cond: f64, context: &str) -> Result<CMat> {
    let inv = DenseLu::new(a)?.inverse();
    let finite = (0..inv.ncols()).all(|j| inv.col_as_slice(j).iter().all(|v| v.is_finite()));
    let estimate = if finite {
        norm_one(a) * norm_one(&inv)
    } else {
        f64::INFINITY
    };
    if !(estimate <= max_cond) {
        return Err(Error::Singular {
            context: context.to_string(),
            estimate,
        });
    }
    Ok(inv)
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues()
        .map_err(|e| Error::Singular {
            context: format!("eigenvalue iteration failed: {e:?}"),
            estimate: f64::INFINITY,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_assembly_round_trips() {
        let a = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        let b = CMat::from_fn(2, 2, |i, j| C64::new(10.0 + i as f64, j as f64));
        let c = CMat::from_fn(1, 3, |_, j| C64::new(-1.0, j as f64));
        let d = CMat::from_fn(1, 2, |_, j| C64::new(-2.0, j as f64));
        let m = assemble_blocks(&[vec![&a, &b], vec![&c, &d]]);
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.ncols(), 5);
        assert_eq!(block(&m, 0, 3, 2, 2), b);
        assert_eq!(block(&m, 2, 0, 1, 3), c);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = identity(3);
        a[(2, 2)] = C64::new(0.0, 0.0);
        assert!(checked_inverse(&a, 1e12, "test").is_err());
        assert!(checked_inverse(&identity(3), 1e12, "test").is_ok());
    }
}
