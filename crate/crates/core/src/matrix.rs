//! Dense row-major `f64` matrices, the structured matrices of the Kronecker
//! calculus, and the block-derivative layout.
//!
//! All indices at this interface are 0-based.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row_slice(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The all-ones matrix `J`.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 1.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension {
                    op: "from_rows",
                    left: (rows.len(), cols),
                    right: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Panics when out of bounds; use [`Matrix::try_get`] for a checked read.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn try_get(&self, i: usize, j: usize) -> Result<f64> {
        if i < self.rows && j < self.cols {
            Ok(self.data[i * self.cols + j])
        } else {
            Err(Error::Index {
                what: "matrix",
                index: (i, j),
                bounds: self.shape(),
            })
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `i` as a `1×cols` matrix.
    pub fn row(&self, i: usize) -> Matrix {
        Matrix {
            rows: 1,
            cols: self.cols,
            data: self.row_slice(i).to_vec(),
        }
    }

    /// Column `j` as a `rows×1` matrix.
    pub fn col(&self, j: usize) -> Matrix {
        Matrix::from_fn(self.rows, 1, |i, _| self.get(i, j))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i])
    }

    /// Matrix product. Accumulation runs over the inner index in increasing
    /// order; zero entries of `self` are skipped, which leaves every finite
    /// result unchanged.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// Product evaluated in single precision: operands are rounded to `f32`
    /// and every multiply-add is performed in `f32`, in the same order as
    /// [`Matrix::matmul`].
    pub fn matmul_f32(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension {
                op: "matmul_f32",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let b32: Vec<f32> = rhs.data.iter().map(|&v| v as f32).collect();
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p] as f32;
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(&b32[p * n..(p + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            rows: m,
            cols: n,
            data: out.into_iter().map(f64::from).collect(),
        })
    }

    fn zip_with(&self, rhs: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Entrywise (Hadamard) product `self ⊙ rhs`.
    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    /// `self += alpha * rhs`.
    pub fn axpy(&mut self, alpha: f64, rhs: &Matrix) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension {
                op: "axpy",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`: block `(i, j)` equals `self[i, j] · rhs`.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let (p, q) = self.shape();
        let (m, n) = rhs.shape();
        let cols = q * n;
        let mut data = vec![0.0; p * m * cols];
        for i in 0..p {
            for j in 0..q {
                let a = self.data[i * q + j];
                if a == 0.0 {
                    continue;
                }
                for r in 0..m {
                    let dst = (i * m + r) * cols + j * n;
                    for (o, &b) in data[dst..dst + n].iter_mut().zip(rhs.row_slice(r)) {
                        *o = a * b;
                    }
                }
            }
        }
        Matrix {
            rows: p * m,
            cols,
            data,
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Sets every entry to the nearest `f32` value.
    pub fn round_to_f32(&self) -> Matrix {
        self.map(|v| v as f32 as f64)
    }
}

/// `k`-dimensional unit column vector with a one in row `j`.
pub fn unit_vector(k: usize, j: usize) -> Result<Matrix> {
    if j >= k {
        return Err(Error::Index {
            what: "unit_vector",
            index: (j, 0),
            bounds: (k, 1),
        });
    }
    let mut e = Matrix::zeros(k, 1);
    e.set(j, 0, 1.0);
    Ok(e)
}

/// Elementary matrix `E_ij` of shape `p×q`.
pub fn elementary(p: usize, q: usize, i: usize, j: usize) -> Result<Matrix> {
    if i >= p || j >= q {
        return Err(Error::Index {
            what: "elementary",
            index: (i, j),
            bounds: (p, q),
        });
    }
    let mut e = Matrix::zeros(p, q);
    e.set(i, j, 1.0);
    Ok(e)
}

/// `U_{p×q} = Σ_ij E_ij^{(p×q)} ⊗ E_ji^{(q×p)}`, a `pq×pq` permutation matrix.
///
/// Block `(i, j)` (of size `q×p`) has its single one at `(j, i)`.
pub fn permutation_u(p: usize, q: usize) -> Matrix {
    let mut u = Matrix::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            u.set(i * q + j, j * p + i, 1.0);
        }
    }
    u
}

/// `Ū_{p×q} = Σ_ij E_ij^{(p×q)} ⊗ E_ij^{(p×q)}`, a `p²×q²` matrix; the
/// derivative of a `p×q` matrix with respect to itself.
pub fn related_ubar(p: usize, q: usize) -> Matrix {
    let mut u = Matrix::zeros(p * p, q * q);
    for i in 0..p {
        for j in 0..q {
            u.set(i * p + i, j * q + j, 1.0);
        }
    }
    u
}

/// Derivative of an `m×n` matrix function with respect to a `p×q` matrix,
/// stored as one `(pm)×(qn)` payload whose `(i, j)` block is `∂F/∂x_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDerivative {
    outer: (usize, usize),
    inner: (usize, usize),
    payload: Matrix,
}

impl BlockDerivative {
    pub fn new(outer: (usize, usize), inner: (usize, usize), payload: Matrix) -> Result<Self> {
        let expected = (outer.0 * inner.0, outer.1 * inner.1);
        if payload.shape() != expected {
            return Err(Error::Dimension {
                op: "block_derivative",
                left: expected,
                right: payload.shape(),
            });
        }
        Ok(Self {
            outer,
            inner,
            payload,
        })
    }

    /// Assembles a derivative from its `p×q` grid of `m×n` blocks.
    pub fn from_blocks(
        outer: (usize, usize),
        inner: (usize, usize),
        mut block: impl FnMut(usize, usize) -> Matrix,
    ) -> Result<Self> {
        let (p, q) = outer;
        let (m, n) = inner;
        let mut payload = Matrix::zeros(p * m, q * n);
        for i in 0..p {
            for j in 0..q {
                let b = block(i, j);
                if b.shape() != inner {
                    return Err(Error::Dimension {
                        op: "from_blocks",
                        left: inner,
                        right: b.shape(),
                    });
                }
                for r in 0..m {
                    for c in 0..n {
                        payload.set(i * m + r, j * n + c, b.get(r, c));
                    }
                }
            }
        }
        Ok(Self {
            outer,
            inner,
            payload,
        })
    }

    #[inline]
    pub fn outer(&self) -> (usize, usize) {
        self.outer
    }

    #[inline]
    pub fn inner(&self) -> (usize, usize) {
        self.inner
    }

    #[inline]
    pub fn payload(&self) -> &Matrix {
        &self.payload
    }

    pub fn into_payload(self) -> Matrix {
        self.payload
    }

    /// The `(i, j)` block, `∂F/∂x_ij`.
    pub fn block(&self, i: usize, j: usize) -> Result<Matrix> {
        let (p, q) = self.outer;
        if i >= p || j >= q {
            return Err(Error::Index {
                what: "block",
                index: (i, j),
                bounds: self.outer,
            });
        }
        let (m, n) = self.inner;
        Ok(Matrix::from_fn(m, n, |r, c| self.payload.get(i * m + r, j * n + c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_kron(a: &Matrix, b: &Matrix) -> Matrix {
        let (p, q) = a.shape();
        let (m, n) = b.shape();
        Matrix::from_fn(p * m, q * n, |r, c| a.get(r / m, c / n) * b.get(r % m, c % n))
    }

    #[test]
    fn kron_identity_and_ones_scalar() {
        let b = Matrix::from_rows(&[[1.0, -2.0, 3.0], [4.0, 5.0, 6.5]]).unwrap();
        assert_eq!(Matrix::identity(1).kron(&b), b);
        assert_eq!(Matrix::ones(1, 1).kron(&b), b);
    }

    #[test]
    fn kron_matches_four_index_definition() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let expected = Matrix::from_rows(&[
            [0.0, 1.0, 0.0, 2.0],
            [1.0, 0.0, 2.0, 0.0],
            [0.0, 3.0, 0.0, 4.0],
            [3.0, 0.0, 4.0, 0.0],
        ])
        .unwrap();
        assert_eq!(a.kron(&b), expected);
        assert_eq!(brute_kron(&a, &b), expected);
    }

    #[test]
    fn hadamard_cases() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(a.hadamard(&Matrix::ones(2, 2)).unwrap(), a);
        assert_eq!(a.hadamard(&Matrix::zeros(2, 2)).unwrap(), Matrix::zeros(2, 2));
        let c = Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(
            a.hadamard(&c).unwrap(),
            Matrix::from_rows(&[[2.0, 0.0], [0.0, 8.0]]).unwrap()
        );
        assert!(matches!(
            a.hadamard(&Matrix::zeros(2, 3)),
            Err(Error::Dimension { op: "hadamard", .. })
        ));
    }

    #[test]
    fn unit_vectors_extract_columns() {
        assert_eq!(unit_vector(3, 0).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(unit_vector(1, 0).unwrap().as_slice(), &[1.0]);
        assert!(unit_vector(3, 3).is_err());
        let m = Matrix::from_fn(3, 4, |i, j| (i * 7 + j * 3) as f64 - 2.5);
        for j in 0..4 {
            assert_eq!(m.matmul(&unit_vector(4, j).unwrap()).unwrap(), m.col(j));
        }
    }

    #[test]
    fn elementary_matrices() {
        assert_eq!(
            elementary(2, 2, 0, 1).unwrap(),
            Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap()
        );
        let e = elementary(3, 2, 2, 0).unwrap();
        let outer = unit_vector(3, 2)
            .unwrap()
            .matmul(&unit_vector(2, 0).unwrap().transpose())
            .unwrap();
        assert_eq!(e, outer);
        let mut total = Matrix::zeros(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                total = total.add(&elementary(3, 4, i, j).unwrap()).unwrap();
            }
        }
        assert_eq!(total, Matrix::ones(3, 4));
        assert!(elementary(2, 2, 0, 2).is_err());
    }

    fn double_sum(p: usize, q: usize, transpose_second: bool) -> Matrix {
        let mut acc: Option<Matrix> = None;
        for i in 0..p {
            for j in 0..q {
                let second = if transpose_second {
                    elementary(q, p, j, i).unwrap()
                } else {
                    elementary(p, q, i, j).unwrap()
                };
                let term = elementary(p, q, i, j).unwrap().kron(&second);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term).unwrap(),
                });
            }
        }
        acc.unwrap()
    }

    #[test]
    fn structured_matrices_match_double_sums() {
        assert_eq!(permutation_u(1, 1), Matrix::identity(1));
        assert_eq!(related_ubar(1, 1), Matrix::identity(1));
        for p in 1..=4 {
            for q in 1..=4 {
                assert_eq!(permutation_u(p, q), double_sum(p, q, true), "U {p}x{q}");
                assert_eq!(related_ubar(p, q), double_sum(p, q, false), "Ubar {p}x{q}");
                let prod = permutation_u(p, q).matmul(&permutation_u(q, p)).unwrap();
                assert_eq!(prod, Matrix::identity(p * q));
                let u = permutation_u(p, q);
                for r in 0..p * q {
                    assert_eq!(u.row_slice(r).iter().sum::<f64>(), 1.0);
                    assert_eq!(u.col(r).sum(), 1.0);
                }
            }
        }
        let u22 = Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(permutation_u(2, 2), u22);
        let ubar22 = Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(related_ubar(2, 2), ubar22);
    }

    #[test]
    fn block_reads() {
        let whole = Matrix::from_fn(2, 3, |i, j| (i + j) as f64);
        let d = BlockDerivative::new((1, 1), (2, 3), whole.clone()).unwrap();
        assert_eq!(d.block(0, 0).unwrap(), whole);
        assert!(d.block(1, 0).is_err());

        let dw = BlockDerivative::new((2, 3), (2, 3), related_ubar(2, 3)).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(dw.block(i, j).unwrap(), elementary(2, 3, i, j).unwrap());
            }
        }
        assert!(BlockDerivative::new((2, 2), (2, 2), Matrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn matmul_dimension_error() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Dimension { op: "matmul", .. })));
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Matrix::from_vec(2, 2, alloc::vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[alloc::vec![1.0, 2.0], alloc::vec![3.0]]).is_err());
    }
}
