//! Dense real matrices, a deterministic symmetric eigensolver and the
//! projection arithmetic shared by every algorithm in the crate.
//!
//! Everything is row-major `f64`. Matrices here are small (a few thousand
//! rows by a few hundred columns at most) so no sparse or blocked storage is
//! attempted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension at or below which [`sym_eig`] uses cyclic Jacobi rotations.
/// Larger matrices go through Householder tridiagonalization and implicit QL.
pub const JACOBI_MAX_DIM: usize = 64;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Dense row-major matrix with at least one row and one column and only
/// finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixEnvelope", into = "MatrixEnvelope")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// JSON shape of a [`DenseMatrix`]: `{rows, cols, data: [row-major]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixEnvelope {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TryFrom<MatrixEnvelope> for DenseMatrix {
    type Error = Error;

    fn try_from(env: MatrixEnvelope) -> Result<Self> {
        DenseMatrix::new(env.rows, env.cols, env.data)
    }
}

impl From<DenseMatrix> for MatrixEnvelope {
    fn from(m: DenseMatrix) -> Self {
        MatrixEnvelope {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::new(rows.len(), cols, data)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in diag.iter().enumerate() {
            data[i * n + i] = v;
        }
        DenseMatrix::new(n, n, data)
    }

    /// Crate-internal constructor for buffers built from finite arithmetic.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && data.len() == rows * cols);
        DenseMatrix { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_raw(self.cols, self.rows, out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "inner matrix dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let (n, m) = (self.rows, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(&other.data[l * m..(l + 1) * m]) {
                    *o += a * b;
                }
            }
        }
        Ok(DenseMatrix::from_raw(n, m, out))
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                what: "matrix element count",
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_raw(self.rows, self.cols, data))
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        self.map(|v| v * c)
    }

    /// Applies `f` elementwise. The caller keeps the result finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        DenseMatrix::from_raw(self.rows, self.cols, data)
    }

    /// Multiplies column `j` by `factors[j]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "column scale factors",
                expected: self.cols,
                found: factors.len(),
            });
        }
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            for (v, f) in row.iter_mut().zip(factors) {
                *v *= f;
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        sums
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Largest |A_ij - A_ji|; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                what: "square matrix columns",
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        Ok(out)
    }
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in nonincreasing
/// order, eigenvector `i` stored in column `i`.
#[derive(Clone, Debug)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymEigResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// Rank-`k.len()` projection onto the listed eigenvectors.
    pub fn projection(&self, columns: &[usize]) -> Projection {
        let d = self.dim();
        let r = columns.len();
        let mut basis = vec![0.0; d * r];
        for i in 0..d {
            for (c, &k) in columns.iter().enumerate() {
                basis[i * r + c] = self.eigenvectors.get(i, k);
            }
        }
        Projection::from_basis_unchecked(d, r, basis)
    }

    /// Projection onto the leading `r` eigenvectors.
    pub fn leading_projection(&self, r: usize) -> Projection {
        let cols: Vec<usize> = (0..r).collect();
        self.projection(&cols)
    }
}

/// Symmetric eigen-decomposition.
///
/// Cyclic Jacobi for `d <= 64`, Householder tridiagonalization followed by
/// implicit QL above that. Output is deterministic: eigenvalues are sorted
/// descending with ties kept in solver order, and every eigenvector is signed
/// so that its largest-magnitude component is positive.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEigResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "square matrix columns",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let scale = a.max_abs().max(1.0);
    let asym = a.max_asymmetry();
    if asym > 1e-9 * scale {
        return Err(Error::NonSymmetric {
            max_asymmetry: asym,
        });
    }
    let n = a.rows();
    let (values, vectors) = if n <= JACOBI_MAX_DIM {
        jacobi(a)?
    } else {
        tridiagonal_ql(a)?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut out = vec![0.0; n * n];
    for (c, &k) in order.iter().enumerate() {
        eigenvalues.push(values[k]);
        let col: Vec<f64> = (0..n).map(|i| vectors[i * n + k]).collect();
        let sign = sign_of_dominant(&col);
        for i in 0..n {
            out[i * n + c] = sign * col[i];
        }
    }
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors: DenseMatrix::from_raw(n, n, out),
    })
}

/// +1 or -1 so that the first component of (near-)maximal magnitude becomes
/// positive.
fn sign_of_dominant(v: &[f64]) -> f64 {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let lead = v
        .iter()
        .find(|x| x.abs() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(0.0);
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Cyclic Jacobi. Rotations are only applied to nonzero off-diagonal
/// entries, so exact block-diagonal structure survives into the eigenvectors.
fn jacobi(m: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.rows();
    let mut a = m.symmetrized()?.into_vec();
    let mut v = DenseMatrix::identity(n).into_vec();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = JACOBI_REL_TOL * norm;

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Annihilated without rotating when negligible next to both
                // diagonal entries.
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}

/// Householder reduction to tridiagonal form followed by the implicit QL
/// algorithm (the EISPACK `tred2` / `tql2` pair).
fn tridiagonal_ql(m: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.rows();
    let mut v = m.symmetrized()?.into_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let idx = |i: usize, j: usize| i * n + j;

    // tred2
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;

    // tql2
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    let max_iter = 30 * n.max(1);
    let mut total_iter = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                total_iter += 1;
                if total_iter > max_iter * n.max(1) {
                    return Err(Error::NoConvergence {
                        iterations: total_iter,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[idx(k, i + 1)];
                        let vk = v[idx(k, i)];
                        v[idx(k, i + 1)] = s * vk + c * vk1;
                        v[idx(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok((d, v))
}

/// `X^T X`.
pub fn gram(x: &DenseMatrix) -> DenseMatrix {
    let d = x.cols();
    let mut g = vec![0.0; d * d];
    for i in 0..x.rows() {
        let row = x.row(i);
        for (a, &xa) in row.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let g_row = &mut g[a * d..(a + 1) * d];
            for b in a..d {
                g_row[b] += xa * row[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[a * d + b] = g[b * d + a];
        }
    }
    DenseMatrix::from_raw(d, d, g)
}

/// Singular values of `x` in nonincreasing order, `min(n, d)` of them, read
/// off the smaller of the two Gram matrices.
pub fn singular_values(x: &DenseMatrix) -> Vec<f64> {
    let g = if x.rows() < x.cols() {
        gram(&x.transpose())
    } else {
        gram(x)
    };
    // Gram matrices are symmetric by construction.
    let eig = sym_eig(&g).expect("gram matrix is symmetric and finite");
    eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect()
}

/// Maximum entry of `|U^T U - I|` for a row-major `d x r` basis.
fn orthonormality_deviation(d: usize, r: usize, basis: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..r {
        for b in a..r {
            let dot: f64 = (0..d).map(|i| basis[i * r + a] * basis[i * r + b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Rank-`r` orthogonal projection `P = U U^T` over a `d`-dimensional item
/// space, stored together with its orthonormal basis `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    dim: usize,
    rank: usize,
    basis: Vec<f64>,
    matrix: DenseMatrix,
}

impl Projection {
    /// Tolerance on `max |U^T U - I|` accepted by [`Projection::from_basis`].
    pub const ORTHONORMALITY_TOL: f64 = 1e-8;

    /// Wraps a row-major `dim x rank` basis, checking orthonormality.
    pub fn from_basis(dim: usize, rank: usize, basis: Vec<f64>) -> Result<Self> {
        if dim == 0 || rank > dim || basis.len() != dim * rank {
            return Err(Error::InvalidShape {
                rows: dim,
                cols: rank,
                len: basis.len(),
            });
        }
        if let Some(pos) = basis.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / rank.max(1),
                col: pos % rank.max(1),
            });
        }
        let deviation = orthonormality_deviation(dim, rank, &basis);
        if deviation > Self::ORTHONORMALITY_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self::from_basis_unchecked(dim, rank, basis))
    }

    pub(crate) fn from_basis_unchecked(dim: usize, rank: usize, basis: Vec<f64>) -> Self {
        let mut p = vec![0.0; dim * dim];
        for i in 0..dim {
            let ui = &basis[i * rank..(i + 1) * rank];
            for j in i..dim {
                let uj = &basis[j * rank..(j + 1) * rank];
                let v: f64 = ui.iter().zip(uj).map(|(a, b)| a * b).sum();
                p[i * dim + j] = v;
                p[j * dim + i] = v;
            }
        }
        Projection {
            dim,
            rank,
            basis,
            matrix: DenseMatrix::from_raw(dim, dim, p),
        }
    }

    /// The rank-0 projection.
    pub fn zero(dim: usize) -> Self {
        Self::from_basis_unchecked(dim, 0, Vec::new())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_basis_unchecked(dim, dim, DenseMatrix::identity(dim).into_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Row-major `dim x rank` orthonormal basis.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    /// `P = U U^T`.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    /// Frobenius distance between two projection matrices.
    pub fn distance(&self, other: &Projection) -> Result<f64> {
        Ok(self.matrix.sub(&other.matrix)?.frobenius_norm())
    }
}

fn check_projection_dim(x: &DenseMatrix, p: &Projection) -> Result<()> {
    if x.cols() != p.dim() {
        return Err(Error::DimensionMismatch {
            what: "projection dimension",
            expected: x.cols(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// `X P`.
pub fn apply_projection(x: &DenseMatrix, p: &Projection) -> Result<DenseMatrix> {
    check_projection_dim(x, p)?;
    let (n, d, r) = (x.rows(), p.dim(), p.rank());
    if r == 0 {
        return Ok(DenseMatrix::zeros(n, d));
    }
    // (X U) U^T costs 2ndr instead of nd^2.
    let u = DenseMatrix::from_raw(d, r, p.basis().to_vec());
    let xu = x.matmul(&u)?;
    xu.matmul(&u.transpose())
}

/// `||X - X P||_F^2`.
pub fn reconstruction_error(x: &DenseMatrix, p: &Projection) -> Result<f64> {
    let xhat = apply_projection(x, p)?;
    Ok(x.sub(&xhat)?.frobenius_norm_sq())
}
