//! Dense row-major matrices and the kernel family used throughout the
//! crate: products, transposes, row/column norms, entrywise squares, and
//! the two inverse-square-root whitening routines (iterative
//! Newton-Schulz and a Jacobi eigendecomposition reference).
//!
//! Everything is 64-bit and CPU-only; values are immutable once built and
//! safe to share across threads.

use crate::error::{Error, Result};
use core::fmt;

/// Suggested Newton-Schulz iteration count for optimizer steps. Analysis
/// paths that need tighter orthonormality should pass a larger count to
/// [`newton_schulz_whiten`] or use the convergence-driven
/// [`newton_schulz_whiten_auto`].
pub const DEFAULT_NEWTON_SCHULZ_ITERS: usize = 8;

/// Smallest admissible eigenvalue of `W W^T`, as a fraction of its
/// Frobenius norm. Below this the input is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// An `m x n` real matrix stored row-major in 64-bit precision.
///
/// Invariants: `values.len() == rows * cols`, every entry finite, and
/// both dimensions positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config {
                what: format!("matrix dimensions must be positive, got {rows}x{cols}"),
            });
        }
        if values.len() != rows * cols {
            return Err(Error::Config {
                what: format!(
                    "value buffer of length {} does not fill a {rows}x{cols} matrix",
                    values.len()
                ),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{rows}x{cols} matrix entry {v}"),
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds without the finiteness scan. For kernel outputs whose
    /// inputs were already validated.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.values.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dim {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for l in 0..k {
                let a = self.values[i * k + l];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.values[l * n..(l + 1) * n];
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(m, n, out))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.values.iter().map(|v| v * a).collect(),
        )
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dim {
                op,
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.rows, self.cols, values))
    }

    /// Frobenius inner product `<A, B> = sum_ij A_ij B_ij`.
    pub fn dot(&self, rhs: &Self) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dim {
                op: "dot",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise square, `A := W^{.2}`.
    pub fn hadamard_square(&self) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.values.iter().map(|v| v * v).collect(),
        )
    }

    /// Entrywise product.
    pub fn hadamard(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// The l2 norm of each row, as a length-`m` vector.
    pub fn row_l2_norms(&self) -> Vector {
        let values = (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        Vector::from_raw(values)
    }

    /// The l2 norm of each column, as a length-`n` vector.
    pub fn col_l2_norms(&self) -> Vector {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                sums[j] += v * v;
            }
        }
        Vector::from_raw(sums.into_iter().map(f64::sqrt).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Emits the shared text format: `m n` on the first line, then `m`
    /// lines of `n` space-separated floats at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format emitted by [`to_text`]. Errors carry the
    /// 1-based line number.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            what: "empty matrix file".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                what: format!("expected header 'm n', got {header:?}"),
            });
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: 1,
                what: format!("bad dimension {s:?}"),
            })
        };
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        let mut values = Vec::with_capacity(rows * cols);
        let mut seen = 0usize;
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if seen == rows {
                return Err(Error::Parse {
                    line: idx + 1,
                    what: format!("expected {rows} data rows, found more"),
                });
            }
            let mut count = 0usize;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    what: format!("bad float {tok:?}"),
                })?;
                values.push(v);
                count += 1;
            }
            if count != cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    what: format!("expected {cols} entries, found {count}"),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                what: format!("expected {rows} data rows, found {seen}"),
            });
        }
        Self::from_vec(rows, cols, values).map_err(|e| Error::Parse {
            line: 1,
            what: e.to_string(),
        })
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "[{}]", line.join(", "))?;
        }
        Ok(())
    }
}

/// A finite real vector in 64-bit precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    values: Vec<f64>,
}

impl Vector {
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config {
                what: "vector length must be positive".into(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("vector entry {v}"),
            });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::from_vec(values.to_vec())
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_raw(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dot(&self, rhs: &Self) -> Result<f64> {
        if self.len() != rhs.len() {
            return Err(Error::Dim {
                op: "vector dot",
                lhs: (self.len(), 1),
                rhs: (rhs.len(), 1),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(self.values.iter().map(|v| v * a).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.len() != rhs.len() {
            return Err(Error::Dim {
                op: "vector sub",
                lhs: (self.len(), 1),
                rhs: (rhs.len(), 1),
            });
        }
        Ok(Self::from_raw(
            self.values
                .iter()
                .zip(&rhs.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        ))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.len() != rhs.len() {
            return Err(Error::Dim {
                op: "vector add",
                lhs: (self.len(), 1),
                rhs: (rhs.len(), 1),
            });
        }
        Ok(Self::from_raw(
            self.values
                .iter()
                .zip(&rhs.values)
                .map(|(&a, &b)| a + b)
                .collect(),
        ))
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and the orthogonal `V` with
/// `S = V diag(l) V^T`. Sweeps until the off-diagonal Frobenius mass
/// falls below `1e-14 * ||S||_F`.
pub(crate) fn jacobi_eigh(s: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if s.rows() != s.cols() {
        return Err(Error::Dim {
            op: "jacobi_eigh",
            lhs: s.shape(),
            rhs: s.shape(),
        });
    }
    let n = s.rows();
    let mut a = s.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = s.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tol = 1e-14 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // stable rotation: t = sign(theta) / (|theta| + sqrt(theta^2 + 1))
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }
    let eigs = (0..n).map(|i| a.get(i, i)).collect();
    Ok((eigs, v))
}

fn check_wide(w: &DenseMatrix, op: &'static str) -> Result<()> {
    if w.rows() > w.cols() {
        return Err(Error::Dim {
            op,
            lhs: w.shape(),
            rhs: (w.cols(), w.rows()),
        });
    }
    Ok(())
}

/// Whitening `W -> (W W^T)^{-1/2} W` by symmetric eigendecomposition.
///
/// The reference implementation for [`newton_schulz_whiten`]: rows of the
/// output are orthonormal to roughly 1e-10. Requires `m <= n` and
/// `W W^T` positive definite above the rank tolerance.
pub fn eig_whiten_oracle(w: &DenseMatrix) -> Result<DenseMatrix> {
    check_wide(w, "eig_whiten_oracle")?;
    let s = w.matmul(&w.transpose())?;
    let (eigs, v) = jacobi_eigh(&s)?;
    let tol = RANK_TOLERANCE * s.frobenius_norm();
    if let Some(l) = eigs.iter().find(|&&l| l < tol) {
        return Err(Error::Singular {
            what: format!(
                "eigenvalue {l:e} of W W^T below rank tolerance {tol:e}"
            ),
        });
    }
    let m = w.rows();
    // S^{-1/2} = V diag(1/sqrt(l)) V^T
    let mut inv_sqrt = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for (k, &l) in eigs.iter().enumerate() {
                acc += v.get(i, k) * v.get(j, k) / l.sqrt();
            }
            inv_sqrt.set(i, j, acc);
        }
    }
    inv_sqrt.matmul(w)
}

/// Coupled Newton-Schulz iteration for `W -> (W W^T)^{-1/2} W`.
///
/// `S = W W^T` is pre-scaled by `1/||S||_F` so its spectrum lies in
/// `(0, 1]`, then the cubic coupled recurrence runs for exactly `iters`
/// steps. Rows of the output approach orthonormality as `iters` grows;
/// see [`DEFAULT_NEWTON_SCHULZ_ITERS`] for the optimizer-facing default.
pub fn newton_schulz_whiten(w: &DenseMatrix, iters: usize) -> Result<DenseMatrix> {
    newton_schulz_impl(w, iters, false)
}

/// Newton-Schulz whitening run to numerical convergence: stops when the
/// coupled residual `||Z Y - I||_F` drops below 1e-13 or stalls, capped
/// at 64 iterations.
pub fn newton_schulz_whiten_auto(w: &DenseMatrix) -> Result<DenseMatrix> {
    newton_schulz_impl(w, 64, true)
}

fn newton_schulz_impl(w: &DenseMatrix, iters: usize, adaptive: bool) -> Result<DenseMatrix> {
    if iters == 0 {
        return Err(Error::Range {
            what: "newton_schulz_whiten requires iters >= 1".into(),
        });
    }
    check_wide(w, "newton_schulz_whiten")?;
    let s = w.matmul(&w.transpose())?;
    let norm = s.frobenius_norm();
    if norm < 1e-300 {
        return Err(Error::Singular {
            what: "W W^T has negligible Frobenius norm".into(),
        });
    }
    let m = w.rows();
    let ident = DenseMatrix::identity(m);
    // Y -> S_n^{1/2}, Z -> S_n^{-1/2} for S_n = S / ||S||_F.
    let mut y = s.scale(1.0 / norm);
    let mut z = ident.clone();
    let mut best = f64::INFINITY;
    for _ in 0..iters {
        let zy = z.matmul(&y)?;
        if adaptive {
            let resid = zy.sub(&ident)?.frobenius_norm();
            if resid < 1e-13 || resid >= best {
                break;
            }
            best = resid;
        }
        // T = (3I - Z Y) / 2
        let t = ident.scale(3.0).sub(&zy)?.scale(0.5);
        y = y.matmul(&t)?;
        z = t.matmul(&z)?;
        if z.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular {
                what: "Newton-Schulz iteration diverged".into(),
            });
        }
    }
    // (W W^T)^{-1/2} = S_n^{-1/2} / sqrt(||S||_F)
    z.scale(1.0 / norm.sqrt()).matmul(w)
}
