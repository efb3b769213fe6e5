//! Dense symmetric linear algebra: storage, products, and a blocked
//! Cholesky factorization used both as the strict positive-definiteness
//! check and as the subsystem solver inside the projection loops.

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Row count above which matrix-vector products parallelize over rows.
const PAR_MATVEC_MIN: usize = 256;
/// Order above which the factorization switches to the blocked form.
const BLOCKED_MIN: usize = 192;
/// Panel width of the blocked factorization.
const BLOCK: usize = 128;

/// Four-accumulator dot product. Fixed summation order, so results are
/// reproducible run to run and independent of thread count.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let quads = a.len() & !3;
    let mut t = 0;
    while t < quads {
        acc[0] = acc[0] + a[t] * b[t];
        acc[1] = acc[1] + a[t + 1] * b[t + 1];
        acc[2] = acc[2] + a[t + 2] * b[t + 2];
        acc[3] = acc[3] + a[t + 3] * b[t + 3];
        t += 4;
    }
    let mut tail = T::zero();
    while t < a.len() {
        tail = tail + a[t] * b[t];
        t += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Two dot products of `a` against `b0` and `b1` in one pass; `a` is
/// loaded once, which matters in the factorization's trailing update.
#[inline]
fn dot2<T: Scalar>(a: &[T], b0: &[T], b1: &[T]) -> (T, T) {
    debug_assert_eq!(a.len(), b0.len());
    debug_assert_eq!(a.len(), b1.len());
    let mut acc0 = [T::zero(); 4];
    let mut acc1 = [T::zero(); 4];
    let quads = a.len() & !3;
    let mut t = 0;
    while t < quads {
        acc0[0] = acc0[0] + a[t] * b0[t];
        acc1[0] = acc1[0] + a[t] * b1[t];
        acc0[1] = acc0[1] + a[t + 1] * b0[t + 1];
        acc1[1] = acc1[1] + a[t + 1] * b1[t + 1];
        acc0[2] = acc0[2] + a[t + 2] * b0[t + 2];
        acc1[2] = acc1[2] + a[t + 2] * b1[t + 2];
        acc0[3] = acc0[3] + a[t + 3] * b0[t + 3];
        acc1[3] = acc1[3] + a[t + 3] * b1[t + 3];
        t += 4;
    }
    let mut tail0 = T::zero();
    let mut tail1 = T::zero();
    while t < a.len() {
        tail0 = tail0 + a[t] * b0[t];
        tail1 = tail1 + a[t] * b1[t];
        t += 1;
    }
    (
        (acc0[0] + acc0[1]) + (acc0[2] + acc0[3]) + tail0,
        (acc1[0] + acc1[1]) + (acc1[2] + acc1[3]) + tail1,
    )
}

/// Dense symmetric matrix in row-major full storage.
#[derive(Clone, Debug)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

/// Report of a failed Cholesky factorization: the first nonpositive pivot.
#[derive(Clone, Copy, Debug)]
pub struct NotPositiveDefinite<T> {
    pub index: usize,
    pub pivot: T,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Builds from explicit rows; rows must form a square symmetric matrix.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        for i in 0..n {
            for j in 0..i {
                assert!(
                    m.data[i * n + j] == m.data[j * n + i],
                    "matrix not symmetric at ({i},{j})"
                );
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Parallel mutable row access for assembly loops.
    #[inline]
    pub(crate) fn par_rows_mut(&mut self) -> rayon::slice::ChunksMut<'_, T> {
        self.data.par_chunks_mut(self.n)
    }

    /// `y = A x`. Each output entry is one independent dot product, so the
    /// row-parallel path produces bitwise the same vector as the serial one.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        if self.n >= PAR_MATVEC_MIN {
            (0..self.n)
                .into_par_iter()
                .map(|i| dot(self.row(i), x))
                .collect()
        } else {
            (0..self.n).map(|i| dot(self.row(i), x)).collect()
        }
    }

    /// `(A x)_i` for the given rows only.
    pub fn matvec_rows(&self, x: &[T], rows: &[usize]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        if rows.len() * self.n >= 1 << 18 {
            rows.par_iter().map(|&i| dot(self.row(i), x)).collect()
        } else {
            rows.iter().map(|&i| dot(self.row(i), x)).collect()
        }
    }

    /// `Σ_j coeff_j · A[:, j]` over the given sparse set of columns,
    /// accumulated into `out` (which the caller zero-initializes or seeds).
    pub fn accumulate_columns(&self, cols: &[usize], coeffs: &[T], out: &mut [T]) {
        assert_eq!(cols.len(), coeffs.len());
        assert_eq!(out.len(), self.n);
        for (&j, &c) in cols.iter().zip(coeffs) {
            let row = self.row(j);
            for (o, &a) in out.iter_mut().zip(row) {
                *o = *o + c * a;
            }
        }
    }

    /// Bilinear form `xᵀ A y` evaluated in symmetric order:
    /// `Σ_i A_ii x_i y_i + Σ_{i<j} A_ij (x_i y_j + x_j y_i)`.
    /// Swapping `x` and `y` reproduces the result bit for bit.
    pub fn bilinear_sym(&self, x: &[T], y: &[T]) -> T {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let mut diag = T::zero();
        let mut off = T::zero();
        for i in 0..self.n {
            let row = self.row(i);
            // Grouping keeps every term literally invariant under the
            // swap x ↔ y, so the sum is bitwise symmetric.
            diag = diag + row[i] * (x[i] * y[i]);
            for j in (i + 1)..self.n {
                off = off + row[j] * (x[i] * y[j] + x[j] * y[i]);
            }
        }
        diag + off
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quadratic(&self, x: &[T]) -> T {
        self.bilinear_sym(x, x)
    }

    /// Principal submatrix on the given (sorted or not) index set.
    pub fn gather(&self, idx: &[usize]) -> SymMatrix<T> {
        let m = idx.len();
        let mut out = SymMatrix::zeros(m);
        for (a, &i) in idx.iter().enumerate() {
            let row = self.row(i);
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * m + b] = row[j];
            }
        }
        out
    }

    /// Max row sum of absolute values.
    pub fn inf_norm(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, &v| s + v.abs()))
            .fold(T::zero(), |m, v| if v > m { v } else { m })
    }

    /// Strict Cholesky factorization `A = L Lᵀ`. Fails on the first
    /// nonpositive pivot, which is reported for diagnostics.
    pub fn cholesky(&self) -> Result<Cholesky<T>, NotPositiveDefinite<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let min_pivot = if n >= BLOCKED_MIN {
            cholesky_blocked(&mut a, n)?
        } else {
            cholesky_unblocked(&mut a, n, 0, n)?
        };
        // Zero the strictly upper triangle so the factor is self-contained.
        for i in 0..n {
            for j in (i + 1)..n {
                a[i * n + j] = T::zero();
            }
        }
        Ok(Cholesky {
            n,
            lower: a,
            min_pivot,
        })
    }
}

/// Unblocked lower Cholesky on rows/cols `[k0, k1)` of the row-major buffer,
/// assuming contributions of columns `< k0` are already subtracted.
/// Returns the smallest pivot (pre-square-root) seen.
fn cholesky_unblocked<T: Scalar>(
    a: &mut [T],
    n: usize,
    k0: usize,
    k1: usize,
) -> Result<T, NotPositiveDefinite<T>> {
    let mut min_pivot = T::infinity();
    let mut lj = vec![T::zero(); k1 - k0];
    for j in k0..k1 {
        let prefix = &a[j * n + k0..j * n + j];
        let s = a[j * n + j] - dot(prefix, prefix);
        if s <= T::zero() || !s.is_finite() {
            return Err(NotPositiveDefinite { index: j, pivot: s });
        }
        if s < min_pivot {
            min_pivot = s;
        }
        let d = s.sqrt();
        a[j * n + j] = d;
        let w = j - k0;
        lj[..w].copy_from_slice(&a[j * n + k0..j * n + j]);
        for i in (j + 1)..k1 {
            let s = dot(&a[i * n + k0..i * n + j], &lj[..w]);
            a[i * n + j] = (a[i * n + j] - s) / d;
        }
    }
    Ok(min_pivot)
}

/// Blocked right-looking lower Cholesky; the trailing update is
/// row-parallel and reads the current panel from a scratch copy, so the
/// result is identical to the serial factorization.
fn cholesky_blocked<T: Scalar>(a: &mut [T], n: usize) -> Result<T, NotPositiveDefinite<T>> {
    let mut min_pivot = T::infinity();
    let mut panel: Vec<T> = Vec::new();
    let mut k0 = 0;
    while k0 < n {
        let kb = BLOCK.min(n - k0);
        let k1 = k0 + kb;

        let piv = cholesky_unblocked(a, n, k0, k1)?;
        if piv < min_pivot {
            min_pivot = piv;
        }

        if k1 == n {
            break;
        }

        // Diagonal block scratch (finalized L11).
        let mut diag = vec![T::zero(); kb * kb];
        for r in 0..kb {
            diag[r * kb..r * kb + kb].copy_from_slice(&a[(k0 + r) * n + k0..(k0 + r) * n + k1]);
        }

        // Panel solve: L21 = A21 L11^{-T}, parallel over trailing rows.
        a[k1 * n..n * n]
            .par_chunks_mut(n)
            .for_each(|row| {
                for j in 0..kb {
                    let lj = &diag[j * kb..j * kb + j];
                    let s = row[k0 + j] - dot(&row[k0..k0 + j], lj);
                    row[k0 + j] = s / diag[j * kb + j];
                }
            });

        // Scratch copy of the finalized panel for the trailing update.
        let rows_below = n - k1;
        panel.clear();
        panel.resize(rows_below * kb, T::zero());
        for r in 0..rows_below {
            panel[r * kb..r * kb + kb].copy_from_slice(&a[(k1 + r) * n + k0..(k1 + r) * n + k1]);
        }

        // Trailing update: A22 -= L21 L21ᵀ (lower triangle only), two
        // columns per pass so each row of the panel is streamed once per
        // pair. `dot2` accumulates exactly like `dot`, so the factor is
        // independent of the pairing.
        let panel_ref = &panel;
        a[k1 * n..n * n]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, row)| {
                let pi = &panel_ref[r * kb..r * kb + kb];
                let mut c = 0;
                while c + 1 <= r {
                    let pj0 = &panel_ref[c * kb..c * kb + kb];
                    let pj1 = &panel_ref[(c + 1) * kb..(c + 2) * kb];
                    let (d0, d1) = dot2(pi, pj0, pj1);
                    row[k1 + c] = row[k1 + c] - d0;
                    row[k1 + c + 1] = row[k1 + c + 1] - d1;
                    c += 2;
                }
                while c <= r {
                    let pj = &panel_ref[c * kb..c * kb + kb];
                    row[k1 + c] = row[k1 + c] - dot(pi, pj);
                    c += 1;
                }
            });

        k0 = k1;
    }
    Ok(min_pivot)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
    min_pivot: T,
}

impl<T: Scalar> Cholesky<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest pivot (pre-square-root diagonal) encountered.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    /// Solves `A x = b` by forward/backward substitution.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..n {
            let s = dot(&l[i * n..i * n + i], &z[..i]);
            z[i] = (z[i] - s) / l[i * n + i];
        }
        let mut x = z;
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - l[j * n + i] * x[j];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }

    /// Solve with one step of iterative refinement against `a`
    /// (the matrix this factor came from).
    pub fn solve_refined(&self, a: &SymMatrix<T>, b: &[T]) -> Vec<T> {
        let mut x = self.solve(b);
        let ax = a.matvec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi = *xi + *di;
        }
        x
    }

    /// `‖A⁻¹‖_∞` computed column by column (A is symmetric, so the max
    /// column 1-norm equals the max row sum).
    pub fn inverse_inf_norm(&self) -> T {
        let n = self.n;
        let mut e = vec![T::zero(); n];
        let mut worst = T::zero();
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            let s = col.iter().fold(T::zero(), |acc, &v| acc + v.abs());
            if s > worst {
                worst = s;
            }
        }
        worst
    }
}
