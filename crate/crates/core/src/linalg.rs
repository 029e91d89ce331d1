//! Dense matrix helpers: real/complex storage, one-sided Jacobi SVD,
//! a symmetric Jacobi eigensolver, and an LU solve with partial pivoting.
//!
//! All factorizations here are deterministic: no randomized pivoting, fixed
//! sweep order, stable tie handling. Jacobi iterations are quadratically
//! convergent and deliver near machine-precision factors for the small and
//! moderately sized matrices this crate works with (spectral bases, FFT-domain
//! frontal slices, subspace Gram matrices).

use num_complex::Complex;

use crate::error::{Error, Result};

/// Relative off-diagonal threshold at which Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-14;
/// Hard cap on Jacobi sweeps; convergence normally takes well under 20.
const MAX_SWEEPS: usize = 64;

// ---------------------------------------------------------------------------
// Dense storage
// ---------------------------------------------------------------------------

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged or empty matrix rows".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<f64>>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex::new(0.0, 0.0); rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<f64> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<f64>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn conj_transpose(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        t
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

/// Thin SVD of a complex matrix: `a = u * diag(sigma) * v^H` with
/// `u`: m x r, `v`: n x r, r = min(m, n), singular values non-increasing.
pub struct ComplexSvd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

/// Thin SVD of a real matrix, same conventions as [`ComplexSvd`].
pub struct RealSvd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

fn col_dot(a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

fn col_norm_sqr(a: &[Complex<f64>]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Core one-sided Jacobi pass. Requires m >= n. Returns orthogonalized
/// working columns (unnormalized left vectors) and the accumulated right
/// rotations as columns of `v`.
fn jacobi_orthogonalize(cols: &mut [Vec<Complex<f64>>], v: &mut [Vec<Complex<f64>>]) {
    let n = cols.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let app = col_norm_sqr(&cols[p]);
                let aqq = col_norm_sqr(&cols[q]);
                let apq = col_dot(&cols[p], &cols[q]);
                let g = apq.norm();
                if g <= JACOBI_TOL * (app * aqq).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase that makes the cross term real, then a real rotation.
                // signum(+0.0) is 1.0, which is the rotation we want at tau=0.
                let phase = apq / g;
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = s * phase; // multiplies column p contribution in q
                let spc = s * phase.conj(); // multiplies column q contribution in p
                let (head, tail) = cols.split_at_mut(q);
                let wp = &mut head[p];
                let wq = &mut tail[0];
                for (x, y) in wp.iter_mut().zip(wq.iter_mut()) {
                    let xp = *x;
                    let yq = *y;
                    *x = c * xp - spc * yq;
                    *y = sp * xp + c * yq;
                }
                let (vh, vt) = v.split_at_mut(q);
                let vp = &mut vh[p];
                let vq = &mut vt[0];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let xp = *x;
                    let yq = *y;
                    *x = c * xp - spc * yq;
                    *y = sp * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Extends a set of orthonormal columns of length `m` to a full orthonormal
/// basis by Gram-Schmidt over canonical basis vectors, always absorbing the
/// candidate with the largest residual. Deterministic.
fn orthonormal_fill(cols: &mut Vec<Vec<Complex<f64>>>, m: usize) {
    while cols.len() < m {
        let mut best: Option<(f64, Vec<Complex<f64>>)> = None;
        for k in 0..m {
            let mut cand = vec![Complex::new(0.0, 0.0); m];
            cand[k] = Complex::new(1.0, 0.0);
            for col in cols.iter() {
                let proj = col_dot(col, &cand);
                for (c, &b) in cand.iter_mut().zip(col) {
                    *c -= proj * b;
                }
            }
            let norm = col_norm_sqr(&cand).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, cand));
            }
        }
        let (_, mut cand) = best.expect("fill candidate");
        // Re-orthogonalize once for numerical hygiene, then normalize.
        for col in cols.iter() {
            let proj = col_dot(col, &cand);
            for (c, &b) in cand.iter_mut().zip(col) {
                *c -= proj * b;
            }
        }
        let norm2 = col_norm_sqr(&cand).sqrt().max(f64::MIN_POSITIVE);
        for c in cand.iter_mut() {
            *c /= norm2;
        }
        cols.push(cand);
    }
}

/// Thin SVD via one-sided Jacobi. Left vectors for zero singular values are
/// filled with orthonormal complements so `u` always has orthonormal columns.
pub fn svd_complex(a: &CMat) -> ComplexSvd {
    if a.rows < a.cols {
        let t = svd_complex(&a.conj_transpose());
        return ComplexSvd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<Complex<f64>>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<Complex<f64>>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex::new(0.0, 0.0); n];
            e[j] = Complex::new(1.0, 0.0);
            e
        })
        .collect();
    jacobi_orthogonalize(&mut cols, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| col_norm_sqr(c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    // Exactly-zero columns (for example from an all-zero input) get
    // orthonormal fill vectors; the Jacobi stopping rule already guarantees
    // normalized nonzero columns are mutually orthogonal to ~1e-14.
    let mut sigma = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<Complex<f64>>> = Vec::with_capacity(n);
    for &j in &order {
        sigma.push(norms[j]);
        if norms[j] > 0.0 {
            let inv = 1.0 / norms[j];
            u_cols.push(cols[j].iter().map(|z| z * inv).collect());
        }
    }
    orthonormal_fill(&mut u_cols, m);
    u_cols.truncate(n);

    let mut u = CMat::zeros(m, n);
    for (j, col) in u_cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u.set(i, j, z);
        }
    }
    let mut vm = CMat::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        for i in 0..n {
            vm.set(i, jj, v[j][i]);
        }
    }
    ComplexSvd { u, sigma, v: vm }
}

/// Thin SVD of a real matrix. Runs the complex kernel on real data (phases
/// stay real) and keeps real parts.
pub fn svd_real(a: &Mat) -> RealSvd {
    let mut ca = CMat::zeros(a.rows, a.cols);
    for i in 0..a.rows * a.cols {
        ca.data[i] = Complex::new(a.data[i], 0.0);
    }
    let s = svd_complex(&ca);
    let to_real = |m: &CMat| Mat {
        rows: m.rows,
        cols: m.cols,
        data: m.data.iter().map(|z| z.re).collect(),
    };
    RealSvd { u: to_real(&s.u), sigma: s.sigma, v: to_real(&s.v) }
}

/// Extends the orthonormal columns of `u` (m x r, r <= m) to an m x m
/// unitary matrix.
pub fn complete_unitary(u: &CMat) -> CMat {
    let (m, r) = (u.rows, u.cols);
    assert!(r <= m, "cannot complete a matrix with more columns than rows");
    let mut cols: Vec<Vec<Complex<f64>>> =
        (0..r).map(|j| (0..m).map(|i| u.get(i, j)).collect()).collect();
    orthonormal_fill(&mut cols, m);
    let mut out = CMat::zeros(m, m);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            out.set(i, j, z);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix: returns eigenvalues in
/// non-increasing order and the matching orthonormal eigenvectors as columns.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(a.rows, a.cols, "sym_eigen needs a square matrix");
    let n = a.rows;
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let scale = a.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(w.get(p, q).abs());
            }
        }
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = w.get(p, q);
                if apq.abs() <= JACOBI_TOL * scale * 1e-2 {
                    continue;
                }
                let theta = (w.get(q, q) - w.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let wkp = w.get(k, p);
                    let wkq = w.get(k, q);
                    w.set(k, p, c * wkp - s * wkq);
                    w.set(k, q, s * wkp + c * wkq);
                }
                for k in 0..n {
                    let wpk = w.get(p, k);
                    let wqk = w.get(q, k);
                    w.set(p, k, c * wpk - s * wqk);
                    w.set(q, k, s * wpk + c * wqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let eigvals: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        for i in 0..n {
            vecs.set(i, jj, v.get(i, j));
        }
    }
    (eigvals, vecs)
}

// ---------------------------------------------------------------------------
// LU solve
// ---------------------------------------------------------------------------

/// Solves `a x = b` by LU with partial pivoting. Errors on (numerically)
/// singular systems.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols, "lu_solve needs a square matrix");
    assert_eq!(a.rows, b.len(), "right-hand side length mismatch");
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut x = b.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pmax = k;
        let mut vmax = lu[piv[k] * n + k].abs();
        for r in k + 1..n {
            let v = lu[piv[r] * n + k].abs();
            if v > vmax {
                vmax = v;
                pmax = r;
            }
        }
        if vmax == 0.0 {
            return Err(Error::SolverFailure("singular matrix in LU solve".into()));
        }
        piv.swap(k, pmax);
        let pk = piv[k];
        for r in k + 1..n {
            let pr = piv[r];
            let f = lu[pr * n + k] / lu[pk * n + k];
            lu[pr * n + k] = f;
            for c in k + 1..n {
                lu[pr * n + c] -= f * lu[pk * n + c];
            }
        }
    }
    // Forward substitution on the permuted right-hand side.
    let mut y = vec![0.0; n];
    for r in 0..n {
        let mut acc = x[piv[r]];
        for c in 0..r {
            acc -= lu[piv[r] * n + c] * y[c];
        }
        y[r] = acc;
    }
    // Back substitution.
    for r in (0..n).rev() {
        let mut acc = y[r];
        for c in r + 1..n {
            acc -= lu[piv[r] * n + c] * x[c];
        }
        x[r] = acc / lu[piv[r] * n + r];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
