//! Dense order-3 tensors and the algebra the solver is built on: mode-n
//! unfoldings, mode-n products, FFTs along tensor tubes, the tensor SVD
//! (t-SVD) of Kilmer-Martin type, and circular finite differences.
//!
//! Storage is first-index-fastest: element `(i1, i2, i3)` of a tensor with
//! dimensions `(I1, I2, I3)` lives at offset `i1 + I1*(i2 + I2*i3)`. Mode-3
//! slices (`i3` fixed) are therefore contiguous, which the blur and IO paths
//! rely on.
//!
//! Unfolding conventions (`unfold(t, mode)` is `I_mode x prod(rest)`):
//! columns enumerate the remaining indices with the lower-numbered mode
//! fastest. For mode 3 this means entry `(i3, i1 + I1*i2)`, so a row of the
//! mode-3 unfolding is one band stored as a `I1 x I2` plane.
//!
//! FFTs are unnormalized forward and `1/n`-scaled inverse, hence
//! `||t||_F^2 = (1/I3) * ||fft_mode3(t)||_F^2`.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{complete_unitary, svd_complex, CMat, Mat};

pub type Dims = (usize, usize, usize);

// ---------------------------------------------------------------------------
// Real tensor
// ---------------------------------------------------------------------------

/// Dense real order-3 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    values: Vec<f64>,
}

impl Tensor3 {
    /// Wraps a value buffer; the buffer length must equal `I1*I2*I3` and all
    /// dimensions must be at least 1.
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        let (i1, i2, i3) = dims;
        if i1 == 0 || i2 == 0 || i3 == 0 {
            return Err(Error::Dimension(format!("tensor dims must be positive, got {dims:?}")));
        }
        if values.len() != i1 * i2 * i3 {
            return Err(Error::Dimension(format!(
                "value buffer has {} entries, dims {:?} need {}",
                values.len(),
                dims,
                i1 * i2 * i3
            )));
        }
        Ok(Tensor3 { dims, values })
    }

    pub fn zeros(dims: Dims) -> Self {
        Tensor3 { dims, values: vec![0.0; dims.0 * dims.1 * dims.2] }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(dims);
        for i3 in 0..dims.2 {
            for i2 in 0..dims.1 {
                for i1 in 0..dims.0 {
                    t.values[i1 + dims.0 * (i2 + dims.1 * i3)] = f(i1, i2, i3);
                }
            }
        }
        t
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.values[i1 + self.dims.0 * (i2 + self.dims.1 * i3)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: f64) {
        self.values[i1 + self.dims.0 * (i2 + self.dims.1 * i3)] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Contiguous mode-3 slice `(:, :, k)` as an `I1 x I2` first-index-fastest
    /// plane.
    pub fn band(&self, k: usize) -> &[f64] {
        let n = self.dims.0 * self.dims.1;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn band_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dims.0 * self.dims.1;
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "dot shape mismatch");
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, other.dims, "add shape mismatch");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Tensor3 { dims: self.dims, values }
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, other.dims, "sub shape mismatch");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Tensor3 { dims: self.dims, values }
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        Tensor3 { dims: self.dims, values: self.values.iter().map(|x| x * s).collect() }
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Tensor3, factor: f64) {
        assert_eq!(self.dims, other.dims, "add_scaled shape mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    pub fn is_all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Swaps the first two modes.
    pub fn transpose12(&self) -> Tensor3 {
        let (i1, i2, i3) = self.dims;
        Tensor3::from_fn((i2, i1, i3), |a, b, c| self.get(b, a, c))
    }
}

// ---------------------------------------------------------------------------
// Complex tensor
// ---------------------------------------------------------------------------

/// Dense complex order-3 tensor, same layout as [`Tensor3`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor3 {
    dims: Dims,
    values: Vec<Complex<f64>>,
}

impl ComplexTensor3 {
    pub fn zeros(dims: Dims) -> Self {
        ComplexTensor3 { dims, values: vec![Complex::new(0.0, 0.0); dims.0 * dims.1 * dims.2] }
    }

    pub fn from_real(t: &Tensor3) -> Self {
        ComplexTensor3 {
            dims: t.dims,
            values: t.values.iter().map(|&x| Complex::new(x, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> Complex<f64> {
        self.values[i1 + self.dims.0 * (i2 + self.dims.1 * i3)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: Complex<f64>) {
        self.values[i1 + self.dims.0 * (i2 + self.dims.1 * i3)] = v;
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.values
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Mode-3 slice `(:, :, k)` as an `I1 x I2` matrix.
    pub fn slice_cmat(&self, k: usize) -> CMat {
        let (i1, i2, _) = self.dims;
        let mut m = CMat::zeros(i1, i2);
        let base = k * i1 * i2;
        for c in 0..i2 {
            for r in 0..i1 {
                m.set(r, c, self.values[base + r + i1 * c]);
            }
        }
        m
    }

    pub fn set_slice(&mut self, k: usize, m: &CMat) {
        let (i1, i2, _) = self.dims;
        assert_eq!((m.rows, m.cols), (i1, i2), "slice shape mismatch");
        let base = k * i1 * i2;
        for c in 0..i2 {
            for r in 0..i1 {
                self.values[base + r + i1 * c] = m.get(r, c);
            }
        }
    }

    /// Copies the conjugate of slice `src` into slice `dst`.
    pub fn set_slice_conj_of(&mut self, dst: usize, src: usize) {
        let n = self.dims.0 * self.dims.1;
        let (s, d) = (src * n, dst * n);
        for i in 0..n {
            self.values[d + i] = self.values[s + i].conj();
        }
    }

    /// Real part; `max_imag` reports the largest dropped imaginary magnitude.
    pub fn real_part(&self) -> (Tensor3, f64) {
        let mut max_imag = 0.0f64;
        let values = self
            .values
            .iter()
            .map(|z| {
                max_imag = max_imag.max(z.im.abs());
                z.re
            })
            .collect();
        (Tensor3 { dims: self.dims, values }, max_imag)
    }
}

// ---------------------------------------------------------------------------
// Unfold / fold / mode product
// ---------------------------------------------------------------------------

fn mode_size(dims: Dims, mode: usize) -> usize {
    match mode {
        1 => dims.0,
        2 => dims.1,
        3 => dims.2,
        _ => panic!("tensor mode must be 1, 2, or 3, got {mode}"),
    }
}

/// Mode-`mode` unfolding, `I_mode x prod(rest)`, remaining indices with the
/// lower-numbered mode fastest.
pub fn unfold(t: &Tensor3, mode: usize) -> Mat {
    let (i1, i2, i3) = t.dims;
    match mode {
        1 => {
            let mut m = Mat::zeros(i1, i2 * i3);
            for c3 in 0..i3 {
                for c2 in 0..i2 {
                    let col = c2 + i2 * c3;
                    for r in 0..i1 {
                        m.data[r * (i2 * i3) + col] = t.values[r + i1 * (c2 + i2 * c3)];
                    }
                }
            }
            m
        }
        2 => {
            let mut m = Mat::zeros(i2, i1 * i3);
            for c3 in 0..i3 {
                for c1 in 0..i1 {
                    let col = c1 + i1 * c3;
                    for r in 0..i2 {
                        m.data[r * (i1 * i3) + col] = t.values[c1 + i1 * (r + i2 * c3)];
                    }
                }
            }
            m
        }
        3 => {
            // Rows of the mode-3 unfolding are the contiguous band planes.
            let mut m = Mat::zeros(i3, i1 * i2);
            for r in 0..i3 {
                m.row_mut(r).copy_from_slice(t.band(r));
            }
            m
        }
        _ => panic!("tensor mode must be 1, 2, or 3, got {mode}"),
    }
}

/// Inverse of [`unfold`]: rebuilds a tensor with dimensions `dims` from its
/// mode-`mode` unfolding.
pub fn fold(m: &Mat, mode: usize, dims: Dims) -> Result<Tensor3> {
    let (i1, i2, i3) = dims;
    let rest = i1 * i2 * i3 / mode_size(dims, mode);
    if m.rows != mode_size(dims, mode) || m.cols != rest {
        return Err(Error::Dimension(format!(
            "cannot fold {}x{} as mode-{mode} unfolding of {dims:?}",
            m.rows, m.cols
        )));
    }
    let mut t = Tensor3::zeros(dims);
    match mode {
        1 => {
            for c3 in 0..i3 {
                for c2 in 0..i2 {
                    let col = c2 + i2 * c3;
                    for r in 0..i1 {
                        t.values[r + i1 * (c2 + i2 * c3)] = m.data[r * (i2 * i3) + col];
                    }
                }
            }
        }
        2 => {
            for c3 in 0..i3 {
                for c1 in 0..i1 {
                    let col = c1 + i1 * c3;
                    for r in 0..i2 {
                        t.values[c1 + i1 * (r + i2 * c3)] = m.data[r * (i1 * i3) + col];
                    }
                }
            }
        }
        3 => {
            for r in 0..i3 {
                t.band_mut(r).copy_from_slice(m.row(r));
            }
        }
        _ => unreachable!(),
    }
    Ok(t)
}

/// Mode-`mode` product `t x_mode b`: replaces the mode-`mode` dimension
/// `I_mode` by `b.rows`, with `unfold(result, mode) = b * unfold(t, mode)`.
pub fn mode_n_product(t: &Tensor3, b: &Mat, mode: usize) -> Result<Tensor3> {
    let n = mode_size(t.dims, mode);
    if b.cols != n {
        return Err(Error::Dimension(format!(
            "mode-{mode} product needs {n} columns, matrix has {}",
            b.cols
        )));
    }
    let unf = unfold(t, mode);
    let prod = b.mul(&unf);
    let dims = match mode {
        1 => (b.rows, t.dims.1, t.dims.2),
        2 => (t.dims.0, b.rows, t.dims.2),
        3 => (t.dims.0, t.dims.1, b.rows),
        _ => unreachable!(),
    };
    fold(&prod, mode, dims)
}

// ---------------------------------------------------------------------------
// FFT along tensor tubes
// ---------------------------------------------------------------------------

fn mode_stride(dims: Dims, mode: usize) -> usize {
    match mode {
        1 => 1,
        2 => dims.0,
        3 => dims.0 * dims.1,
        _ => panic!("tensor mode must be 1, 2, or 3, got {mode}"),
    }
}

/// Offsets of elements whose mode-`mode` index is zero, i.e. the base of each
/// tube along that mode.
fn tube_bases(dims: Dims, mode: usize) -> Vec<usize> {
    let (i1, i2, i3) = dims;
    let mut bases = Vec::new();
    match mode {
        1 => {
            for c3 in 0..i3 {
                for c2 in 0..i2 {
                    bases.push(i1 * (c2 + i2 * c3));
                }
            }
        }
        2 => {
            for c3 in 0..i3 {
                for c1 in 0..i1 {
                    bases.push(c1 + i1 * i2 * c3);
                }
            }
        }
        3 => {
            for c2 in 0..i2 {
                for c1 in 0..i1 {
                    bases.push(c1 + i1 * c2);
                }
            }
        }
        _ => panic!("tensor mode must be 1, 2, or 3, got {mode}"),
    }
    bases
}

/// In-place FFT of every tube along `mode`. Forward is unnormalized; the
/// inverse divides by the tube length.
pub(crate) fn fft_mode_inplace(ct: &mut ComplexTensor3, mode: usize, inverse: bool) {
    let n = mode_size(ct.dims, mode);
    if n == 1 {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let stride = mode_stride(ct.dims, mode);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for base in tube_bases(ct.dims, mode) {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = ct.values[base + j * stride];
        }
        fft.process(&mut buf);
        if inverse {
            for (j, b) in buf.iter().enumerate() {
                ct.values[base + j * stride] = b * scale;
            }
        } else {
            for (j, b) in buf.iter().enumerate() {
                ct.values[base + j * stride] = *b;
            }
        }
    }
}

/// Unnormalized forward FFT along mode 3.
pub fn fft_mode3(t: &Tensor3) -> ComplexTensor3 {
    let mut ct = ComplexTensor3::from_real(t);
    fft_mode_inplace(&mut ct, 3, false);
    ct
}

/// Inverse FFT along mode 3, scaled by `1/I3`.
pub fn ifft_mode3(ct: &ComplexTensor3) -> ComplexTensor3 {
    let mut out = ct.clone();
    fft_mode_inplace(&mut out, 3, true);
    out
}

// ---------------------------------------------------------------------------
// t-SVD
// ---------------------------------------------------------------------------

/// Tensor SVD factors in the spatial domain: `u` is `I1 x I1 x I3`, `s` is
/// `I1 x I2 x I3` and f-diagonal, `v` is `I2 x I2 x I3`. In the FFT domain
/// every frontal slice of `u` and `v` is unitary and every slice of `s` is
/// diagonal with nonnegative, non-increasing entries.
pub struct TSvdFactors {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
}

/// t-SVD by frontal-slice complex SVDs in the FFT domain. Conjugate symmetry
/// of the real input halves the number of slice SVDs.
pub fn tsvd(t: &Tensor3) -> TSvdFactors {
    let (i1, i2, i3) = t.dims;
    let xf = fft_mode3(t);
    let mut uf = ComplexTensor3::zeros((i1, i1, i3));
    let mut sf = ComplexTensor3::zeros((i1, i2, i3));
    let mut vf = ComplexTensor3::zeros((i2, i2, i3));
    let half = i3 / 2;
    for k in 0..=half {
        if k >= i3 {
            break;
        }
        let slice = xf.slice_cmat(k);
        let svd = svd_complex(&slice);
        let ufull = complete_unitary(&svd.u);
        let vfull = complete_unitary(&svd.v);
        let mut sm = CMat::zeros(i1, i2);
        for (j, &sv) in svd.sigma.iter().enumerate() {
            sm.set(j, j, Complex::new(sv, 0.0));
        }
        uf.set_slice(k, &ufull);
        sf.set_slice(k, &sm);
        vf.set_slice(k, &vfull);
        let mirror = (i3 - k) % i3;
        if mirror != k {
            uf.set_slice_conj_of(mirror, k);
            sf.set_slice_conj_of(mirror, k);
            vf.set_slice_conj_of(mirror, k);
        }
    }
    let (u, _) = ifft_mode3(&uf).real_part();
    let (s, _) = ifft_mode3(&sf).real_part();
    let (v, _) = ifft_mode3(&vf).real_part();
    TSvdFactors { u, s, v }
}

/// Rebuilds the tensor from t-SVD factors: slice-wise `U_k S_k V_k^H` in the
/// FFT domain followed by the inverse FFT.
pub fn tsvd_reconstruct(f: &TSvdFactors) -> Tensor3 {
    let (i1, _, i3) = f.u.dims();
    let i2 = f.v.dims().0;
    let uf = fft_mode3(&f.u);
    let sf = fft_mode3(&f.s);
    let vf = fft_mode3(&f.v);
    let mut xf = ComplexTensor3::zeros((i1, i2, i3));
    for k in 0..i3 {
        let prod = uf.slice_cmat(k).mul(&sf.slice_cmat(k)).mul(&vf.slice_cmat(k).conj_transpose());
        xf.set_slice(k, &prod);
    }
    let (x, _) = ifft_mode3(&xf).real_part();
    x
}

// ---------------------------------------------------------------------------
// Circular finite differences
// ---------------------------------------------------------------------------

/// Circular forward difference along `mode`:
/// `(grad t)(i) = t(i+1 mod n) - t(i)` in the chosen index. A mode of size 1
/// yields the zero tensor.
pub fn grad(t: &Tensor3, mode: usize) -> Tensor3 {
    let n = mode_size(t.dims, mode);
    let stride = mode_stride(t.dims, mode);
    let mut out = Tensor3::zeros(t.dims);
    for base in tube_bases(t.dims, mode) {
        for i in 0..n {
            let next = (i + 1) % n;
            out.values[base + i * stride] =
                t.values[base + next * stride] - t.values[base + i * stride];
        }
    }
    out
}

/// Adjoint of [`grad`]: `(grad^T y)(i) = y(i-1 mod n) - y(i)`.
pub fn grad_adjoint(t: &Tensor3, mode: usize) -> Tensor3 {
    let n = mode_size(t.dims, mode);
    let stride = mode_stride(t.dims, mode);
    let mut out = Tensor3::zeros(t.dims);
    for base in tube_bases(t.dims, mode) {
        for i in 0..n {
            let prev = (i + n - 1) % n;
            out.values[base + i * stride] =
                t.values[base + prev * stride] - t.values[base + i * stride];
        }
    }
    out
}

/// Dense circulant matrix of the forward difference on `n` points; oracle
/// counterpart of [`grad`] via the mode-`n` product.
pub fn grad_matrix(n: usize) -> Mat {
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        d.set(i, (i + 1) % n, d.get(i, (i + 1) % n) + 1.0);
        d.set(i, i, d.get(i, i) - 1.0);
    }
    d
}

// ---------------------------------------------------------------------------
