//! Log tensor nuclear norm (LTNN) and its proximal operator.
//!
//! For an order-3 tensor the LTNN is the slice-wise sum of logarithms of
//! shifted singular values in the FFT domain:
//!
//! `||T||_ltnn = (1/I3) * sum_i sum_j log(sigma_j(T_fft(:,:,i)) + eps)`
//!
//! counting all `min(I1, I2)` singular values per frontal slice. Compared to
//! the tensor nuclear norm, the log tempers the penalty on large singular
//! values, which keeps dominant structure while still suppressing small
//! (noise-carrying) components.
//!
//! The proximal map `argmin_H mu*||H - A||_F^2 + alpha*||H||_ltnn` decouples
//! per FFT slice and per singular value into the scalar problem
//! `min_{x >= 0} (x - sigma)^2 / 2 + tau * log(x + eps)` with
//! `tau = alpha / (2*mu)`. [`ltnn_threshold_scalar`] solves it exactly: the
//! stationary points are roots of a quadratic, and the global minimizer is
//! either 0 or the larger root, decided by comparing objective values.

use crate::linalg::svd_complex;
use crate::tensor::{fft_mode3, ifft_mode3, ComplexTensor3, Tensor3};

/// Parameters of the proximal map: `tau = alpha/(2*mu)` and the log shift
/// `eps` (positive).
#[derive(Clone, Copy, Debug)]
pub struct LtnnParams {
    pub tau: f64,
    pub eps: f64,
}

/// Iterates frontal FFT slices, exploiting conjugate symmetry of a real
/// input: slices `k` and `I3-k` share singular values and conjugate factors,
/// so only `ceil((I3+1)/2)` slice SVDs are needed.
fn half_slice_range(i3: usize) -> impl Iterator<Item = usize> {
    0..=(i3 / 2).min(i3.saturating_sub(1))
}

/// Multiplicity of slice `k` under conjugate symmetry.
fn slice_weight(k: usize, i3: usize) -> f64 {
    let mirror = (i3 - k) % i3;
    if mirror == k {
        1.0
    } else {
        2.0
    }
}

/// LTNN value; `eps` must be positive. The zero tensor evaluates to
/// `min(I1, I2) * log(eps)`.
pub fn ltnn_value(t: &Tensor3, eps: f64) -> f64 {
    assert!(eps > 0.0, "log shift eps must be positive");
    let (i1, i2, i3) = t.dims();
    let xf = fft_mode3(t);
    let mut total = 0.0;
    for k in half_slice_range(i3) {
        let svd = svd_complex(&xf.slice_cmat(k));
        let slice_sum: f64 = svd.sigma.iter().take(i1.min(i2)).map(|&s| (s + eps).ln()).sum();
        total += slice_weight(k, i3) * slice_sum;
    }
    total / i3 as f64
}

/// Exact solution of `min_{x >= 0} (x - sigma)^2 / 2 + tau * log(x + eps)`
/// for `sigma >= 0`, `tau >= 0`, `eps > 0`.
///
/// Stationary points solve `x^2 + (eps - sigma)x + (tau - eps*sigma) = 0`;
/// with `c1 = sigma - eps` and `c2 = c1^2 - 4(tau - eps*sigma)` the candidate
/// is `(c1 + sqrt(c2))/2` when `c2 > 0`, and the result is whichever of that
/// candidate and 0 has the smaller objective. The output never exceeds
/// `sigma`, and `tau = 0` returns `sigma` unchanged.
pub fn ltnn_threshold_scalar(sigma: f64, tau: f64, eps: f64) -> f64 {
    debug_assert!(sigma >= 0.0 && tau >= 0.0 && eps > 0.0);
    if tau == 0.0 {
        // The quadratic route reproduces sigma only up to roundoff.
        return sigma;
    }
    let c1 = sigma - eps;
    let c2 = c1 * c1 - 4.0 * (tau - eps * sigma);
    if c2 <= 0.0 {
        return 0.0;
    }
    let x = 0.5 * (c1 + c2.sqrt());
    if x <= 0.0 {
        return 0.0;
    }
    let f_x = 0.5 * (x - sigma) * (x - sigma) + tau * (x + eps).ln();
    let f_0 = 0.5 * sigma * sigma + tau * eps.ln();
    if f_x <= f_0 {
        x
    } else {
        0.0
    }
}

/// Proximal map of the LTNN: per FFT slice, shrinks each singular value with
/// [`ltnn_threshold_scalar`] and recomposes with the slice's singular
/// vectors. Conjugate symmetry keeps the result real.
pub fn ltnn_prox(t: &Tensor3, params: &LtnnParams) -> Tensor3 {
    assert!(params.eps > 0.0, "log shift eps must be positive");
    assert!(params.tau >= 0.0, "threshold tau must be nonnegative");
    let (i1, i2, i3) = t.dims();
    let xf = fft_mode3(t);
    let mut hf = ComplexTensor3::zeros((i1, i2, i3));
    for k in half_slice_range(i3) {
        let slice = xf.slice_cmat(k);
        let svd = svd_complex(&slice);
        let r = i1.min(i2);
        let mut rec = crate::linalg::CMat::zeros(i1, i2);
        for j in 0..r {
            let s_new = ltnn_threshold_scalar(svd.sigma[j], params.tau, params.eps);
            if s_new == 0.0 {
                continue;
            }
            for a in 0..i1 {
                let ua = svd.u.get(a, j) * s_new;
                for b in 0..i2 {
                    rec.set(a, b, rec.get(a, b) + ua * svd.v.get(b, j).conj());
                }
            }
        }
        hf.set_slice(k, &rec);
        let mirror = (i3 - k) % i3;
        if mirror != k {
            hf.set_slice_conj_of(mirror, k);
        }
    }
    let (h, _max_imag) = ifft_mode3(&hf).real_part();
    h
}
