//! Observation model: spatial blur + decimation produce the low-resolution
//! HSI, a spectral response matrix produces the MSI, and additive Gaussian
//! noise is scaled to a target SNR.
//!
//! Blur is circular 2-D convolution over the two spatial modes, applied per
//! band. Decimation keeps the phase-0 grid (samples at multiples of the
//! factor in both spatial dims). The spectral response acts as a mode-3
//! product.
//!
//! # Noise determinism
//!
//! The noise field is a pure function of `(seed, element index)`: element `i`
//! reads words `4i..4i+4` of a ChaCha8 stream seeded with `seed` and converts
//! two 53-bit uniforms by Box-Muller. Traversal order therefore cannot change
//! the field, and any element can be regenerated in isolation.
//! [`simulate_observations`] uses `seed` for the HSI noise and `seed + 1`
//! (wrapping) for the MSI noise.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::tensor::{mode_n_product, Tensor3};

// ---------------------------------------------------------------------------
// Kernels and the model
// ---------------------------------------------------------------------------

/// Gaussian blur kernel on a `k x k` integer grid centered at `(k/2, k/2)`,
/// normalized to sum 1. `k` must be odd and `sigma` positive.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Result<Mat> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Parameter(format!("kernel size must be odd, got {k}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("kernel sigma must be positive, got {sigma}")));
    }
    let c = (k / 2) as f64;
    let mut m = Mat::zeros(k, k);
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            let da = a as f64 - c;
            let db = b as f64 - c;
            let v = (-(da * da + db * db) / (2.0 * sigma * sigma)).exp();
            m.set(a, b, v);
            sum += v;
        }
    }
    for v in m.data.iter_mut() {
        *v /= sum;
    }
    Ok(m)
}

/// The identity kernel: blur with it is a no-op.
pub fn delta_kernel() -> Mat {
    Mat { rows: 1, cols: 1, data: vec![1.0] }
}

/// Parses a kernel description: `gaussian:<k>:<sigma>` or `delta`.
pub fn parse_kernel_spec(spec: &str) -> Result<Mat> {
    if spec == "delta" {
        return Ok(delta_kernel());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 && parts[0] == "gaussian" {
        let k: usize = parts[1]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad kernel size in spec '{spec}'")))?;
        let sigma: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad kernel sigma in spec '{spec}'")))?;
        return gaussian_kernel(k, sigma);
    }
    Err(Error::Parameter(format!(
        "unrecognized kernel spec '{spec}' (expected 'gaussian:<k>:<sigma>' or 'delta')"
    )))
}

/// Everything needed to degrade a reference scene: blur kernel, decimation
/// factor, and spectral response. Construction normalizes the kernel to sum 1
/// and each spectral response row to sum 1, so supplied instrument curves are
/// accepted as-is.
#[derive(Clone, Debug)]
pub struct DegradationModel {
    kernel: Mat,
    factor: usize,
    srf: Mat,
}

impl DegradationModel {
    pub fn new(kernel: Mat, factor: usize, srf: Mat) -> Result<Self> {
        if kernel.rows != kernel.cols || kernel.rows % 2 == 0 {
            return Err(Error::Parameter(format!(
                "blur kernel must be square with odd side, got {}x{}",
                kernel.rows, kernel.cols
            )));
        }
        if factor == 0 {
            return Err(Error::Parameter("decimation factor must be at least 1".into()));
        }
        let ksum: f64 = kernel.data.iter().sum();
        if !(ksum > 0.0) || !ksum.is_finite() {
            return Err(Error::Parameter("blur kernel must have a positive finite sum".into()));
        }
        let kernel = kernel.scale(1.0 / ksum);
        if srf.rows == 0 || srf.cols == 0 {
            return Err(Error::Parameter("spectral response must be nonempty".into()));
        }
        let mut srf = srf;
        for r in 0..srf.rows {
            let row = srf.row(r);
            if row.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "spectral response row {r} has negative or non-finite entries"
                )));
            }
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0) {
                return Err(Error::Parameter(format!("spectral response row {r} sums to zero")));
            }
            for v in srf.row_mut(r) {
                *v = v.max(0.0) / sum;
            }
        }
        Ok(DegradationModel { kernel, factor, srf })
    }

    pub fn kernel(&self) -> &Mat {
        &self.kernel
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn srf(&self) -> &Mat {
        &self.srf
    }

    /// Number of bands the spectral response consumes (HSI bands).
    pub fn hsi_bands(&self) -> usize {
        self.srf.cols
    }

    /// Number of bands the spectral response produces (MSI bands).
    pub fn msi_bands(&self) -> usize {
        self.srf.rows
    }
}

// ---------------------------------------------------------------------------
// Blur
// ---------------------------------------------------------------------------

/// Circular 2-D convolution of one `w x h` first-index-fastest plane.
/// `adjoint` applies the transposed operator (correlation).
pub fn blur_plane(input: &[f64], w: usize, h: usize, kernel: &Mat, adjoint: bool) -> Vec<f64> {
    assert_eq!(input.len(), w * h, "plane length mismatch");
    let k = kernel.rows;
    let c = (k / 2) as i64;
    let sign: i64 = if adjoint { 1 } else { -1 };
    let xw: Vec<Vec<usize>> = (0..k)
        .map(|a| {
            (0..w)
                .map(|x| (x as i64 + sign * (a as i64 - c)).rem_euclid(w as i64) as usize)
                .collect()
        })
        .collect();
    let yw: Vec<Vec<usize>> = (0..k)
        .map(|b| {
            (0..h)
                .map(|y| (y as i64 + sign * (b as i64 - c)).rem_euclid(h as i64) as usize)
                .collect()
        })
        .collect();
    let mut out = vec![0.0; w * h];
    for b in 0..k {
        for a in 0..k {
            let weight = kernel.get(a, b);
            if weight == 0.0 {
                continue;
            }
            let xa = &xw[a];
            let yb = &yw[b];
            for y in 0..h {
                let src = &input[w * yb[y]..w * yb[y] + w];
                let dst = &mut out[w * y..w * y + w];
                for x in 0..w {
                    dst[x] += weight * src[xa[x]];
                }
            }
        }
    }
    out
}

/// Per-band circular blur over the two spatial modes.
pub fn blur_apply(t: &Tensor3, kernel: &Mat) -> Tensor3 {
    let (w, h, s) = t.dims();
    let mut out = Tensor3::zeros(t.dims());
    for band in 0..s {
        let plane = blur_plane(t.band(band), w, h, kernel, false);
        out.band_mut(band).copy_from_slice(&plane);
    }
    out
}

/// Adjoint of [`blur_apply`]; equal to it for symmetric kernels.
pub fn blur_adjoint(t: &Tensor3, kernel: &Mat) -> Tensor3 {
    let (w, h, s) = t.dims();
    let mut out = Tensor3::zeros(t.dims());
    for band in 0..s {
        let plane = blur_plane(t.band(band), w, h, kernel, true);
        out.band_mut(band).copy_from_slice(&plane);
    }
    out
}

/// Dense circulant matrix of the plane blur; oracle counterpart of
/// [`blur_plane`] for tiny planes.
pub fn blur_matrix(w: usize, h: usize, kernel: &Mat) -> Mat {
    let k = kernel.rows;
    let c = k as i64 / 2;
    let n = w * h;
    let mut m = Mat::zeros(n, n);
    for y in 0..h {
        for x in 0..w {
            let row = x + w * y;
            for b in 0..k {
                for a in 0..k {
                    let sx = (x as i64 - (a as i64 - c)).rem_euclid(w as i64) as usize;
                    let sy = (y as i64 - (b as i64 - c)).rem_euclid(h as i64) as usize;
                    let col = sx + w * sy;
                    m.set(row, col, m.get(row, col) + kernel.get(a, b));
                }
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Decimation
// ---------------------------------------------------------------------------

/// Keeps the phase-0 sample grid: `out(i, j, b) = in(i*d, j*d, b)`. The
/// factor must divide both spatial dims.
pub fn downsample(t: &Tensor3, d: usize) -> Result<Tensor3> {
    let (w, h, s) = t.dims();
    if d == 0 || w % d != 0 || h % d != 0 {
        return Err(Error::Dimension(format!(
            "decimation factor {d} must divide spatial dims {w}x{h}"
        )));
    }
    let mut out = Tensor3::zeros((w / d, h / d, s));
    for b in 0..s {
        for j in 0..h / d {
            for i in 0..w / d {
                out.set(i, j, b, t.get(i * d, j * d, b));
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`downsample`]: scatters samples back onto the phase-0 grid,
/// zero elsewhere.
pub fn upsample_zero(t: &Tensor3, d: usize) -> Tensor3 {
    let (w, h, s) = t.dims();
    let mut out = Tensor3::zeros((w * d, h * d, s));
    for b in 0..s {
        for j in 0..h {
            for i in 0..w {
                out.set(i * d, j * d, b, t.get(i, j, b));
            }
        }
    }
    out
}

/// Nearest-neighbor upsampling (pixel replication); used for initialization.
pub fn nn_upsample(t: &Tensor3, d: usize) -> Tensor3 {
    let (w, h, s) = t.dims();
    Tensor3::from_fn((w * d, h * d, s), |i, j, b| t.get(i / d, j / d, b))
}

/// Zeroes every plane position off the phase-0 grid: `upsample_zero
/// (downsample(.))` fused for the matrix-free normal operator.
pub fn mask_to_sample_grid(plane: &mut [f64], w: usize, h: usize, d: usize) {
    for y in 0..h {
        let on_row = y % d == 0;
        let row = &mut plane[w * y..w * y + w];
        for (x, v) in row.iter_mut().enumerate() {
            if !on_row || x % d != 0 {
                *v = 0.0;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Spectral response
// ---------------------------------------------------------------------------

/// Applies the spectral response along mode 3: `unfold(out, 3) = srf *
/// unfold(in, 3)`.
pub fn spectral_apply(t: &Tensor3, srf: &Mat) -> Result<Tensor3> {
    mode_n_product(t, srf, 3)
}

/// Adjoint of [`spectral_apply`] (mode-3 product with the transpose).
pub fn spectral_adjoint(t: &Tensor3, srf: &Mat) -> Result<Tensor3> {
    mode_n_product(t, &srf.transpose(), 3)
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

/// Standard normal draw for `(seed, index)`; see the module docs for the
/// exact construction.
pub fn gaussian_sample(seed: u64, index: u64) -> f64 {
    let base = ChaCha8Rng::seed_from_u64(seed);
    sample_from(&base, index)
}

fn sample_from(base: &ChaCha8Rng, index: u64) -> f64 {
    let mut rng = base.clone();
    rng.set_word_pos((index as u128) * 4);
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Adds white Gaussian noise scaled so the signal-to-noise ratio is `snr_db`:
/// the noise variance is `mean(t^2) / 10^(snr_db/10)`. An infinite `snr_db`
/// returns the input unchanged; an identically zero input is an error because
/// the scale would be undefined. No clipping is applied.
pub fn add_noise_snr(t: &Tensor3, snr_db: f64, seed: u64) -> Result<Tensor3> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(t.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::Parameter(format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let power = t.values().iter().map(|x| x * x).sum::<f64>() / t.len() as f64;
    if power == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut out = t.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        *v += sigma * sample_from(&base, i as u64);
    }
    Ok(out)
}

/// Degrades a reference scene into the observation pair: blurred + decimated
/// HSI at `snr_hsi` dB and spectrally integrated MSI at `snr_msi` dB. Noise
/// streams are seeded with `seed` (HSI) and `seed + 1` (MSI).
pub fn simulate_observations(
    z: &Tensor3,
    model: &DegradationModel,
    snr_hsi: f64,
    snr_msi: f64,
    seed: u64,
) -> Result<(Tensor3, Tensor3)> {
    let (_, _, bands) = z.dims();
    if bands != model.hsi_bands() {
        return Err(Error::Dimension(format!(
            "scene has {bands} bands but spectral response expects {}",
            model.hsi_bands()
        )));
    }
    let x_clean = downsample(&blur_apply(z, &model.kernel), model.factor)?;
    let x = add_noise_snr(&x_clean, snr_hsi, seed)?;
    let y_clean = spectral_apply(z, &model.srf)?;
    let y = add_noise_snr(&y_clean, snr_msi, seed.wrapping_add(1))?;
    Ok((x, y))
}

// ---------------------------------------------------------------------------
