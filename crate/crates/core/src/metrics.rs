//! Reference-based quality metrics: PSNR, SSIM, ERGAS, SAM, and UIQI.
//!
//! Conventions that the cited metric definitions leave open are fixed here
//! and logged in the report so runs stay comparable: the per-band peak is
//! the reference band maximum, PSNR is capped at 99 dB (identical bands
//! would be infinite), SSIM uses an 11x11 Gaussian window with sigma 1.5
//! over valid positions only, and UIQI averages non-overlapping 32x32
//! blocks. All of these are overridable through [`MetricConfig`].

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    /// Sentinel for infinite PSNR; also applied to merely huge values.
    pub psnr_cap_db: f64,
    /// SSIM window side length.
    pub ssim_window: usize,
    /// Standard deviation of the SSIM window.
    pub ssim_sigma: f64,
    /// SSIM stabilizers are `(k1*peak)^2` and `(k2*peak)^2`.
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    /// UIQI block side length; blocks tile with this stride.
    pub uiqi_block: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            psnr_cap_db: 99.0,
            ssim_window: 11,
            ssim_sigma: 1.5,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
            uiqi_block: 32,
        }
    }
}

/// All five metrics plus the per-band curves and the conventions used.
/// `sam_skipped` counts zero-norm pixels, `ergas_skipped` zero-mean bands.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub ergas: f64,
    pub sam_deg: f64,
    pub uiqi: f64,
    pub psnr_band: Vec<f64>,
    pub uiqi_band: Vec<f64>,
    pub sam_skipped: usize,
    pub ergas_skipped: usize,
    pub config: MetricConfig,
}

fn check_dims(reference: &Tensor3, test: &Tensor3) -> Result<()> {
    if reference.dims() != test.dims() {
        return Err(Error::Dimension(format!(
            "metric inputs differ: {:?} vs {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    Ok(())
}

/// Per-band `10*log10(peak^2/MSE)` with the reference band maximum as peak,
/// capped at `cap_db`; returns the mean and the per-band values.
pub fn psnr(reference: &Tensor3, test: &Tensor3, cap_db: f64) -> Result<(f64, Vec<f64>)> {
    check_dims(reference, test)?;
    let (w, h, s) = reference.dims();
    let n = (w * h) as f64;
    let mut per_band = Vec::with_capacity(s);
    for b in 0..s {
        let rb = reference.band(b);
        let tb = test.band(b);
        let peak = rb.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mse: f64 = rb.iter().zip(tb).map(|(r, t)| (r - t) * (r - t)).sum::<f64>() / n;
        let value = 10.0 * (peak * peak / mse).log10();
        per_band.push(value.min(cap_db));
    }
    let mean = per_band.iter().sum::<f64>() / s as f64;
    Ok((mean, per_band))
}

/// Mean spectral angle in degrees. Pixels where either spectrum has zero
/// norm are skipped; the count is returned. The angle is evaluated as
/// `2*atan2(||u - v||, ||u + v||)` on the normalized spectra, which equals
/// arccos of the normalized inner product but is exact for identical and
/// power-of-two-scaled inputs.
pub fn sam(reference: &Tensor3, test: &Tensor3) -> Result<(f64, usize)> {
    check_dims(reference, test)?;
    let (w, h, s) = reference.dims();
    let mut sum = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    let mut r = vec![0.0; s];
    let mut t = vec![0.0; s];
    for j in 0..h {
        for i in 0..w {
            for b in 0..s {
                r[b] = reference.get(i, j, b);
                t[b] = test.get(i, j, b);
            }
            let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nt = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nr == 0.0 || nt == 0.0 {
                skipped += 1;
                continue;
            }
            let mut diff = 0.0;
            let mut plus = 0.0;
            for b in 0..s {
                let (u, v) = (r[b] / nr, t[b] / nt);
                diff += (u - v) * (u - v);
                plus += (u + v) * (u + v);
            }
            sum += 2.0 * diff.sqrt().atan2(plus.sqrt());
            counted += 1;
        }
    }
    let mean = if counted == 0 { 0.0 } else { sum / counted as f64 };
    Ok((mean.to_degrees(), skipped))
}

/// `(100/d) * sqrt(mean_b (RMSE_b / mean_b)^2)` over bands whose reference
/// mean is nonzero; zero-mean bands are excluded and counted.
pub fn ergas(reference: &Tensor3, test: &Tensor3, d: usize) -> Result<(f64, usize)> {
    check_dims(reference, test)?;
    if d == 0 {
        return Err(Error::Parameter("resolution ratio must be at least 1".into()));
    }
    let (w, h, s) = reference.dims();
    let n = (w * h) as f64;
    let mut acc = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for b in 0..s {
        let rb = reference.band(b);
        let tb = test.band(b);
        let mean = rb.iter().sum::<f64>() / n;
        if mean == 0.0 {
            skipped += 1;
            continue;
        }
        let mse: f64 = rb.iter().zip(tb).map(|(r, t)| (r - t) * (r - t)).sum::<f64>() / n;
        acc += mse / (mean * mean);
        counted += 1;
    }
    if counted == 0 {
        return Ok((0.0, skipped));
    }
    Ok((100.0 / d as f64 * (acc / counted as f64).sqrt(), skipped))
}

fn gaussian_window(side: usize, sigma: f64) -> Vec<f64> {
    let c = (side as f64 - 1.0) / 2.0;
    let mut w: Vec<f64> = (0..side * side)
        .map(|k| {
            let (i, j) = ((k % side) as f64, (k / side) as f64);
            (-((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Mean SSIM over valid window positions and bands. The image must be at
/// least as large as the window.
pub fn ssim(reference: &Tensor3, test: &Tensor3, config: &MetricConfig) -> Result<f64> {
    check_dims(reference, test)?;
    let (w, h, s) = reference.dims();
    let side = config.ssim_window;
    if w < side || h < side {
        return Err(Error::Parameter(format!(
            "image {w}x{h} is smaller than the {side}x{side} ssim window"
        )));
    }
    let win = gaussian_window(side, config.ssim_sigma);
    let mut band_sum = 0.0;
    for b in 0..s {
        let rb = reference.band(b);
        let tb = test.band(b);
        let peak = rb.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let c1 = (config.ssim_k1 * peak) * (config.ssim_k1 * peak);
        let c2 = (config.ssim_k2 * peak) * (config.ssim_k2 * peak);
        let mut sum = 0.0;
        let mut windows = 0usize;
        for y0 in 0..=(h - side) {
            for x0 in 0..=(w - side) {
                let (mut mx, mut my) = (0.0, 0.0);
                for wy in 0..side {
                    for wx in 0..side {
                        let g = win[wx + side * wy];
                        let idx = (x0 + wx) + w * (y0 + wy);
                        mx += g * rb[idx];
                        my += g * tb[idx];
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for wy in 0..side {
                    for wx in 0..side {
                        let g = win[wx + side * wy];
                        let idx = (x0 + wx) + w * (y0 + wy);
                        let (dx, dy) = (rb[idx] - mx, tb[idx] - my);
                        vx += g * dx * dx;
                        vy += g * dy * dy;
                        cxy += g * dx * dy;
                    }
                }
                sum += (2.0 * mx * my + c1) * (2.0 * cxy + c2)
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                windows += 1;
            }
        }
        band_sum += sum / windows as f64;
    }
    Ok(band_sum / s as f64)
}

/// Q index of one block pair from means, population variances, and the
/// covariance; degenerate factors follow the stated conventions.
fn q_index(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64) -> f64 {
    let lum = if mx * mx + my * my == 0.0 { 1.0 } else { 2.0 * mx * my / (mx * mx + my * my) };
    let corr = if vx == 0.0 && vy == 0.0 {
        1.0
    } else if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cxy / (vx * vy).sqrt()
    };
    let contrast = if vx + vy == 0.0 { 1.0 } else { 2.0 * (vx * vy).sqrt() / (vx + vy) };
    lum * corr * contrast
}

/// Mean UIQI over non-overlapping blocks and bands, plus the per-band
/// means. The image must fit at least one block.
pub fn uiqi(reference: &Tensor3, test: &Tensor3, block: usize) -> Result<(f64, Vec<f64>)> {
    check_dims(reference, test)?;
    let (w, h, s) = reference.dims();
    if w < block || h < block {
        return Err(Error::Parameter(format!(
            "image {w}x{h} is smaller than the {block}x{block} uiqi block"
        )));
    }
    let n = (block * block) as f64;
    let mut per_band = Vec::with_capacity(s);
    for b in 0..s {
        let rb = reference.band(b);
        let tb = test.band(b);
        let mut sum = 0.0;
        let mut blocks = 0usize;
        let mut y0 = 0;
        while y0 + block <= h {
            let mut x0 = 0;
            while x0 + block <= w {
                let (mut mx, mut my) = (0.0, 0.0);
                for wy in 0..block {
                    for wx in 0..block {
                        let idx = (x0 + wx) + w * (y0 + wy);
                        mx += rb[idx];
                        my += tb[idx];
                    }
                }
                mx /= n;
                my /= n;
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for wy in 0..block {
                    for wx in 0..block {
                        let idx = (x0 + wx) + w * (y0 + wy);
                        let (dx, dy) = (rb[idx] - mx, tb[idx] - my);
                        vx += dx * dx;
                        vy += dy * dy;
                        cxy += dx * dy;
                    }
                }
                sum += q_index(mx, my, vx / n, vy / n, cxy / n);
                blocks += 1;
                x0 += block;
            }
            y0 += block;
        }
        per_band.push(sum / blocks as f64);
    }
    let mean = per_band.iter().sum::<f64>() / s as f64;
    Ok((mean, per_band))
}

/// Evaluates all five metrics with shared conventions.
pub fn compute_report(
    reference: &Tensor3,
    test: &Tensor3,
    d: usize,
    config: &MetricConfig,
) -> Result<MetricReport> {
    let (psnr_db, psnr_band) = psnr(reference, test, config.psnr_cap_db)?;
    let (sam_deg, sam_skipped) = sam(reference, test)?;
    let (ergas_value, ergas_skipped) = ergas(reference, test, d)?;
    let ssim_value = ssim(reference, test, config)?;
    let (uiqi_value, uiqi_band) = uiqi(reference, test, config.uiqi_block)?;
    Ok(MetricReport {
        psnr_db,
        ssim: ssim_value,
        ergas: ergas_value,
        sam_deg,
        uiqi: uiqi_value,
        psnr_band,
        uiqi_band,
        sam_skipped,
        ergas_skipped,
        config: *config,
    })
}
