//! One function per subcommand. All of them stay quiet on stdout except for
//! the summary lines promised in the interface contract.

use std::fs;
use std::io::Write;
use std::path::Path;

use hsfuse_core::degradation::{
    blur_apply, downsample, parse_kernel_spec, simulate_observations, spectral_apply,
    DegradationModel,
};
use hsfuse_core::metrics::{compute_report, MetricConfig};
use hsfuse_core::solver::{solve, SolverConfig, CONVERGENCE_HEADER};
use hsfuse_core::Tensor3;

use crate::args::{ErrormapArgs, FuseArgs, ImportRawArgs, MetricsArgs, SimulateArgs};
use crate::hst::{read_hst, write_hst};
use crate::pgm::write_pgm;
use crate::srf::read_srf;
use crate::Failure;

fn parse_snr(text: &str) -> Result<f64, Failure> {
    if text == "none" {
        return Ok(f64::INFINITY);
    }
    text.parse()
        .map_err(|_| Failure::Config(format!("bad SNR '{text}' (expected a number or 'none')")))
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            return Ok((a, b));
        }
    }
    Err(Failure::Config(format!("bad {what} '{text}' (expected 'lo,hi')")))
}

fn parse_alpha(text: &str) -> Result<[f64; 3], Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() == 3 {
        let mut alpha = [0.0; 3];
        for (slot, part) in alpha.iter_mut().zip(&parts) {
            *slot = part.trim().parse().map_err(|_| {
                Failure::Config(format!("bad alpha component '{}'", part.trim()))
            })?;
        }
        return Ok(alpha);
    }
    Err(Failure::Config(format!("bad alpha '{text}' (expected three comma-separated values)")))
}

fn build_model(kernel: &str, factor: usize, srf_path: &Path) -> Result<DegradationModel, Failure> {
    let kernel = parse_kernel_spec(kernel)?;
    let srf = read_srf(srf_path)?;
    Ok(DegradationModel::new(kernel, factor, srf)?)
}

/// 10*log10 of signal power over error power; +inf maps through untouched.
fn realized_snr(clean: &Tensor3, noisy: &Tensor3) -> f64 {
    let noise = noisy.sub(clean).frobenius_norm();
    if noise == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (clean.frobenius_norm() / noise).log10()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let scene = read_hst(&args.input)?;
    let model = build_model(&args.kernel, args.factor, &args.srf)?;
    let snr_hsi = parse_snr(&args.snr_hsi)?;
    let snr_msi = parse_snr(&args.snr_msi)?;
    let (x, y) = simulate_observations(&scene, &model, snr_hsi, snr_msi, args.seed)?;

    let x_clean = downsample(&blur_apply(&scene, model.kernel()), model.factor())?;
    let y_clean = spectral_apply(&scene, model.srf())?;
    println!(
        "realized SNR: HSI {:.3} dB, MSI {:.3} dB",
        realized_snr(&x_clean, &x),
        realized_snr(&y_clean, &y)
    );

    write_hst(&args.out_lr, &x)?;
    write_hst(&args.out_msi, &y)
}

pub fn cmd_fuse(args: &FuseArgs) -> Result<(), Failure> {
    let x = read_hst(&args.hsi)?;
    let y = read_hst(&args.msi)?;
    let model = build_model(&args.kernel, args.factor, &args.srf)?;
    let mut config = SolverConfig::default();
    config.alpha = parse_alpha(&args.alpha)?;
    config.mu = args.mu;
    config.l = args.l;
    config.n = args.n;
    config.sqrt_q = args.patch;
    config.eps = args.eps;
    config.tol = args.tol;
    config.max_iters = args.iters;
    config.seed = args.seed;

    let out = solve(&x, &y, &model, &config)?;

    write_hst(&args.out, &out.z)?;
    if let Some(log_path) = &args.log {
        let mut text = String::from(CONVERGENCE_HEADER);
        text.push('\n');
        for row in &out.log {
            text.push_str(&row.csv_line());
            text.push('\n');
        }
        fs::write(log_path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", log_path.display())))?;
    }

    let kkt = &out.kkt;
    println!(
        "kkt: r_g [{:.3e} {:.3e} {:.3e}], r_h [{:.3e} {:.3e} {:.3e}], r_mult [{:.3e} {:.3e} {:.3e}], r_stat {:.3e}",
        kkt.r_g[0], kkt.r_g[1], kkt.r_g[2],
        kkt.r_h[0], kkt.r_h[1], kkt.r_h[2],
        kkt.r_mult[0], kkt.r_mult[1], kkt.r_mult[2],
        kkt.r_stat
    );
    Ok(())
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<(), Failure> {
    let reference = read_hst(&args.reference)?;
    let test = read_hst(&args.test)?;
    let report = compute_report(&reference, &test, args.factor, &MetricConfig::default())?;

    let mut file = fs::File::create(&args.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", args.out.display())))?;
    let mut emit = |line: String| -> Result<(), Failure> {
        writeln!(file, "{line}")
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", args.out.display())))
    };
    emit("metric,value".into())?;
    emit(format!("psnr_db,{}", report.psnr_db))?;
    emit(format!("ssim,{}", report.ssim))?;
    emit(format!("ergas,{}", report.ergas))?;
    emit(format!("sam_deg,{}", report.sam_deg))?;
    emit(format!("uiqi,{}", report.uiqi))?;
    emit(format!("sam_skipped,{}", report.sam_skipped))?;
    emit(format!("ergas_skipped,{}", report.ergas_skipped))?;
    for (b, v) in report.psnr_band.iter().enumerate() {
        emit(format!("psnr_band_{b},{v}"))?;
    }

    println!(
        "PSNR {:.3} dB, SSIM {:.4}, ERGAS {:.4}, SAM {:.4} deg, UIQI {:.4}",
        report.psnr_db, report.ssim, report.ergas, report.sam_deg, report.uiqi
    );
    Ok(())
}

pub fn cmd_errormap(args: &ErrormapArgs) -> Result<(), Failure> {
    let reference = read_hst(&args.reference)?;
    let test = read_hst(&args.test)?;
    if reference.dims() != test.dims() {
        return Err(Failure::Config(format!(
            "images differ: {:?} vs {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    let (w, h, bands) = reference.dims();
    if args.band >= bands {
        return Err(Failure::Config(format!(
            "band {} out of range (image has {bands} bands)",
            args.band
        )));
    }
    let (lo, hi) = parse_pair(&args.range, "range")?;
    let plane: Vec<f64> = reference
        .band(args.band)
        .iter()
        .zip(test.band(args.band))
        .map(|(a, b)| (a - b).abs())
        .collect();
    write_pgm(&args.out, &plane, w, h, lo, hi)
}

pub fn cmd_import_raw(args: &ImportRawArgs) -> Result<(), Failure> {
    let bytes = fs::read(&args.input)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let count = args
        .i1
        .checked_mul(args.i2)
        .and_then(|p| p.checked_mul(args.i3))
        .ok_or_else(|| Failure::Config("dims overflow".into()))?;
    if bytes.len() != 8 * count {
        return Err(Failure::Io(format!(
            "{}: {} bytes, expected {} for {}x{}x{} float64",
            args.input.display(),
            bytes.len(),
            8 * count,
            args.i1,
            args.i2,
            args.i3
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let t = Tensor3::new((args.i1, args.i2, args.i3), values)?;
    write_hst(&args.out, &t)
}
