//! ADMM solver for the fusion objective
//!
//! `min_C ||X_(3) - R C_(3) B S||_F^2 + ||Y_(3) - F R C_(3)||_F^2
//!        + sum_t alpha_t ||grouped gradients of C||_ltnn`
//!
//! in the splitting variables `G_t = C`, `H_t = grad_t(G_t)` with multipliers
//! `M_t`, `V_t` and penalty `mu`. One iteration runs
//!
//! 1. C-update: a Sylvester equation `Q1 C_(3) + C_(3) Q2 = Q3`, solved by
//!    eigendecomposing the small `Q1` and conjugate-gradient solves per
//!    rotated row against the matrix-free `Q2 = (BS)(BS)^T`;
//! 2. H-update: cluster-wise LTNN prox of `grad_t(G_t) - V_t/(2mu)`;
//! 3. G-update: the normal equation `(I + grad_t^T grad_t) G_t = rhs`,
//!    diagonalized exactly by a 1-D FFT along mode `t`;
//! 4. multiplier ascent with step `2mu`.
//!
//! Gradients are taken along the three modes of the full coefficient tensor
//! and the LTNN acts on patch-grouped views of those gradient tensors; the
//! FFT diagonalization in step 3 is only valid for circulant differences on
//! the full tensor, which fixes that reading. The penalty `mu` is constant
//! across iterations.

use crate::cluster::{cluster_patches, gather_groups, scatter_groups, ClusterPartition};
use crate::degradation::{blur_plane, mask_to_sample_grid, nn_upsample, DegradationModel};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, sym_eigen, Mat};
use crate::ltnn::{ltnn_prox, LtnnParams};
use crate::subspace::{estimate_basis, project, reconstruct, SpectralBasis};
use crate::tensor::{fft_mode_inplace, fold, grad, grad_adjoint, unfold, ComplexTensor3, Tensor3};

/// How the per-row shifted systems `(lambda_i I + Q2) c = q` are solved.
/// `Dense` materializes `Q2` and is for oracle testing on tiny grids only.
#[derive(Clone, Copy, Debug)]
pub enum SylvesterBackend {
    Cg { tol: f64, max_iters: usize },
    Dense,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Regularization weights for the three gradient modes.
    pub alpha: [f64; 3],
    /// ADMM penalty, constant across iterations; must be positive.
    pub mu: f64,
    /// Subspace dimension.
    pub l: usize,
    /// Cluster count; clamped to the number of patches by [`solve`].
    pub n: usize,
    /// Patch side length; must divide both full spatial dims.
    pub sqrt_q: usize,
    /// LTNN log shift.
    pub eps: f64,
    /// Stopping threshold on the relative change of C.
    pub tol: f64,
    pub max_iters: usize,
    /// Clustering seed.
    pub seed: u64,
    pub sylvester: SylvesterBackend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: [0.3, 0.03, 0.009],
            mu: 0.05,
            l: 10,
            n: 400,
            sqrt_q: 4,
            eps: 1e-2,
            tol: 1e-4,
            max_iters: 50,
            seed: 0,
            sylvester: SylvesterBackend::Cg { tol: 1e-10, max_iters: 500 },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::Parameter(format!("mu must be positive, got {}", self.mu)));
        }
        for (t, &a) in self.alpha.iter().enumerate() {
            if !(a >= 0.0) {
                return Err(Error::Parameter(format!("alpha_{} must be nonnegative, got {a}", t + 1)));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.l == 0 || self.n == 0 || self.sqrt_q == 0 || self.max_iters == 0 {
            return Err(Error::Parameter(
                "L, N, sqrt_q, and max_iters must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// All iterates of the splitting. Every tensor is `W x H x L`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub c: Tensor3,
    pub g: [Tensor3; 3],
    pub h: [Tensor3; 3],
    pub m: [Tensor3; 3],
    pub v: [Tensor3; 3],
}

impl SolverState {
    /// Feasible start: `G_t = C`, `H_t = grad_t(C)`, multipliers zero.
    pub fn init(c0: Tensor3) -> SolverState {
        let h = [grad(&c0, 1), grad(&c0, 2), grad(&c0, 3)];
        let g = [c0.clone(), c0.clone(), c0.clone()];
        let z = Tensor3::zeros(c0.dims());
        SolverState { c: c0, g, h, m: [z.clone(), z.clone(), z.clone()], v: [z.clone(), z.clone(), z] }
    }
}

/// One logged iteration; feasibility gaps are Frobenius norms and the data
/// fidelity is the sum of both squared residual norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub iter: usize,
    pub rel_change: f64,
    pub feas_g: [f64; 3],
    pub feas_h: [f64; 3],
    pub data_fid: f64,
}

pub const CONVERGENCE_HEADER: &str =
    "iter,rel_change,feas_g1,feas_g2,feas_g3,feas_h1,feas_h2,feas_h3,data_fid";

impl ConvergenceRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.rel_change,
            self.feas_g[0],
            self.feas_g[1],
            self.feas_g[2],
            self.feas_h[0],
            self.feas_h[1],
            self.feas_h[2],
            self.data_fid
        )
    }
}

/// Residuals of the KKT system at the current iterate.
#[derive(Clone, Copy, Debug)]
pub struct KktResiduals {
    pub r_g: [f64; 3],
    pub r_h: [f64; 3],
    pub r_stat: f64,
    pub r_mult: [f64; 3],
}

#[derive(Debug)]
pub struct SolveOutput {
    /// Fused image, `W x H x S`.
    pub z: Tensor3,
    pub log: Vec<ConvergenceRow>,
    pub kkt: KktResiduals,
}

// ---------------------------------------------------------------------------
// Matrix-free spatial operators on mode-3 rows
// ---------------------------------------------------------------------------

/// Row action of `BS`: blur on the full grid, keep the phase-0 samples.
pub fn apply_bs_row(row: &[f64], w: usize, h: usize, model: &DegradationModel) -> Vec<f64> {
    let blurred = blur_plane(row, w, h, model.kernel(), false);
    let d = model.factor();
    let (wl, hl) = (w / d, h / d);
    let mut out = vec![0.0; wl * hl];
    for y in 0..hl {
        for x in 0..wl {
            out[x + wl * y] = blurred[x * d + w * (y * d)];
        }
    }
    out
}

/// Row action of `(BS)^T`: zero-fill upsample, then the blur adjoint.
pub fn apply_bs_t_row(row: &[f64], w: usize, h: usize, model: &DegradationModel) -> Vec<f64> {
    let d = model.factor();
    let (wl, hl) = (w / d, h / d);
    let mut full = vec![0.0; w * h];
    for y in 0..hl {
        for x in 0..wl {
            full[x * d + w * (y * d)] = row[x + wl * y];
        }
    }
    blur_plane(&full, w, h, model.kernel(), true)
}

/// Row action of `Q2 = (BS)(BS)^T`: blur, mask to the sample grid, adjoint
/// blur. Symmetric positive semidefinite.
pub fn apply_q2_row(row: &[f64], w: usize, h: usize, model: &DegradationModel) -> Vec<f64> {
    let mut blurred = blur_plane(row, w, h, model.kernel(), false);
    mask_to_sample_grid(&mut blurred, w, h, model.factor());
    blur_plane(&blurred, w, h, model.kernel(), true)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// C-update
// ---------------------------------------------------------------------------

/// Right-hand side of the Sylvester equation, `L x WH`:
/// `Q3 = (FR)^T Y_(3) + R^T X_(3) (BS)^T + sum_t (mu G_t + M_t/2)_(3)`.
/// The multiplier form `mu G + M/2` keeps the expression defined at `mu = 0`.
pub fn build_q3(
    x: &Tensor3,
    y: &Tensor3,
    basis: &SpectralBasis,
    model: &DegradationModel,
    state: &SolverState,
    mu: f64,
) -> Result<Mat> {
    let (w, h, l) = state.c.dims();
    let d = model.factor();
    if w % d != 0 || h % d != 0 {
        return Err(Error::Dimension(format!("factor {d} does not divide grid {w}x{h}")));
    }
    if x.dims() != (w / d, h / d, model.hsi_bands()) {
        return Err(Error::Dimension(format!(
            "LR-HSI dims {:?} do not match model ({}x{}x{})",
            x.dims(),
            w / d,
            h / d,
            model.hsi_bands()
        )));
    }
    if y.dims() != (w, h, model.msi_bands()) {
        return Err(Error::Dimension(format!(
            "HR-MSI dims {:?} do not match model ({w}x{h}x{})",
            y.dims(),
            model.msi_bands()
        )));
    }
    if basis.bands() != model.hsi_bands() || basis.rank() != l {
        return Err(Error::Dimension(format!(
            "basis {}x{} incompatible with {} bands, L={l}",
            basis.bands(),
            basis.rank(),
            model.hsi_bands()
        )));
    }

    let r = basis.r();
    let fr = model.srf().mul(r);
    let mut q3 = fr.transpose().mul(&unfold(y, 3));

    // R^T X_(3) first, so the (BS)^T lift runs on L rows instead of S.
    let rtx = r.transpose().mul(&unfold(x, 3));
    for i in 0..l {
        let lifted = apply_bs_t_row(rtx.row(i), w, h, model);
        for (dst, val) in q3.row_mut(i).iter_mut().zip(&lifted) {
            *dst += val;
        }
    }

    for t in 0..3 {
        let g3 = unfold(&state.g[t], 3);
        let m3 = unfold(&state.m[t], 3);
        for i in 0..l {
            let gr = g3.row(i);
            let mr = m3.row(i);
            for (j, dst) in q3.row_mut(i).iter_mut().enumerate() {
                *dst += mu * gr[j] + 0.5 * mr[j];
            }
        }
    }
    Ok(q3)
}

fn build_q1(basis: &SpectralBasis, model: &DegradationModel, mu: f64) -> Mat {
    let fr = model.srf().mul(basis.r());
    let mut q1 = fr.transpose().mul(&fr);
    for i in 0..q1.rows {
        q1.set(i, i, q1.get(i, i) + 3.0 * mu);
    }
    q1
}

fn cg_shifted_q2(
    b: &[f64],
    lambda: f64,
    w: usize,
    h: usize,
    model: &DegradationModel,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    for _ in 0..max_iters {
        if rs.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let mut ap = apply_q2_row(&p, w, h, model);
        for j in 0..n {
            ap[j] += lambda * p[j];
        }
        let alpha = rs / dot(&p, &ap);
        for j in 0..n {
            x[j] += alpha * p[j];
            r[j] -= alpha * ap[j];
        }
        let rs_next = dot(&r, &r);
        for j in 0..n {
            p[j] = r[j] + (rs_next / rs) * p[j];
        }
        rs = rs_next;
    }
    if rs.sqrt() <= tol * b_norm {
        Ok(x)
    } else {
        Err(Error::SolverFailure(format!(
            "conjugate gradient stopped at relative residual {:.3e} after {max_iters} iterations (target {tol:.1e})",
            rs.sqrt() / b_norm
        )))
    }
}

/// Solves `Q1 C_(3) + C_(3) Q2 = Q3` for `C_(3)` with `Q1 = (FR)^T FR +
/// 3 mu I`. `Q1` is eigendecomposed, the rotated rows decouple into shifted
/// SPD systems `(lambda_i I + Q2) c = q` solved per the backend, and the
/// result is rotated back. `spatial` is the full grid `(W, H)`.
pub fn solve_sylvester(
    q3: &Mat,
    basis: &SpectralBasis,
    model: &DegradationModel,
    mu: f64,
    backend: &SylvesterBackend,
    spatial: (usize, usize),
) -> Result<Mat> {
    let (w, h) = spatial;
    let l = basis.rank();
    if q3.rows != l || q3.cols != w * h {
        return Err(Error::Dimension(format!(
            "Q3 is {}x{}, expected {l}x{}",
            q3.rows,
            q3.cols,
            w * h
        )));
    }
    let q1 = build_q1(basis, model, mu);
    let (lambda, p) = sym_eigen(&q1);
    let q3_rot = p.transpose().mul(q3);
    let mut c_rot = Mat::zeros(l, w * h);
    match backend {
        SylvesterBackend::Cg { tol, max_iters } => {
            for i in 0..l {
                let sol = cg_shifted_q2(q3_rot.row(i), lambda[i], w, h, model, *tol, *max_iters)?;
                c_rot.row_mut(i).copy_from_slice(&sol);
            }
        }
        SylvesterBackend::Dense => {
            let n = w * h;
            let mut q2 = Mat::zeros(n, n);
            let mut unit = vec![0.0; n];
            for j in 0..n {
                unit[j] = 1.0;
                let col = apply_q2_row(&unit, w, h, model);
                unit[j] = 0.0;
                for i in 0..n {
                    q2.set(i, j, col[i]);
                }
            }
            for i in 0..l {
                let mut a = q2.clone();
                for j in 0..n {
                    a.set(j, j, a.get(j, j) + lambda[i]);
                }
                let sol = lu_solve(&a, q3_rot.row(i))?;
                c_rot.row_mut(i).copy_from_slice(&sol);
            }
        }
    }
    Ok(p.mul(&c_rot))
}

/// Relative residual `||Q1 C + C Q2 - Q3||_F / ||Q3||_F` of a Sylvester
/// solution, evaluated by re-applying the operators.
pub fn sylvester_residual(
    c3: &Mat,
    q3: &Mat,
    basis: &SpectralBasis,
    model: &DegradationModel,
    mu: f64,
    spatial: (usize, usize),
) -> f64 {
    let q1 = build_q1(basis, model, mu);
    let mut resid = q1.mul(c3).sub(q3);
    for i in 0..c3.rows {
        let cq2 = apply_q2_row(c3.row(i), spatial.0, spatial.1, model);
        for (dst, val) in resid.row_mut(i).iter_mut().zip(&cq2) {
            *dst += val;
        }
    }
    resid.frobenius_norm() / q3.frobenius_norm().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// H-, G-, and multiplier updates
// ---------------------------------------------------------------------------

/// H-update: `A_t = grad_t(G_t) - V_t/(2mu)`, then the cluster-wise LTNN
/// prox with `tau = alpha_t/(2mu)`. `alpha_t = 0` bypasses the prox exactly.
pub fn update_h(
    state: &mut SolverState,
    partition: &ClusterPartition,
    config: &SolverConfig,
) -> Result<()> {
    for t in 0..3 {
        let mut a = grad(&state.g[t], t + 1);
        a.add_scaled(&state.v[t], -1.0 / (2.0 * config.mu));
        if config.alpha[t] == 0.0 {
            state.h[t] = a;
            continue;
        }
        let params = LtnnParams { tau: config.alpha[t] / (2.0 * config.mu), eps: config.eps };
        let groups = gather_groups(&a, partition)?;
        let shrunk: Vec<Tensor3> = groups.iter().map(|g| ltnn_prox(g, &params)).collect();
        state.h[t] = scatter_groups(&shrunk, partition, a.dims())?;
    }
    Ok(())
}

/// Exact solve of `(I + grad^T grad) g = rhs` along one mode: the circulant
/// normal operator has FFT symbol `3 - 2 cos(2 pi k / n)`.
pub fn solve_gradient_normal(rhs: &Tensor3, mode: usize) -> Tensor3 {
    let dims = rhs.dims();
    let (n, stride) = match mode {
        1 => (dims.0, 1),
        2 => (dims.1, dims.0),
        3 => (dims.2, dims.0 * dims.1),
        _ => panic!("tensor mode must be 1, 2, or 3, got {mode}"),
    };
    let mut ct = ComplexTensor3::from_real(rhs);
    fft_mode_inplace(&mut ct, mode, false);
    let inv_symbol: Vec<f64> = (0..n)
        .map(|k| 1.0 / (3.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
        .collect();
    for (idx, v) in ct.values_mut().iter_mut().enumerate() {
        *v *= inv_symbol[idx / stride % n];
    }
    fft_mode_inplace(&mut ct, mode, true);
    ct.real_part().0
}

/// G-update: `(I + grad_t^T grad_t) G_t = C - M_t/(2mu) + grad_t^T(H_t +
/// V_t/(2mu))`, solved exactly per mode.
pub fn update_g(state: &mut SolverState, config: &SolverConfig) {
    let two_mu = 2.0 * config.mu;
    for t in 0..3 {
        let mut target = state.h[t].clone();
        target.add_scaled(&state.v[t], 1.0 / two_mu);
        let mut rhs = state.c.clone();
        rhs.add_scaled(&state.m[t], -1.0 / two_mu);
        let rhs = rhs.add(&grad_adjoint(&target, t + 1));
        state.g[t] = solve_gradient_normal(&rhs, t + 1);
    }
}

/// Multiplier ascent: `V_t += 2mu (H_t - grad_t G_t)`, `M_t += 2mu (G_t - C)`.
pub fn update_multipliers(state: &mut SolverState, mu: f64) {
    let two_mu = 2.0 * mu;
    for t in 0..3 {
        let gap_h = state.h[t].sub(&grad(&state.g[t], t + 1));
        state.v[t].add_scaled(&gap_h, two_mu);
        let gap_g = state.g[t].sub(&state.c);
        state.m[t].add_scaled(&gap_g, two_mu);
    }
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Data fidelity `||X_(3) - R C_(3) BS||_F^2 + ||Y_(3) - F R C_(3)||_F^2`.
pub fn data_fidelity(
    c: &Tensor3,
    x: &Tensor3,
    y: &Tensor3,
    basis: &SpectralBasis,
    model: &DegradationModel,
) -> f64 {
    let (w, h, l) = c.dims();
    let c3 = unfold(c, 3);
    let d = model.factor();
    let (wl, hl) = (w / d, h / d);
    let mut cbs = Mat::zeros(l, wl * hl);
    for i in 0..l {
        cbs.row_mut(i).copy_from_slice(&apply_bs_row(c3.row(i), w, h, model));
    }
    let hsi_resid = unfold(x, 3).sub(&basis.r().mul(&cbs)).frobenius_norm();
    let fr = model.srf().mul(basis.r());
    let msi_resid = unfold(y, 3).sub(&fr.mul(&c3)).frobenius_norm();
    hsi_resid * hsi_resid + msi_resid * msi_resid
}

/// Evaluates the KKT residuals at a state. The stationarity line is
/// `R^T (R C_(3) BS - X_(3)) S^T B^T + (FR)^T (FR C_(3) - Y_(3))
///  - 1/2 sum_t M_t(3)`.
pub fn kkt_residuals(
    state: &SolverState,
    x: &Tensor3,
    y: &Tensor3,
    basis: &SpectralBasis,
    model: &DegradationModel,
) -> KktResiduals {
    let (w, h, l) = state.c.dims();
    let c3 = unfold(&state.c, 3);
    let r = basis.r();
    let d = model.factor();
    let (wl, hl) = (w / d, h / d);

    let mut cbs = Mat::zeros(l, wl * hl);
    for i in 0..l {
        cbs.row_mut(i).copy_from_slice(&apply_bs_row(c3.row(i), w, h, model));
    }
    let rtd = r.transpose().mul(&r.mul(&cbs).sub(&unfold(x, 3)));
    let mut stat = Mat::zeros(l, w * h);
    for i in 0..l {
        stat.row_mut(i).copy_from_slice(&apply_bs_t_row(rtd.row(i), w, h, model));
    }
    let fr = model.srf().mul(r);
    stat = stat.add(&fr.transpose().mul(&fr.mul(&c3).sub(&unfold(y, 3))));
    for t in 0..3 {
        stat = stat.sub(&unfold(&state.m[t], 3).scale(0.5));
    }

    let mut r_g = [0.0; 3];
    let mut r_h = [0.0; 3];
    let mut r_mult = [0.0; 3];
    for t in 0..3 {
        r_g[t] = state.g[t].sub(&state.c).frobenius_norm();
        r_h[t] = state.h[t].sub(&grad(&state.g[t], t + 1)).frobenius_norm();
        r_mult[t] = state.m[t].sub(&grad_adjoint(&state.v[t], t + 1)).frobenius_norm();
    }
    KktResiduals { r_g, r_h, r_stat: stat.frobenius_norm(), r_mult }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Full pipeline: estimate the basis from `x`, cluster patches of `y`,
/// initialize from the projected nearest-neighbor upsample, iterate
/// C -> H -> G -> multipliers until `rel_change <= tol` or `max_iters`, and
/// reconstruct `Z = C x_3 R`. Non-finite values abort with the iteration
/// index (0 for bad inputs).
pub fn solve(
    x: &Tensor3,
    y: &Tensor3,
    model: &DegradationModel,
    config: &SolverConfig,
) -> Result<SolveOutput> {
    config.validate()?;
    let d = model.factor();
    let (wl, hl, s_hsi) = x.dims();
    let (w, h, s_msi) = y.dims();
    if s_hsi != model.hsi_bands() || s_msi != model.msi_bands() {
        return Err(Error::Dimension(format!(
            "band counts ({s_hsi}, {s_msi}) do not match the model ({}, {})",
            model.hsi_bands(),
            model.msi_bands()
        )));
    }
    if w != wl * d || h != hl * d {
        return Err(Error::Dimension(format!(
            "MSI grid {w}x{h} is not the HSI grid {wl}x{hl} upscaled by {d}"
        )));
    }
    if !x.is_all_finite() || !y.is_all_finite() {
        return Err(Error::NonFinite { iteration: 0, what: "input observations".into() });
    }

    let basis = estimate_basis(x, config.l)?;
    if w % config.sqrt_q != 0 || h % config.sqrt_q != 0 {
        return Err(Error::Dimension(format!(
            "patch side {} does not tile the {w}x{h} grid",
            config.sqrt_q
        )));
    }
    let n_patches = (w / config.sqrt_q) * (h / config.sqrt_q);
    let partition = cluster_patches(y, config.sqrt_q, config.n.min(n_patches), config.seed)?;

    let c0 = project(&nn_upsample(x, d), &basis)?;
    let mut state = SolverState::init(c0);
    let mut log = Vec::new();
    for k in 1..=config.max_iters {
        let q3 = build_q3(x, y, &basis, model, &state, config.mu)?;
        let c3 = solve_sylvester(&q3, &basis, model, config.mu, &config.sylvester, (w, h))?;
        let c_next = fold(&c3, 3, state.c.dims())?;
        let diff = c_next.sub(&state.c).frobenius_norm();
        let denom = c_next.frobenius_norm();
        let rel_change = if denom > 0.0 {
            diff / denom
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        state.c = c_next;
        update_h(&mut state, &partition, config)?;
        update_g(&mut state, config);
        update_multipliers(&mut state, config.mu);

        let mut feas_g = [0.0; 3];
        let mut feas_h = [0.0; 3];
        for t in 0..3 {
            feas_g[t] = state.g[t].sub(&state.c).frobenius_norm();
            feas_h[t] = state.h[t].sub(&grad(&state.g[t], t + 1)).frobenius_norm();
        }
        let data_fid = data_fidelity(&state.c, x, y, &basis, model);
        log.push(ConvergenceRow { iter: k, rel_change, feas_g, feas_h, data_fid });

        let finite = rel_change.is_finite()
            && data_fid.is_finite()
            && state.c.is_all_finite()
            && (0..3).all(|t| {
                state.g[t].is_all_finite()
                    && state.h[t].is_all_finite()
                    && state.m[t].is_all_finite()
                    && state.v[t].is_all_finite()
            });
        if !finite {
            return Err(Error::NonFinite { iteration: k, what: "solver state".into() });
        }
        if rel_change <= config.tol {
            break;
        }
    }

    let kkt = kkt_residuals(&state, x, y, &basis, model);
    let z = reconstruct(&state.c, &basis)?;
    Ok(SolveOutput { z, log, kkt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::{
        blur_apply, blur_matrix, delta_kernel, downsample, gaussian_kernel, spectral_apply,
    };
    use crate::ltnn::ltnn_value;
    use crate::subspace::reconstruct;
    use crate::tensor::mode_n_product;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn random_tensor(dims: (usize, usize, usize), seed: u64) -> Tensor3 {
        let mut s = seed;
        Tensor3::from_fn(dims, |_, _, _| splitmix(&mut s))
    }

    /// Orthonormal `s x l` basis from the SVD of a random matrix.
    fn random_basis(s: usize, l: usize, seed: u64) -> SpectralBasis {
        let mut st = seed;
        let mut a = Mat::zeros(s, l);
        for r in 0..s {
            for c in 0..l {
                a.set(r, c, splitmix(&mut st));
            }
        }
        let svd = crate::linalg::svd_real(&a);
        let mut r = Mat::zeros(s, l);
        for i in 0..s {
            for j in 0..l {
                r.set(i, j, svd.u.get(i, j));
            }
        }
        SpectralBasis::from_orthonormal(r).unwrap()
    }

    /// SRF averaging `s_hsi` bands into `s_msi` contiguous blocks.
    fn block_srf(s_msi: usize, s_hsi: usize) -> Mat {
        assert_eq!(s_hsi % s_msi, 0);
        let block = s_hsi / s_msi;
        let mut f = Mat::zeros(s_msi, s_hsi);
        for r in 0..s_msi {
            for b in 0..block {
                f.set(r, r * block + b, 1.0 / block as f64);
            }
        }
        f
    }

    fn zero_state(dims: (usize, usize, usize)) -> SolverState {
        SolverState::init(Tensor3::zeros(dims))
    }

    #[test]
    fn q3_is_zero_without_penalty_and_observations() {
        let model =
            DegradationModel::new(delta_kernel(), 2, block_srf(2, 6)).unwrap();
        let basis = random_basis(6, 2, 1);
        let mut state = zero_state((4, 4, 2));
        state.g = [
            random_tensor((4, 4, 2), 2),
            random_tensor((4, 4, 2), 3),
            random_tensor((4, 4, 2), 4),
        ];
        let x = Tensor3::zeros((2, 2, 6));
        let y = Tensor3::zeros((4, 4, 2));
        let q3 = build_q3(&x, &y, &basis, &model, &state, 0.0).unwrap();
        assert_eq!(q3.frobenius_norm(), 0.0);
    }

    #[test]
    fn q3_matches_dense_assembly() {
        let (w, h, d, s, l, s_msi) = (8usize, 8, 2, 6, 2, 2);
        let kernel = gaussian_kernel(3, 0.9).unwrap();
        let model = DegradationModel::new(kernel.clone(), d, block_srf(s_msi, s)).unwrap();
        let basis = random_basis(s, l, 5);
        let x = random_tensor((w / d, h / d, s), 6);
        let y = random_tensor((w, h, s_msi), 7);
        let mut state = zero_state((w, h, l));
        for t in 0..3 {
            state.g[t] = random_tensor((w, h, l), 10 + t as u64);
            state.m[t] = random_tensor((w, h, l), 20 + t as u64);
        }
        let mu = 0.07;

        // Dense route: right-acting blur is the transpose of the left-acting
        // circulant, decimation is a WH x wh selection.
        let b_right = blur_matrix(w, h, &kernel).transpose();
        let (wl, hl) = (w / d, h / d);
        let mut s_right = Mat::zeros(w * h, wl * hl);
        for y0 in 0..hl {
            for x0 in 0..wl {
                s_right.set(x0 * d + w * (y0 * d), x0 + wl * y0, 1.0);
            }
        }
        let bs = b_right.mul(&s_right);
        let fr = model.srf().mul(basis.r());
        let mut dense = fr.transpose().mul(&unfold(&y, 3));
        dense = dense.add(
            &basis.r().transpose().mul(&unfold(&x, 3)).mul(&bs.transpose()),
        );
        for t in 0..3 {
            dense = dense.add(&unfold(&state.g[t], 3).scale(mu));
            dense = dense.add(&unfold(&state.m[t], 3).scale(0.5));
        }

        let q3 = build_q3(&x, &y, &basis, &model, &state, mu).unwrap();
        let rel = q3.sub(&dense).frobenius_norm() / dense.frobenius_norm();
        assert!(rel < 1e-10, "dense mismatch {rel}");
    }

    #[test]
    fn q3_is_additive_in_g_and_m() {
        let (w, h, d, s, l) = (4usize, 4, 2, 4, 2);
        let model =
            DegradationModel::new(gaussian_kernel(3, 0.7).unwrap(), d, block_srf(2, s)).unwrap();
        let basis = random_basis(s, l, 30);
        let x = random_tensor((w / d, h / d, s), 31);
        let y = random_tensor((w, h, 2), 32);
        let mut sa = zero_state((w, h, l));
        let mut sb = zero_state((w, h, l));
        let mut sum = zero_state((w, h, l));
        for t in 0..3 {
            sa.g[t] = random_tensor((w, h, l), 40 + t as u64);
            sa.m[t] = random_tensor((w, h, l), 50 + t as u64);
            sb.g[t] = random_tensor((w, h, l), 60 + t as u64);
            sb.m[t] = random_tensor((w, h, l), 70 + t as u64);
            sum.g[t] = sa.g[t].add(&sb.g[t]);
            sum.m[t] = sa.m[t].add(&sb.m[t]);
        }
        let zero = zero_state((w, h, l));
        let mu = 0.11;
        let qa = build_q3(&x, &y, &basis, &model, &sa, mu).unwrap();
        let qb = build_q3(&x, &y, &basis, &model, &sb, mu).unwrap();
        let qsum = build_q3(&x, &y, &basis, &model, &sum, mu).unwrap();
        let qzero = build_q3(&x, &y, &basis, &model, &zero, mu).unwrap();
        // Q3(Ga+Gb, Ma+Mb) + Q3(0, 0) = Q3(Ga, Ma) + Q3(Gb, Mb).
        let gap = qsum.add(&qzero).sub(&qa.add(&qb)).frobenius_norm();
        assert!(gap < 1e-12 * qsum.frobenius_norm(), "additivity violated: {gap}");
    }

    #[test]
    fn sylvester_decoupled_when_q2_is_identity() {
        // d = 1 with a delta kernel collapses Q2 to the identity, so the
        // solution must satisfy (Q1 + I) C = Q3 row by row.
        let (w, h, s, l) = (4usize, 4, 4, 2);
        let model = DegradationModel::new(delta_kernel(), 1, block_srf(2, s)).unwrap();
        let basis = random_basis(s, l, 80);
        let mut q3 = Mat::zeros(l, w * h);
        let mut st = 81u64;
        for i in 0..l {
            for j in 0..w * h {
                q3.set(i, j, splitmix(&mut st));
            }
        }
        let mu = 0.05;
        for backend in [SylvesterBackend::Cg { tol: 1e-12, max_iters: 500 }, SylvesterBackend::Dense]
        {
            let c3 = solve_sylvester(&q3, &basis, &model, mu, &backend, (w, h)).unwrap();
            let mut q1 = build_q1(&basis, &model, mu);
            for i in 0..l {
                q1.set(i, i, q1.get(i, i) + 1.0);
            }
            let rel = q1.mul(&c3).sub(&q3).frobenius_norm() / q3.frobenius_norm();
            assert!(rel < 1e-8, "decoupled solve residual {rel}");
        }
    }

    #[test]
    fn sylvester_cg_matches_dense_backend() {
        let (w, h, d, s, l) = (8usize, 8, 2, 5, 3);
        let srf = {
            // 2 x 5 response with positive rows; normalized by the model.
            Mat::from_rows(&[
                vec![1.0, 1.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 0.5, 1.0, 1.0],
            ])
            .unwrap()
        };
        let model = DegradationModel::new(gaussian_kernel(3, 0.8).unwrap(), d, srf).unwrap();
        let basis = random_basis(s, l, 90);
        let mut q3 = Mat::zeros(l, w * h);
        let mut st = 91u64;
        for i in 0..l {
            for j in 0..w * h {
                q3.set(i, j, splitmix(&mut st));
            }
        }
        let mu = 0.05;
        let cg = solve_sylvester(
            &q3,
            &basis,
            &model,
            mu,
            &SylvesterBackend::Cg { tol: 1e-10, max_iters: 500 },
            (w, h),
        )
        .unwrap();
        let dense =
            solve_sylvester(&q3, &basis, &model, mu, &SylvesterBackend::Dense, (w, h)).unwrap();
        let rel = cg.sub(&dense).frobenius_norm() / dense.frobenius_norm();
        assert!(rel < 1e-6, "backend disagreement {rel}");
        let resid = sylvester_residual(&cg, &q3, &basis, &model, mu, (w, h));
        assert!(resid < 1e-8, "cg residual {resid}");
    }

    #[test]
    fn h_update_bypasses_prox_at_zero_alpha() {
        let (w, h, l) = (8usize, 8, 2);
        let y = random_tensor((w, h, 2), 100);
        let partition = cluster_patches(&y, 4, 2, 0).unwrap();
        let config = SolverConfig {
            alpha: [0.0, 0.4, 0.0],
            mu: 0.3,
            l,
            n: 2,
            sqrt_q: 4,
            ..SolverConfig::default()
        };
        let mut state = zero_state((w, h, l));
        for t in 0..3 {
            state.g[t] = random_tensor((w, h, l), 101 + t as u64);
            state.v[t] = random_tensor((w, h, l), 104 + t as u64);
        }
        let expected: Vec<Tensor3> = (0..3)
            .map(|t| {
                let mut a = grad(&state.g[t], t + 1);
                a.add_scaled(&state.v[t], -1.0 / (2.0 * config.mu));
                a
            })
            .collect();
        update_h(&mut state, &partition, &config).unwrap();
        for t in [0usize, 2] {
            assert_eq!(state.h[t].values(), expected[t].values(), "mode {t} not bypassed");
        }
        let diff = state.h[1].sub(&expected[1]).frobenius_norm();
        assert!(diff > 0.0, "mode 2 should have been shrunk");
    }

    #[test]
    fn h_update_single_group_is_one_prox() {
        let (w, h, l) = (8usize, 8, 2);
        let y = random_tensor((w, h, 2), 110);
        let partition = cluster_patches(&y, 4, 1, 0).unwrap();
        let config = SolverConfig {
            alpha: [0.2, 0.2, 0.2],
            mu: 0.25,
            l,
            n: 1,
            sqrt_q: 4,
            ..SolverConfig::default()
        };
        let mut state = zero_state((w, h, l));
        for t in 0..3 {
            state.g[t] = random_tensor((w, h, l), 111 + t as u64);
            state.v[t] = random_tensor((w, h, l), 114 + t as u64);
        }
        let params = LtnnParams { tau: 0.2 / (2.0 * config.mu), eps: config.eps };
        let mut expected = Vec::new();
        for t in 0..3 {
            let mut a = grad(&state.g[t], t + 1);
            a.add_scaled(&state.v[t], -1.0 / (2.0 * config.mu));
            let gathered = gather_groups(&a, &partition).unwrap();
            let shrunk = vec![ltnn_prox(&gathered[0], &params)];
            expected.push(scatter_groups(&shrunk, &partition, a.dims()).unwrap());
        }
        update_h(&mut state, &partition, &config).unwrap();
        for t in 0..3 {
            assert_eq!(state.h[t].values(), expected[t].values());
        }
    }

    #[test]
    fn h_update_does_not_increase_group_objectives() {
        let (w, h, l) = (8usize, 8, 3);
        let y = random_tensor((w, h, 2), 120);
        let partition = cluster_patches(&y, 4, 2, 0).unwrap();
        let config = SolverConfig {
            alpha: [0.4, 0.2, 0.1],
            mu: 0.3,
            l,
            n: 2,
            sqrt_q: 4,
            ..SolverConfig::default()
        };
        let mut state = zero_state((w, h, l));
        for t in 0..3 {
            state.g[t] = random_tensor((w, h, l), 121 + t as u64);
            state.v[t] = random_tensor((w, h, l), 124 + t as u64);
        }
        let a_tensors: Vec<Tensor3> = (0..3)
            .map(|t| {
                let mut a = grad(&state.g[t], t + 1);
                a.add_scaled(&state.v[t], -1.0 / (2.0 * config.mu));
                a
            })
            .collect();
        update_h(&mut state, &partition, &config).unwrap();
        for t in 0..3 {
            let groups_a = gather_groups(&a_tensors[t], &partition).unwrap();
            let groups_h = gather_groups(&state.h[t], &partition).unwrap();
            for (ga, gh) in groups_a.iter().zip(&groups_h) {
                let lhs = config.mu * gh.sub(ga).frobenius_norm().powi(2)
                    + config.alpha[t] * ltnn_value(gh, config.eps);
                let rhs = config.alpha[t] * ltnn_value(ga, config.eps);
                assert!(lhs <= rhs + 1e-10, "mode {t}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn g_update_fixed_point_and_residual() {
        let (w, h, l) = (6usize, 4, 3);
        let config =
            SolverConfig { mu: 0.2, l, ..SolverConfig::default() };
        // Feasible state: H_t = grad_t(C), zero multipliers. G must come back
        // as C itself.
        let c = random_tensor((w, h, l), 130);
        let mut state = SolverState::init(c.clone());
        update_g(&mut state, &config);
        for t in 0..3 {
            let rel = state.g[t].sub(&c).frobenius_norm() / c.frobenius_norm();
            assert!(rel < 1e-10, "fixed point broken in mode {t}: {rel}");
        }
        // Random state: verify the normal equation by re-applying operators.
        for t in 0..3 {
            state.g[t] = random_tensor((w, h, l), 131 + t as u64);
            state.h[t] = random_tensor((w, h, l), 134 + t as u64);
            state.m[t] = random_tensor((w, h, l), 137 + t as u64);
            state.v[t] = random_tensor((w, h, l), 140 + t as u64);
        }
        state.c = random_tensor((w, h, l), 143);
        update_g(&mut state, &config);
        for t in 0..3 {
            let mode = t + 1;
            let mut target = state.h[t].clone();
            target.add_scaled(&state.v[t], 1.0 / (2.0 * config.mu));
            let mut rhs = state.c.clone();
            rhs.add_scaled(&state.m[t], -1.0 / (2.0 * config.mu));
            let rhs = rhs.add(&grad_adjoint(&target, mode));
            let applied = state.g[t].add(&grad_adjoint(&grad(&state.g[t], mode), mode));
            let rel = applied.sub(&rhs).frobenius_norm() / rhs.frobenius_norm();
            assert!(rel < 1e-10, "normal-equation residual in mode {mode}: {rel}");
        }
    }

    #[test]
    fn g_update_singleton_mode_returns_rhs() {
        let dims = (1usize, 5, 3);
        let config = SolverConfig { mu: 0.4, ..SolverConfig::default() };
        let mut state = zero_state(dims);
        state.c = random_tensor(dims, 150);
        state.m[0] = random_tensor(dims, 151);
        state.h[0] = random_tensor(dims, 152);
        state.v[0] = random_tensor(dims, 153);
        update_g(&mut state, &config);
        // Mode 1 has size 1: grad and its adjoint vanish, the symbol is 1.
        let mut rhs = state.c.clone();
        rhs.add_scaled(&state.m[0], -1.0 / (2.0 * config.mu));
        let rel = state.g[0].sub(&rhs).frobenius_norm() / rhs.frobenius_norm();
        assert!(rel < 1e-14, "singleton mode must return the rhs: {rel}");
    }

    #[test]
    fn multiplier_updates_are_exact_arithmetic() {
        let dims = (6usize, 4, 2);
        // Feasible state: no change.
        let c = random_tensor(dims, 160);
        let mut state = SolverState::init(c);
        let m_before: Vec<Tensor3> = state.m.to_vec();
        update_multipliers(&mut state, 0.3);
        for t in 0..3 {
            assert_eq!(state.m[t].values(), m_before[t].values());
            assert!(state.v[t].frobenius_norm() == 0.0);
        }
        // One step from zero multipliers equals 2 mu times the gaps.
        let mut state = zero_state(dims);
        state.c = random_tensor(dims, 161);
        for t in 0..3 {
            state.g[t] = random_tensor(dims, 162 + t as u64);
            state.h[t] = random_tensor(dims, 165 + t as u64);
        }
        let mu = 0.25;
        update_multipliers(&mut state, mu);
        for t in 0..3 {
            let want_v = state.h[t].sub(&grad(&state.g[t], t + 1)).scale(2.0 * mu);
            let want_m = state.g[t].sub(&state.c).scale(2.0 * mu);
            for (a, b) in state.v[t].values().iter().zip(want_v.values()) {
                assert_eq!(a, b);
            }
            for (a, b) in state.m[t].values().iter().zip(want_m.values()) {
                assert_eq!(a, b);
            }
        }
        // mu = 0 leaves everything in place.
        let mut frozen = state.clone();
        update_multipliers(&mut frozen, 0.0);
        for t in 0..3 {
            assert_eq!(frozen.v[t].values(), state.v[t].values());
            assert_eq!(frozen.m[t].values(), state.m[t].values());
        }
    }

    #[test]
    fn kkt_residuals_vanish_on_constructed_stationary_state() {
        let (w, h, d, s, l) = (8usize, 8, 2, 5, 2);
        let model =
            DegradationModel::new(gaussian_kernel(3, 0.9).unwrap(), d, block_srf(1, 5)).unwrap();
        let basis = random_basis(s, l, 170);
        // Observations generated exactly from C make the data terms vanish;
        // zero multipliers kill the rest.
        let c = random_tensor((w, h, l), 171);
        let z = reconstruct(&c, &basis).unwrap();
        let x = downsample(&blur_apply(&z, model.kernel()), d).unwrap();
        let y = spectral_apply(&z, model.srf()).unwrap();
        let state = SolverState::init(c);
        let kkt = kkt_residuals(&state, &x, &y, &basis, &model);
        for t in 0..3 {
            assert!(kkt.r_g[t] == 0.0 && kkt.r_h[t] == 0.0 && kkt.r_mult[t] == 0.0);
        }
        assert!(kkt.r_stat < 1e-8, "stationarity residual {}", kkt.r_stat);
        // Zero state, zero observations: everything is exactly zero.
        let state0 = zero_state((w, h, l));
        let kkt0 = kkt_residuals(
            &state0,
            &Tensor3::zeros((w / d, h / d, s)),
            &Tensor3::zeros((w, h, 1)),
            &basis,
            &model,
        );
        assert_eq!(kkt0.r_stat, 0.0);
        for t in 0..3 {
            assert_eq!(kkt0.r_g[t], 0.0);
            assert_eq!(kkt0.r_h[t], 0.0);
            assert_eq!(kkt0.r_mult[t], 0.0);
        }
    }

    /// Noiseless d=1 fixture whose LR-HSI already equals the target.
    fn consistency_fixture() -> (Tensor3, Tensor3, Tensor3, DegradationModel) {
        let (w, h, s, l) = (8usize, 8, 6, 2);
        let model = DegradationModel::new(delta_kernel(), 1, block_srf(3, s)).unwrap();
        let basis = random_basis(s, l, 180);
        let c = random_tensor((w, h, l), 181);
        let z = reconstruct(&c, &basis).unwrap();
        let y = spectral_apply(&z, model.srf()).unwrap();
        (z.clone(), z, y, model)
    }

    #[test]
    fn solve_recovers_consistent_target() {
        let (z_true, x, y, model) = consistency_fixture();
        let config = SolverConfig {
            alpha: [1e-3, 1e-3, 1e-3],
            mu: 0.05,
            l: 2,
            n: 2,
            sqrt_q: 4,
            tol: 1e-12,
            max_iters: 10,
            ..SolverConfig::default()
        };
        let out = solve(&x, &y, &model, &config).unwrap();
        let rel = out.z.sub(&z_true).frobenius_norm() / z_true.frobenius_norm();
        assert!(rel <= 1e-3, "consistency fixture error {rel}");
        assert!(out.log.len() <= 10);
    }

    #[test]
    fn solve_is_deterministic() {
        let (_, x, y, model) = consistency_fixture();
        let config = SolverConfig {
            alpha: [0.05, 0.02, 0.01],
            mu: 0.05,
            l: 2,
            n: 2,
            sqrt_q: 4,
            tol: 1e-9,
            max_iters: 6,
            seed: 7,
            ..SolverConfig::default()
        };
        let a = solve(&x, &y, &model, &config).unwrap();
        let b = solve(&x, &y, &model, &config).unwrap();
        assert_eq!(a.z.values(), b.z.values());
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn solve_without_regularization_reaches_least_squares() {
        // alpha = 0 makes the ADMM fixed point the least-squares solution of
        // the data terms for any mu; compare against the dense normal
        // equations assembled from explicit matrices.
        let (w, h, d, s, l, s_msi) = (4usize, 4, 2, 4, 2, 2);
        let kernel = gaussian_kernel(3, 0.7).unwrap();
        let model = DegradationModel::new(kernel.clone(), d, block_srf(s_msi, s)).unwrap();
        let basis_true = random_basis(s, l, 190);
        let c_true = random_tensor((w, h, l), 191);
        let z = reconstruct(&c_true, &basis_true).unwrap();
        let x = downsample(&blur_apply(&z, model.kernel()), d).unwrap();
        let y = spectral_apply(&z, model.srf()).unwrap();

        // The solver re-estimates the basis from x; use the same basis for
        // the oracle so both optimize identical coefficients.
        let basis = estimate_basis(&x, l).unwrap();
        let wh = w * h;
        let b_right = blur_matrix(w, h, &kernel).transpose();
        let (wl, hl) = (w / d, h / d);
        let mut s_right = Mat::zeros(wh, wl * hl);
        for y0 in 0..hl {
            for x0 in 0..wl {
                s_right.set(x0 * d + w * (y0 * d), x0 + wl * y0, 1.0);
            }
        }
        let bs = b_right.mul(&s_right);
        let q2 = bs.mul(&bs.transpose());
        let fr = model.srf().mul(basis.r());
        let q1p = fr.transpose().mul(&fr);
        let rhs_mat = fr
            .transpose()
            .mul(&unfold(&y, 3))
            .add(&basis.r().transpose().mul(&unfold(&x, 3)).mul(&bs.transpose()));
        // vec(C) with u[i*WH + j] = C_(3)(i, j); normal operator
        // A[(i,j),(i',j')] = Q1'[i][i'] delta_jj' + delta_ii' Q2[j'][j].
        let nun = l * wh;
        let mut a = Mat::zeros(nun, nun);
        let mut rhs = vec![0.0; nun];
        for i in 0..l {
            for j in 0..wh {
                let row = i * wh + j;
                rhs[row] = rhs_mat.get(i, j);
                for ip in 0..l {
                    a.set(row, ip * wh + j, a.get(row, ip * wh + j) + q1p.get(i, ip));
                }
                for jp in 0..wh {
                    a.set(row, i * wh + jp, a.get(row, i * wh + jp) + q2.get(jp, j));
                }
            }
        }
        let u = lu_solve(&a, &rhs).unwrap();
        let mut c_ls = Mat::zeros(l, wh);
        for i in 0..l {
            c_ls.row_mut(i).copy_from_slice(&u[i * wh..(i + 1) * wh]);
        }
        let z_ls = reconstruct(&fold(&c_ls, 3, (w, h, l)).unwrap(), &basis).unwrap();

        let config = SolverConfig {
            alpha: [0.0, 0.0, 0.0],
            mu: 0.05,
            l,
            n: 2,
            sqrt_q: 2,
            tol: 1e-13,
            max_iters: 400,
            sylvester: SylvesterBackend::Cg { tol: 1e-12, max_iters: 2000 },
            ..SolverConfig::default()
        };
        let out = solve(&x, &y, &model, &config).unwrap();
        let rel = out.z.sub(&z_ls).frobenius_norm() / z_ls.frobenius_norm();
        assert!(rel < 1e-4, "least-squares limit violated: {rel}");
    }

    #[test]
    fn solve_rejects_non_finite_inputs() {
        let (_, mut x, y, model) = consistency_fixture();
        x.set(1, 2, 3, f64::NAN);
        let config = SolverConfig { l: 2, n: 2, sqrt_q: 4, ..SolverConfig::default() };
        match solve(&x, &y, &model, &config) {
            Err(Error::NonFinite { iteration, .. }) => assert_eq!(iteration, 0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let mut config = SolverConfig::default();
        config.mu = 0.0;
        assert!(matches!(config.validate(), Err(Error::Parameter(_))));
        let mut config = SolverConfig::default();
        config.alpha[1] = -0.1;
        assert!(matches!(config.validate(), Err(Error::Parameter(_))));
        let mut config = SolverConfig::default();
        config.tol = 0.0;
        assert!(matches!(config.validate(), Err(Error::Parameter(_))));
        let mut config = SolverConfig::default();
        config.l = 0;
        assert!(matches!(config.validate(), Err(Error::Parameter(_))));
    }

    #[test]
    fn solve_checks_grid_compatibility() {
        let (_, x, y, model) = consistency_fixture();
        // sqrt_q that does not tile the grid.
        let config = SolverConfig { l: 2, n: 2, sqrt_q: 3, ..SolverConfig::default() };
        assert!(matches!(solve(&x, &y, &model, &config), Err(Error::Dimension(_))));
        // Wrong MSI grid.
        let y_bad = random_tensor((4, 8, y.dims().2), 200);
        let config = SolverConfig { l: 2, n: 2, sqrt_q: 4, ..SolverConfig::default() };
        assert!(matches!(solve(&x, &y_bad, &model, &config), Err(Error::Dimension(_))));
    }

    #[test]
    fn mode3_grad_regularizer_survives_round_trip() {
        // mode_n_product along 3 with the dense difference circulant must
        // agree with grad on the coefficient tensor, tying the solver's
        // gradient convention to the oracle in the tensor module.
        let c = random_tensor((4, 4, 5), 210);
        let dense = mode_n_product(&c, &crate::tensor::grad_matrix(5), 3).unwrap();
        let fast = grad(&c, 3);
        let rel = dense.sub(&fast).frobenius_norm() / fast.frobenius_norm();
        assert!(rel < 1e-12);
    }
}
