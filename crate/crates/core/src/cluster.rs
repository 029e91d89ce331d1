//! Nonlocal grouping of coefficient patches. The high-resolution MSI is cut
//! into non-overlapping square patches on a regular grid, each patch is
//! vectorized into a feature row, and k-means++ with Lloyd refinement groups
//! similar patches. The induced partition is then reused to gather matching
//! patches of the coefficient tensor into small group tensors the regularizer
//! operates on.
//!
//! Patch indices run row-major over the `(W/sq, H/sq)` patch grid (`sq` is
//! the patch side): patch `p` sits at grid position `(p / nh, p % nh)` with
//! `nh = H/sq`. Within a patch, pixels are enumerated first-spatial-index
//! fastest, and feature rows order pixel-within-patch fastest, then band.
//! All randomness flows through a ChaCha8 stream seeded by the caller, so a
//! `(features, n, seed)` triple always yields the same labels.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::tensor::Tensor3;

/// A disjoint cover of the patch grid by nonempty groups.
#[derive(Clone, Debug)]
pub struct ClusterPartition {
    sqrt_q: usize,
    grid: (usize, usize),
    groups: Vec<Vec<usize>>,
}

impl ClusterPartition {
    pub fn sqrt_q(&self) -> usize {
        self.sqrt_q
    }

    /// Patch-grid shape `(W/sq, H/sq)`.
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    /// Patch indices per group, each list ascending, every group nonempty.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_patches(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    /// Top-left pixel of patch `p`.
    pub fn patch_origin(&self, p: usize) -> (usize, usize) {
        let nh = self.grid.1;
        ((p / nh) * self.sqrt_q, (p % nh) * self.sqrt_q)
    }

    /// Debug dump of group sizes as `group_id,size` CSV rows.
    pub fn sizes_csv(&self) -> String {
        let mut out = String::from("group_id,size\n");
        for (i, g) in self.groups.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, g.len()));
        }
        out
    }
}

/// Cuts `y` (W x H x s) into non-overlapping `sq x sq` patches and returns
/// one feature row per patch (length `sq*sq*s`). The patch side must divide
/// both spatial dims.
pub fn extract_patch_features(y: &Tensor3, sqrt_q: usize) -> Result<Mat> {
    let (w, h, s) = y.dims();
    if sqrt_q == 0 || w % sqrt_q != 0 || h % sqrt_q != 0 {
        return Err(Error::Dimension(format!(
            "patch side {sqrt_q} must divide spatial dims {w}x{h}"
        )));
    }
    let (nw, nh) = (w / sqrt_q, h / sqrt_q);
    let q = sqrt_q * sqrt_q;
    let mut features = Mat::zeros(nw * nh, q * s);
    for p1 in 0..nw {
        for p2 in 0..nh {
            let p = p1 * nh + p2;
            let row = features.row_mut(p);
            for band in 0..s {
                for a2 in 0..sqrt_q {
                    for a1 in 0..sqrt_q {
                        let v = a1 + sqrt_q * a2;
                        row[v + q * band] = y.get(p1 * sqrt_q + a1, p2 * sqrt_q + a2, band);
                    }
                }
            }
        }
    }
    Ok(features)
}

fn dist_sqr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Moves one point into each empty cluster: the donor is the point farthest
/// from its assigned center among points whose cluster keeps at least one
/// member, lowest index on ties. `centers` rows are the stale cluster
/// centers the assignment was made against.
fn repair_empty_clusters(features: &Mat, centers: &Mat, labels: &mut [usize], n: usize) {
    let mut sizes = vec![0usize; n];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for empty in 0..n {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<(f64, usize)> = None;
        for (p, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = dist_sqr(features.row(p), centers.row(l));
            let better = match donor {
                None => true,
                Some((bd, _)) => d > bd,
            };
            if better {
                donor = Some((d, p));
            }
        }
        let (_, p) = donor.expect("a donor cluster with at least two members exists");
        sizes[labels[p]] -= 1;
        labels[p] = empty;
        sizes[empty] += 1;
    }
}

/// k-means++ seeding followed by Lloyd iterations to a fixpoint (at most
/// 100). Returns one label in `0..n` per feature row; every cluster is
/// nonempty. Ties in assignment go to the lowest center index.
pub fn kmeanspp_cluster(features: &Mat, n: usize, seed: u64) -> Result<Vec<usize>> {
    let points = features.rows;
    if n == 0 {
        return Err(Error::Parameter("cluster count must be at least 1".into()));
    }
    if n > points {
        return Err(Error::Parameter(format!(
            "cannot form {n} clusters from {points} patches"
        )));
    }
    let dim = features.cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Seeding: first center uniform, the rest D^2-weighted. A zero total
    // weight (every point coincides with a center) falls back to the lowest
    // unused index.
    let mut centers = Mat::zeros(n, dim);
    let mut chosen = vec![false; points];
    let first = (rng.next_u64() % points as u64) as usize;
    centers.row_mut(0).copy_from_slice(features.row(first));
    chosen[first] = true;
    let mut d2: Vec<f64> = (0..points)
        .map(|p| dist_sqr(features.row(p), centers.row(0)))
        .collect();
    for k in 1..n {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = uniform01(&mut rng) * total;
            let mut acc = 0.0;
            let mut sel = None;
            for (p, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r && w > 0.0 {
                    sel = Some(p);
                    break;
                }
            }
            sel.unwrap_or_else(|| {
                d2.iter().rposition(|&w| w > 0.0).expect("positive weight exists")
            })
        } else {
            chosen.iter().position(|&c| !c).expect("unused point exists")
        };
        centers.row_mut(k).copy_from_slice(features.row(pick));
        chosen[pick] = true;
        for p in 0..points {
            let d = dist_sqr(features.row(p), centers.row(k));
            if d < d2[p] {
                d2[p] = d;
            }
        }
    }

    // Lloyd refinement.
    let mut labels = vec![0usize; points];
    let mut prev: Option<Vec<usize>> = None;
    for _ in 0..100 {
        for p in 0..points {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for k in 0..n {
                let d = dist_sqr(features.row(p), centers.row(k));
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            labels[p] = best;
        }
        repair_empty_clusters(features, &centers, &mut labels, n);
        if prev.as_deref() == Some(labels.as_slice()) {
            break;
        }
        prev = Some(labels.clone());
        let mut sums = Mat::zeros(n, dim);
        let mut counts = vec![0usize; n];
        for (p, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, &f) in sums.row_mut(l).iter_mut().zip(features.row(p)) {
                *s += f;
            }
        }
        for k in 0..n {
            let inv = 1.0 / counts[k] as f64;
            for s in sums.row_mut(k) {
                *s *= inv;
            }
        }
        centers = sums;
    }
    Ok(labels)
}

/// Full grouping pipeline on the MSI: features, k-means, partition.
pub fn cluster_patches(y: &Tensor3, sqrt_q: usize, n: usize, seed: u64) -> Result<ClusterPartition> {
    let features = extract_patch_features(y, sqrt_q)?;
    let labels = kmeanspp_cluster(&features, n, seed)?;
    let (w, h, _) = y.dims();
    let grid = (w / sqrt_q, h / sqrt_q);
    let mut groups = vec![Vec::new(); n];
    for (p, &l) in labels.iter().enumerate() {
        groups[l].push(p);
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::SolverFailure("clustering produced an empty group".into()));
    }
    Ok(ClusterPartition { sqrt_q, grid, groups })
}

/// Collects the patches of each group out of a coefficient tensor
/// (W x H x L) into group tensors of shape `K_n x L x q`: entry
/// `(p, l, v)` is coefficient channel `l` at pixel `v` (first-spatial-index
/// fastest) of the group's `p`-th patch.
pub fn gather_groups(c: &Tensor3, part: &ClusterPartition) -> Result<Vec<Tensor3>> {
    let (w, h, l) = c.dims();
    let sq = part.sqrt_q;
    if part.grid.0 * sq != w || part.grid.1 * sq != h {
        return Err(Error::Dimension(format!(
            "coefficient dims {w}x{h} do not match partition grid {:?} with patch side {sq}",
            part.grid
        )));
    }
    let q = sq * sq;
    let mut out = Vec::with_capacity(part.groups.len());
    for group in &part.groups {
        let mut g = Tensor3::zeros((group.len(), l, q));
        for (pi, &p) in group.iter().enumerate() {
            let (x0, y0) = part.patch_origin(p);
            for ch in 0..l {
                for a2 in 0..sq {
                    for a1 in 0..sq {
                        g.set(pi, ch, a1 + sq * a2, c.get(x0 + a1, y0 + a2, ch));
                    }
                }
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Inverse of [`gather_groups`]: writes group tensors back into a full
/// coefficient tensor. The partition covers every patch exactly once, so
/// scatter after gather is the identity.
pub fn scatter_groups(
    groups: &[Tensor3],
    part: &ClusterPartition,
    dims: (usize, usize, usize),
) -> Result<Tensor3> {
    let (w, h, l) = dims;
    let sq = part.sqrt_q;
    if part.grid.0 * sq != w || part.grid.1 * sq != h {
        return Err(Error::Dimension(format!(
            "target dims {w}x{h} do not match partition grid {:?} with patch side {sq}",
            part.grid
        )));
    }
    if groups.len() != part.groups.len() {
        return Err(Error::Dimension(format!(
            "{} group tensors for {} groups",
            groups.len(),
            part.groups.len()
        )));
    }
    let q = sq * sq;
    let mut c = Tensor3::zeros(dims);
    for (g, group) in groups.iter().zip(&part.groups) {
        if g.dims() != (group.len(), l, q) {
            return Err(Error::Dimension(format!(
                "group tensor dims {:?} do not match (K={}, L={l}, q={q})",
                g.dims(),
                group.len()
            )));
        }
        for (pi, &p) in group.iter().enumerate() {
            let (x0, y0) = part.patch_origin(p);
            for ch in 0..l {
                for a2 in 0..sq {
                    for a1 in 0..sq {
                        c.set(x0 + a1, y0 + a2, ch, g.get(pi, ch, a1 + sq * a2));
                    }
                }
            }
        }
    }
    Ok(c)
}
