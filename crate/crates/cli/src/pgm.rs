//! Binary PGM (P5) writer for error maps. A comment line records the value
//! range mapped onto [0, 255] so the gray levels stay interpretable.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::Failure;

/// Writes `plane` (length `w*h`, index `col + w*row`) as an 8-bit P5 image,
/// scaling `[lo, hi]` linearly to [0, 255] and saturating outside it.
pub fn write_pgm(
    path: &Path,
    plane: &[f64],
    w: usize,
    h: usize,
    lo: f64,
    hi: f64,
) -> Result<(), Failure> {
    if plane.len() != w * h {
        return Err(Failure::Config(format!(
            "plane has {} samples, expected {w}x{h}",
            plane.len()
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Failure::Config(format!("bad scaling range [{lo}, {hi}]")));
    }
    let mut bytes = format!("P5\n# range {lo} {hi}\n{w} {h}\n255\n").into_bytes();
    bytes.extend(plane.iter().map(|&v| {
        let scaled = (v - lo) / (hi - lo) * 255.0;
        scaled.round().clamp(0.0, 255.0) as u8
    }));
    let mut file = fs::File::create(path)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(&bytes)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}
