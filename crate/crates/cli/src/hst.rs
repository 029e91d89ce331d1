//! HST1 tensor container: magic `HST1`, three u32 little-endian dims, then
//! `I1*I2*I3` float64 little-endian values in `Tensor3` linear order. The
//! reader accepts exactly what the writer produces, bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use hsfuse_core::Tensor3;

use crate::Failure;

pub const MAGIC: [u8; 4] = *b"HST1";

/// Header length in bytes: magic plus three dims.
pub const HEADER_LEN: usize = 16;

fn format_err(path: &Path, offset: usize, what: &str) -> Failure {
    Failure::Io(format!("{}: {what} at byte {offset}", path.display()))
}

pub fn read_hst(path: &Path) -> Result<Tensor3, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, bytes.len(), "truncated header"));
    }
    if bytes[..4] != MAGIC {
        return Err(format_err(path, 0, "bad magic (expected \"HST1\")"));
    }
    let dim = |i: usize| -> usize {
        u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize
    };
    let dims = (dim(0), dim(1), dim(2));
    let count = dims
        .0
        .checked_mul(dims.1)
        .and_then(|p| p.checked_mul(dims.2))
        .filter(|&c| c <= (usize::MAX - HEADER_LEN) / 8)
        .ok_or_else(|| format_err(path, 4, "dims overflow"))?;
    let expected = HEADER_LEN + 8 * count;
    if bytes.len() < expected {
        return Err(format_err(path, bytes.len(), "truncated payload"));
    }
    if bytes.len() > expected {
        return Err(format_err(path, expected, "trailing data"));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::new(dims, values).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn write_hst(path: &Path, t: &Tensor3) -> Result<(), Failure> {
    let (i1, i2, i3) = t.dims();
    if i1 > u32::MAX as usize || i2 > u32::MAX as usize || i3 > u32::MAX as usize {
        return Err(Failure::Config(format!("dims {:?} exceed the u32 header fields", t.dims())));
    }
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * t.len());
    bytes.extend_from_slice(&MAGIC);
    for d in [i1, i2, i3] {
        bytes.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(&bytes)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("hsfuse-hst-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut st = 11u64;
        let t = Tensor3::from_fn((5, 4, 3), |_, _, _| {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (st >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let path = tmp("roundtrip.hst");
        write_hst(&path, &t).unwrap();
        let back = read_hst(&path).unwrap();
        assert_eq!(back.dims(), t.dims());
        for (a, b) in back.values().iter().zip(t.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn unit_tensor_is_24_bytes() {
        let t = Tensor3::new((1, 1, 1), vec![std::f64::consts::PI]).unwrap();
        let path = tmp("unit.hst");
        write_hst(&path, &t).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 24);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn corrupted_magic_is_rejected_with_offset() {
        let path = tmp("magic.hst");
        let t = Tensor3::zeros((2, 2, 2));
        write_hst(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        let err = read_hst(&path).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("bad magic") && msg.contains("byte 0"), "{msg}");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn truncated_payload_reports_file_length() {
        let path = tmp("trunc.hst");
        let t = Tensor3::zeros((3, 2, 2));
        write_hst(&path, &t).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..40]).unwrap();
        let err = read_hst(&path).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("truncated payload") && msg.contains("byte 40"), "{msg}");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn trailing_data_is_rejected() {
        let path = tmp("trail.hst");
        let t = Tensor3::zeros((1, 1, 2));
        write_hst(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        let msg = format!("{}", read_hst(&path).unwrap_err());
        assert!(msg.contains("trailing data") && msg.contains("byte 32"), "{msg}");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn dims_overflow_is_rejected() {
        let path = tmp("overflow.hst");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        let msg = format!("{}", read_hst(&path).unwrap_err());
        assert!(msg.contains("dims overflow") && msg.contains("byte 4"), "{msg}");
        std::fs::remove_file(&path).unwrap();
    }
}
