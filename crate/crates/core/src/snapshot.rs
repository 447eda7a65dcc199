//! Binary state snapshots.
//!
//! Layout (little-endian): magic `EAS1`, version `u32 = 1`, `N: u64`,
//! `t: f64`, then the field payload: `N` density values followed by `N`
//! values of `G` for full-system states, or a single block of `N` velocity
//! values for companion-equation states.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EAS1";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?} (expected EAS1)")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("payload holds {actual} values, expected a multiple ({n} per field, 1 or 2 fields)")]
    BadPayload { n: u64, actual: u64 },
}

/// A decoded snapshot: one or two fields of `n` samples at time `t`.
#[derive(Debug, Clone)]
pub struct RawSnapshot {
    pub t: f64,
    pub n: usize,
    pub fields: Vec<Vec<f64>>,
}

pub fn write_snapshot(
    path: &Path,
    t: f64,
    fields: &[&[f64]],
) -> Result<(), SnapshotError> {
    let n = fields.first().map(|f| f.len()).unwrap_or(0);
    debug_assert!(fields.iter().all(|f| f.len() == n));
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for f in fields {
        for v in *f {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<RawSnapshot, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let count = payload.len() as u64 / 8;
    if n == 0 || count % n != 0 || !(count / n == 1 || count / n == 2) || payload.len() % 8 != 0 {
        return Err(SnapshotError::BadPayload { n, actual: count });
    }
    let mut fields = Vec::new();
    let mut vals = payload.chunks_exact(8).map(|c| {
        let mut b = [0u8; 8];
        b.copy_from_slice(c);
        f64::from_le_bytes(b)
    });
    for _ in 0..count / n {
        fields.push((&mut vals).take(n as usize).collect());
    }
    Ok(RawSnapshot { t, n: n as usize, fields })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_two_fields() {
        let dir = std::env::temp_dir().join(format!("easim-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.snap");
        let rho: Vec<f64> = (0..32).map(|i| 1.0 + i as f64).collect();
        let g: Vec<f64> = (0..32).map(|i| -0.5 * i as f64).collect();
        write_snapshot(&path, 1.25, &[&rho, &g]).unwrap();
        let s = read_snapshot(&path).unwrap();
        assert_eq!(s.t, 1.25);
        assert_eq!(s.n, 32);
        assert_eq!(s.fields.len(), 2);
        assert_eq!(s.fields[0], rho);
        assert_eq!(s.fields[1], g);
        // Header is bit-exact: magic, version, N, t.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"EAS1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 32);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.25);
        assert_eq!(bytes.len(), 24 + 2 * 32 * 8);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_corrupt_header() {
        let dir = std::env::temp_dir().join(format!("easim-snap2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.snap");
        std::fs::write(&path, b"NOPE____________________").unwrap();
        assert!(matches!(read_snapshot(&path), Err(SnapshotError::BadMagic(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
