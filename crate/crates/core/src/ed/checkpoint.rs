//! Eigenvector checkpoint.
//!
//! Little-endian layout: three `u64` (`n_tr`, `k`, `dim`), then `k * dim`
//! amplitudes as interleaved `f64` real and imaginary parts, vector by vector.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use super::{StateVector, Truncation};
use crate::error::{Error, Result};

pub fn write_checkpoint(path: &Path, vectors: &[StateVector]) -> Result<()> {
    let first = vectors.first().ok_or_else(|| Error::Checkpoint("no vectors to write".into()))?;
    let t = first.truncation();
    let mut w = BufWriter::new(File::create(path)?);
    for h in [t.n_tr() as u64, vectors.len() as u64, t.dim() as u64] {
        w.write_all(&h.to_le_bytes())?;
    }
    for v in vectors {
        first.check_same(v)?;
        for a in v.amps() {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<StateVector>> {
    let mut r = BufReader::new(File::open(path)?);
    let n_tr = read_u64(&mut r)? as usize;
    let k = read_u64(&mut r)? as usize;
    let dim = read_u64(&mut r)? as usize;
    let t = Truncation::new(n_tr).map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if t.dim() != dim {
        return Err(Error::Checkpoint(format!("header dim {dim} does not match n_tr {n_tr}")));
    }
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = read_f64(&mut r)?;
            amps.push(C64::new(re, read_f64(&mut r)?));
        }
        out.push(StateVector::new(t, amps)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after payload".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::tests::random_state;

    #[test]
    fn round_trip() {
        let t = Truncation::new(2).unwrap();
        let vs = vec![random_state(t, 1), random_state(t, 2)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.bin");
        write_checkpoint(&path, &vs).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 24 + 2 * 216 * 16);
        assert_eq!(read_checkpoint(&path).unwrap(), vs);
    }

    #[test]
    fn truncated_file_rejected() {
        let t = Truncation::new(1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.bin");
        write_checkpoint(&path, &[random_state(t, 1)]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
