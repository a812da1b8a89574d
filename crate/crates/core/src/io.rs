//! Binary field files and the number format of CSV outputs.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "NLS3"            4 bytes magic
//! version           u32 (currently 1)
//! n1, n2, n3        u32 each
//! L1, L2, L3        f64 each
//! values            n1*n2*n3 pairs (re, im) of f64, x3 fastest
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;

pub const MAGIC: &[u8; 4] = b"NLS3";
pub const FORMAT_VERSION: u32 = 1;

/// Shortest round-trip scientific notation, e.g. `1.5e-3`.
pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for n in g.n() {
        let n = u32::try_from(n).map_err(|_| NlsError::Format(format!("cell count {n} exceeds u32")))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for len in g.lengths() {
        w.write_all(&len.to_le_bytes())?;
    }
    for z in field.as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(NlsError::Format(format!("bad magic bytes {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(NlsError::Format(format!("unsupported format version {version}")));
    }
    let n = [read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, read_u32(&mut r)? as usize];
    let len = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
    let grid = Grid3::new(n, len)?;
    let mut bytes = vec![0u8; grid.size() * 16];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(NlsError::Format("trailing bytes after field data".into()));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Field::from_vec(&grid, data)
}

pub fn save_field(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    read_field(BufReader::new(File::open(path)?))
}

fn truncated(e: std::io::Error) -> NlsError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        NlsError::Format("file truncated".into())
    } else {
        NlsError::Io(e)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}
