//! Binary kernel files.
//!
//! Layout (little-endian): magic `UGWK`, version `u32`, dim `u32`, points per
//! axis `u32`, half-width `f64`, flags `u32` (bit 0 periodic, bit 1 decay
//! present), then `c: f64, beta: f64` if bit 1 is set, then the kernel
//! entries row-major as `(re: f64, im: f64)` pairs.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Decay, GridSpec, KernelProjection};

pub const MAGIC: &[u8; 4] = b"UGWK";
pub const VERSION: u32 = 1;
const FLAG_PERIODIC: u32 = 1;
const FLAG_DECAY: u32 = 2;

pub fn write_kernel<W: Write>(mut out: W, p: &KernelProjection) -> Result<()> {
    let grid = p.grid();
    let mut flags = 0;
    if grid.periodic {
        flags |= FLAG_PERIODIC;
    }
    if p.decay.is_some() {
        flags |= FLAG_DECAY;
    }
    let mut buf = Vec::with_capacity(32 + 16 * p.len() * p.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_axis as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width.to_le_bytes());
    buf.extend_from_slice(&flags.to_le_bytes());
    if let Some(d) = p.decay {
        buf.extend_from_slice(&d.c.to_le_bytes());
        buf.extend_from_slice(&d.beta.to_le_bytes());
    }
    for c in p.kernel().iter() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_kernel<R: Read>(mut input: R) -> Result<KernelProjection> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::KernelFormat("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::KernelFormat(format!("unsupported version {version}")));
    }
    let dim = cur.u32()? as usize;
    let points = cur.u32()? as usize;
    let half_width = cur.f64()?;
    let flags = cur.u32()?;
    if flags & !(FLAG_PERIODIC | FLAG_DECAY) != 0 {
        return Err(Error::KernelFormat(format!("unknown flags {flags:#x}")));
    }
    let mut grid = GridSpec::with_cap(dim, half_width, points, usize::MAX)
        .map_err(|e| Error::KernelFormat(format!("bad grid header: {e}")))?;
    grid.periodic = flags & FLAG_PERIODIC != 0;
    let decay = if flags & FLAG_DECAY != 0 { Some(Decay { c: cur.f64()?, beta: cur.f64()? }) } else { None };
    let n = grid.len();
    let expected =
        n.checked_mul(n).and_then(|m| m.checked_mul(16)).ok_or_else(|| Error::KernelFormat("grid too large".into()))?;
    if bytes.len() - cur.pos != expected {
        return Err(Error::KernelFormat(format!(
            "expected {expected} bytes of kernel entries, found {}",
            bytes.len() - cur.pos
        )));
    }
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        entries.push(Complex64::new(cur.f64()?, cur.f64()?));
    }
    let kernel = Array2::from_shape_vec((n, n), entries).expect("length checked");
    let p = KernelProjection::new(kernel, grid)?;
    Ok(match decay {
        Some(d) => p.with_decay(d),
        None => p,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::KernelFormat("truncated file".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
