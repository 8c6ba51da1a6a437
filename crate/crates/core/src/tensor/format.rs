//! `PTNS` binary tensor files: magic `"PTNS"`, `u8` version (1), `u8` dtype
//! (0 = f32), `u8` ndim, `u8` padding, `ndim` little-endian `u32` dims, then
//! the little-endian `f32` payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};
use crate::num::Scalar;

pub const MAGIC: &[u8; 4] = b"PTNS";
const VERSION: u8 = 1;
const DTYPE_F32: u8 = 0;

pub fn write_tensor<T: Scalar, W: Write>(mut w: W, t: &Tensor<T>) -> Result<()> {
    let ndim = u8::try_from(t.ndim())
        .map_err(|_| Error::Format(format!("too many dims: {}", t.ndim())))?;
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, DTYPE_F32, ndim, 0])?;
    for &d in t.shape() {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dim {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.len() * 4);
    for v in t.data() {
        buf.extend_from_slice(&v.as_f32().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<T: Scalar, R: Read>(mut r: R) -> Result<Tensor<T>> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", head[4])));
    }
    if head[5] != DTYPE_F32 {
        return Err(Error::Format(format!("unsupported dtype {}", head[5])));
    }
    let ndim = head[6] as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let mut d = [0u8; 4];
        r.read_exact(&mut d)?;
        shape.push(u32::from_le_bytes(d) as usize);
    }
    let n: usize = shape.iter().product();
    let mut payload = vec![0u8; n * 4];
    r.read_exact(&mut payload)?;
    let data = payload
        .chunks_exact(4)
        .map(|b| T::lit(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
        .collect();
    Tensor::new(shape, data)
}

pub fn save_tensor<T: Scalar>(path: impl AsRef<Path>, t: &Tensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor<T: Scalar>(path: impl AsRef<Path>) -> Result<Tensor<T>> {
    read_tensor(BufReader::new(File::open(path)?))
}
