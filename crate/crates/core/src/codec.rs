//! Little-endian primitives shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{Rotation, RotationMode};

pub(crate) fn put_u8<W: Write>(w: &mut W, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

pub(crate) fn put_u16<W: Write>(w: &mut W, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f32<W: Write>(w: &mut W, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_usize32<W: Write>(w: &mut W, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::format(format!("{what} = {v} does not fit in u32")))?;
    put_u32(w, v)
}

fn take<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format("truncated file"),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub(crate) fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    Ok(take::<R, 1>(r)?[0])
}

pub(crate) fn get_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(take(r)?))
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

pub(crate) fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

pub(crate) fn get_f32<R: Read>(r: &mut R) -> Result<f32> {
    Ok(f32::from_le_bytes(take(r)?))
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let got: [u8; 4] = take(r)?;
    if &got != magic {
        return Err(Error::format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub(crate) fn expect_version<R: Read>(r: &mut R, supported: u16) -> Result<()> {
    let v = get_u16(r)?;
    if v != supported {
        return Err(Error::format(format!("unsupported version {v} (expected {supported})")));
    }
    Ok(())
}

/// Guards allocations driven by header fields.
pub(crate) fn checked_len(parts: &[usize], what: &str) -> Result<usize> {
    const LIMIT: usize = 1 << 34;
    let mut acc: usize = 1;
    for &p in parts {
        acc = acc.checked_mul(p).filter(|&v| v <= LIMIT).ok_or_else(|| Error::format(format!("{what} too large")))?;
    }
    Ok(acc)
}

/// Rotation descriptor: mode byte and seed.
pub(crate) fn put_rotation<W: Write>(w: &mut W, rot: &Rotation) -> Result<()> {
    if !rot.is_seeded() {
        return Err(Error::invalid("rotation was not drawn from a seed and cannot be serialised"));
    }
    put_u8(w, rot.mode().code())?;
    put_u64(w, rot.seed())
}

pub(crate) fn get_rotation<R: Read>(r: &mut R, dim: usize) -> Result<Rotation> {
    let mode = RotationMode::from_code(get_u8(r)?).map_err(|e| Error::format(e.to_string()))?;
    let seed = get_u64(r)?;
    match mode {
        RotationMode::Identity => Ok(Rotation::identity(dim)),
        _ => Rotation::sample(dim, seed, mode).map_err(|e| Error::format(e.to_string())),
    }
}
