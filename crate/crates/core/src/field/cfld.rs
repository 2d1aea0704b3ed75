//! `CFLD` binary field files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size   content
//! 0       4      magic "CFLD"
//! 4       4      format version, u32 = 1
//! 8       4      number of axes D, u32
//! 12      8*D    extents, u64 each
//! ...     16*N   entries, interleaved (re, im) f64, row-major
//! ```
//!
//! A sequence file is several records written back to back.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexField, GridShape};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CFLD";
pub const VERSION: u32 = 1;

pub fn write<W: Write>(w: &mut W, field: &ComplexField) -> Result<()> {
    let dims = field.shape().dims();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &e in dims {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for z in field.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(Error::Format("truncated CFLD header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

fn u32_at<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format("truncated CFLD record".into())
    } else {
        e.into()
    }
}

/// Reads one record; `Ok(None)` at a clean end of stream.
pub fn read_next<R: Read>(r: &mut R) -> Result<Option<ComplexField>> {
    let mut magic = [0u8; 4];
    if !read_exact_or_eof(r, &mut magic)? {
        return Ok(None);
    }
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"CFLD\"")));
    }
    let version = u32_at(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported CFLD version {version}")));
    }
    let ndim = u32_at(r)? as usize;
    if ndim == 0 || ndim > 64 {
        return Err(Error::Format(format!("implausible axis count {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(truncated)?;
        let e = u64::from_le_bytes(b);
        dims.push(usize::try_from(e).map_err(|_| Error::Format(format!("extent {e} too large")))?);
    }
    let shape = GridShape::new(dims).map_err(|e| Error::Format(e.to_string()))?;
    let mut data = Vec::with_capacity(shape.len().min(1 << 24));
    let mut b = [0u8; 16];
    for _ in 0..shape.len() {
        r.read_exact(&mut b).map_err(truncated)?;
        let re = f64::from_le_bytes(b[..8].try_into().unwrap());
        let im = f64::from_le_bytes(b[8..].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    ComplexField::from_vec(shape, data).map(Some)
}

pub fn read<R: Read>(r: &mut R) -> Result<ComplexField> {
    read_next(r)?.ok_or_else(|| Error::Format("empty CFLD stream".into()))
}

pub fn save(path: impl AsRef<Path>, field: &ComplexField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ComplexField> {
    read(&mut BufReader::new(File::open(path)?))
}

/// All records of a sequence file.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<Vec<ComplexField>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    while let Some(f) = read_next(&mut r)? {
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComplexField {
        let shape = GridShape::new(vec![2, 3]).unwrap();
        ComplexField::from_fn(shape, |i| Complex64::new(i[0] as f64 + 0.5, -(i[1] as f64)))
    }

    #[test]
    fn byte_layout() {
        let shape = GridShape::new(vec![1]).unwrap();
        let f = ComplexField::from_vec(shape, vec![Complex64::new(1.0, -2.0)]).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &f).unwrap();
        let mut expected = b"CFLD".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&(-2.0f64).to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn round_trip_and_sequence() {
        let f = sample();
        let mut buf = Vec::new();
        write(&mut buf, &f).unwrap();
        write(&mut buf, &f.conj()).unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_next(&mut r).unwrap().unwrap(), f);
        assert_eq!(read_next(&mut r).unwrap().unwrap(), f.conj());
        assert!(read_next(&mut r).unwrap().is_none());
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let mut buf = Vec::new();
        write(&mut buf, &sample()).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read(&mut bad.as_slice()), Err(Error::Format(_))));

        let mut bad = buf.clone();
        bad[4] = 2;
        let err = read(&mut bad.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"));

        let short = &buf[..buf.len() - 3];
        assert!(matches!(read(&mut &short[..]), Err(Error::Format(_))));
    }
}
