//! Binary knowledge-base file.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "RAKB" | version u32 | n u64 | d_cm u32 | d_prof u32
//! layout_len u32 | layout descriptor (UTF-8, "name:width,...")
//! ids      n   x u64
//! labels   n   x u8
//! scores   n   x f32
//! cm       n*d_cm   x f32 (row-major)
//! prof     n*d_prof x f32 (row-major)
//! crc64 u64 (CRC-64/XZ over every preceding byte)
//! ```
//!
//! Norms are not stored; they are recomputed on load.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crc::{Crc, Digest, CRC_64_XZ};
use memmap2::Mmap;

use super::KnowledgeBase;
use crate::error::{Error, Result};
use crate::types::{Label, ProfileLayout};

pub const MAGIC: &[u8; 4] = b"RAKB";
pub const FORMAT_VERSION: u32 = 1;

pub static CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

struct CrcWriter<'a, W: Write> {
    inner: W,
    digest: Digest<'a, u64>,
}

impl<W: Write> Write for CrcWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.digest.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn write_f32s(w: &mut impl Write, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(4 * values.len().min(1 << 16));
    for chunk in values.chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Serializes `base` to any writer.
pub fn write_to<W: Write>(base: &KnowledgeBase, writer: W) -> std::io::Result<W> {
    let mut w = CrcWriter { inner: writer, digest: CRC64.digest() };
    let layout = base.layout().descriptor();
    let dim_u32 = |d: usize| {
        u32::try_from(d).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32"))
    };

    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(base.len() as u64).to_le_bytes())?;
    w.write_all(&dim_u32(base.d_cm())?.to_le_bytes())?;
    w.write_all(&dim_u32(base.d_prof())?.to_le_bytes())?;
    w.write_all(&dim_u32(layout.len())?.to_le_bytes())?;
    w.write_all(layout.as_bytes())?;

    let mut ids = Vec::with_capacity(8 * base.len());
    for id in base.ids() {
        ids.extend_from_slice(&id.to_le_bytes());
    }
    w.write_all(&ids)?;
    let labels: Vec<u8> = base.labels().iter().map(|l| l.as_u8()).collect();
    w.write_all(&labels)?;
    write_f32s(&mut w, base.scores())?;
    write_f32s(&mut w, base.cm().as_slice())?;
    write_f32s(&mut w, base.prof().as_slice())?;

    let CrcWriter { mut inner, digest } = w;
    inner.write_all(&digest.finalize().to_le_bytes())?;
    inner.flush()?;
    Ok(inner)
}

pub fn save(base: &KnowledgeBase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_to(base, BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Bounds-checked little-endian cursor.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or(Error::TruncatedFile {
            expected: (self.pos as u64).saturating_add(len as u64),
            actual: self.bytes.len() as u64,
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let bytes = self.take(count * 4)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    // SAFETY: the mapping is read-only and dropped before returning; the file
    // is not expected to be modified concurrently.
    let map = unsafe { Mmap::map(&file) }.map_err(|e| Error::io(path, e))?;
    from_bytes(&map)
}

pub(crate) fn from_bytes(bytes: &[u8]) -> Result<KnowledgeBase> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = r.u64()?;
    let d_cm = r.u32()? as u64;
    let d_prof = r.u32()? as u64;
    let layout_len = r.u32()? as usize;
    let layout_bytes = r.take(layout_len)?;

    // Size check before the checksum so truncation is reported as such.
    let payload = n
        .checked_mul(8 + 1 + 4)
        .and_then(|p| n.checked_mul(d_cm)?.checked_mul(4)?.checked_add(p))
        .and_then(|p| n.checked_mul(d_prof)?.checked_mul(4)?.checked_add(p))
        .ok_or_else(|| Error::CorruptFile("header sizes overflow".into()))?;
    let expected = (r.pos as u64)
        .checked_add(payload)
        .and_then(|p| p.checked_add(8))
        .ok_or_else(|| Error::CorruptFile("header sizes overflow".into()))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(Error::CorruptFile(format!("{} trailing bytes", actual - expected)));
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let computed = CRC64.checksum(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let layout: ProfileLayout = std::str::from_utf8(layout_bytes)
        .map_err(|_| Error::CorruptFile("layout descriptor is not UTF-8".into()))?
        .parse()?;
    if layout.dims() as u64 != d_prof {
        return Err(Error::CorruptFile(format!("layout covers {} dims, header says {d_prof}", layout.dims())));
    }
    let n = n as usize;
    let ids = r.take(8 * n)?.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
    let labels = r
        .take(n)?
        .iter()
        .map(|&b| Label::try_from(b as u64))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| Error::CorruptFile("label byte not 0 or 1".into()))?;
    let scores = r.f32s(n)?;
    let cm = r.f32s(n * d_cm as usize)?;
    let prof = r.f32s(n * d_prof as usize)?;
    KnowledgeBase::from_columns(ids, labels, scores, cm, d_cm as usize, prof, layout)
}
