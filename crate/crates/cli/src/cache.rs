//! Binary table cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TWL1" | kind: u8 | count: u64 | records ... | FNV-1a 64 of everything before
//! ```
//!
//! Kind 1 stores integers as a sign byte (0 or 1 for negative), a `u32`
//! byte length and the magnitude bytes. Kind 2 stores complex values as two
//! `f64`. Kind 3 stores one `f64` per record.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use thiserror::Error;
use twistlab_core::hecke::series::IntSeq;
use twistlab_core::hecke::{eigenform_coefficients, GL2CoefficientTable};

pub const MAGIC: &[u8; 4] = b"TWL1";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("not a table cache file")]
    BadMagic,
    #[error("unsupported cache format version {0:?}")]
    VersionUnsupported(u8),
    #[error("checksum mismatch or truncated file")]
    ChecksumMismatch,
    #[error("unknown payload kind {0}")]
    UnknownKind(u8),
    #[error("no cached table for {0}")]
    CacheMiss(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cached table rejected: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Integer(Vec<BigInt>),
    Complex(Vec<Complex64>),
    Float(Vec<f64>),
}

impl Payload {
    pub fn kind(&self) -> u8 {
        match self {
            Payload::Integer(_) => 1,
            Payload::Complex(_) => 2,
            Payload::Float(_) => 3,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Payload::Integer(_) => "integer",
            Payload::Complex(_) => "complex",
            Payload::Float(_) => "float",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::Integer(v) => v.len(),
            Payload::Complex(v) => v.len(),
            Payload::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn encode(payload: &Payload) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + 16 * payload.len() + 8);
    out.extend_from_slice(MAGIC);
    out.push(payload.kind());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    match payload {
        Payload::Integer(v) => {
            for x in v {
                let (sign, mag) = x.to_bytes_le();
                out.push(u8::from(sign == Sign::Minus));
                let mag: &[u8] = if sign == Sign::NoSign { &[] } else { &mag };
                out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
                out.extend_from_slice(mag);
            }
        }
        Payload::Complex(v) => {
            for z in v {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        Payload::Float(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        let end = self.pos.checked_add(n).ok_or(CacheError::ChecksumMismatch)?;
        let s = self.bytes.get(self.pos..end).ok_or(CacheError::ChecksumMismatch)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CacheError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Payload, CacheError> {
    if bytes.len() < 4 || &bytes[..3] != b"TWL" {
        return Err(CacheError::BadMagic);
    }
    if bytes[3] != MAGIC[3] {
        return Err(CacheError::VersionUnsupported(bytes[3]));
    }
    if bytes.len() < 4 + 1 + 8 + 8 {
        return Err(CacheError::ChecksumMismatch);
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(trailer.try_into().unwrap()) {
        return Err(CacheError::ChecksumMismatch);
    }
    let kind = body[4];
    let count = u64::from_le_bytes(body[5..13].try_into().unwrap()) as usize;
    let mut r = Reader { bytes: body, pos: 13 };
    // every record needs at least five bytes, so this caps allocation
    let cap = count.min(body.len());
    let payload = match kind {
        1 => {
            let mut v = Vec::with_capacity(cap);
            for _ in 0..count {
                let sign = r.take(1)?[0];
                let len = r.u32()? as usize;
                let mag = BigInt::from_bytes_le(Sign::Plus, r.take(len)?);
                v.push(if sign == 1 { -mag } else { mag });
            }
            Payload::Integer(v)
        }
        2 => {
            let mut v = Vec::with_capacity(cap);
            for _ in 0..count {
                let re = r.f64()?;
                v.push(Complex64::new(re, r.f64()?));
            }
            Payload::Complex(v)
        }
        3 => {
            let mut v = Vec::with_capacity(cap);
            for _ in 0..count {
                v.push(r.f64()?);
            }
            Payload::Float(v)
        }
        k => return Err(CacheError::UnknownKind(k)),
    };
    if r.pos != body.len() {
        return Err(CacheError::ChecksumMismatch);
    }
    Ok(payload)
}

pub fn store(path: &Path, payload: &Payload) -> Result<(), CacheError> {
    fs::write(path, encode(payload)).map_err(|source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<Payload, CacheError> {
    let bytes = fs::read(path).map_err(|source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

/// `a(1..=N)` as an integer payload.
pub fn gl2_payload(table: &GL2CoefficientTable) -> Payload {
    let c = table.coefficients();
    Payload::Integer((1..c.len()).map(|n| c.get(n)).collect())
}

/// Rebuilds a table from [`gl2_payload`] output; Hecke relations are rechecked.
pub fn gl2_from_payload(weight: u32, payload: Payload) -> Result<GL2CoefficientTable, CacheError> {
    let Payload::Integer(mut v) = payload else {
        return Err(CacheError::Invalid(format!(
            "expected an integer table, found {}",
            payload.kind_name()
        )));
    };
    v.insert(0, BigInt::from(0));
    GL2CoefficientTable::from_coefficients(weight, IntSeq::from_bigints(v))
        .map_err(|e| CacheError::Invalid(e.to_string()))
}

fn gl2_file_name(weight: u32, n: usize) -> String {
    format!("gl2-w{weight}-n{n}.twl")
}

fn parse_gl2_name(name: &str, weight: u32) -> Option<usize> {
    name.strip_prefix(&format!("gl2-w{weight}-n"))?
        .strip_suffix(".twl")?
        .parse()
        .ok()
}

/// Smallest cached table of this weight with at least `n` coefficients.
fn find_gl2(dir: &Path, weight: u32, n: usize) -> Option<(PathBuf, usize)> {
    let entries = fs::read_dir(dir).ok()?;
    entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let len = parse_gl2_name(e.file_name().to_str()?, weight)?;
            (len >= n).then(|| (e.path(), len))
        })
        .min_by_key(|(p, len)| (*len, p.clone()))
}

/// Loads a weight-`k` table covering `n` from `dir`, or builds it and stores it
/// there. With `no_build`, a miss is an error.
pub fn gl2_table(
    dir: Option<&Path>,
    weight: u32,
    n: usize,
    no_build: bool,
) -> Result<GL2CoefficientTable, CacheError> {
    let n = n.max(1);
    if let Some(dir) = dir {
        if let Some((path, _)) = find_gl2(dir, weight, n) {
            return gl2_from_payload(weight, load(&path)?);
        }
    }
    if no_build {
        return Err(CacheError::CacheMiss(format!("weight {weight}, N = {n}")));
    }
    let table = eigenform_coefficients(weight, n).map_err(|e| CacheError::Invalid(e.to_string()))?;
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|source| CacheError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        store(&dir.join(gl2_file_name(weight, n)), &gl2_payload(&table))?;
    }
    Ok(table)
}
