//! Binary persistence of built tables.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "GTDP"
//! version      u32      FORMAT_VERSION
//! procedure    u8       1 = R1, 3 = R3
//! q            u64      IEEE-754 bit pattern
//! n_top        u64
//! 4 planes     u64 entry count, then raw entries (f64 values, u32 choices)
//! checksum     u64      FNV-1a 64 over every preceding byte
//! ```
//!
//! R3 planes, in order: `E`, `D`, `choice_E`, `choice_D`, each `n_top + 1`
//! long (`D[0]`, `choice_E[0]`, `choice_D[0..2]` are zero).
//! R1 planes: `H` (`n_top + 1`), `G` (`n_top (n_top + 1) / 2`, row `s = m + n`
//! for `s = 1..=n_top` holding `m = 1..=s`), `choice_H`, `choice_G`.

use std::fs;
use std::hash::Hasher;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use gtdp_core::{Prevalence, Procedure, R1Table, R3Table};

use crate::table::{Table, TableSpec};

pub const MAGIC: [u8; 4] = *b"GTDP";
pub const FORMAT_VERSION: u32 = 1;
/// Environment variable naming the table cache directory.
pub const CACHE_ENV: &str = "GTDP_CACHE_DIR";

const HEADER_LEN: usize = 4 + 4 + 1 + 8 + 8;

/// A malformed or mismatched table file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("file ends inside the {0}")]
    Truncated(&'static str),
    #[error("bad magic {0:02x?}, not a table file")]
    Magic([u8; 4]),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("unknown procedure tag {0}")]
    ProcedureTag(u8),
    #[error("procedure is {found}, expected {expected}")]
    Procedure {
        expected: Procedure,
        found: Procedure,
    },
    #[error("q bit pattern {found:#018x} does not match the requested {expected:#018x}")]
    Q { expected: u64, found: u64 },
    #[error("invalid q in file: {0}")]
    InvalidQ(gtdp_core::Error),
    #[error("n_top {0} is too large")]
    NTop(u64),
    #[error("plane {plane} holds {found} entries, n_top implies {expected}")]
    PlaneLength {
        plane: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("{0} bytes after the checksum")]
    Trailing(usize),
    #[error("inconsistent planes: {0}")]
    Table(gtdp_core::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Decode { path: PathBuf, source: DecodeError },
}

struct Hashing<W> {
    inner: W,
    hasher: FnvHasher,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.write(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn write_f64s(w: &mut impl Write, plane: &[f64]) -> io::Result<()> {
    w.write_all(&(plane.len() as u64).to_le_bytes())?;
    for v in plane {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_u32s(w: &mut impl Write, plane: &[u32]) -> io::Result<()> {
    w.write_all(&(plane.len() as u64).to_le_bytes())?;
    for v in plane {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes `table` in the table file format.
pub fn encode(table: &Table, out: impl Write) -> io::Result<()> {
    let mut w = Hashing {
        inner: out,
        hasher: FnvHasher::default(),
    };
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[table.procedure().tag()])?;
    w.write_all(&table.prevalence().q().to_bits().to_le_bytes())?;
    w.write_all(&(table.n_top() as u64).to_le_bytes())?;
    match table {
        Table::R1(t) => {
            write_f64s(&mut w, t.h_plane())?;
            write_f64s(&mut w, t.g_plane())?;
            write_u32s(&mut w, t.choice_h_plane())?;
            write_u32s(&mut w, t.choice_g_plane())?;
        }
        Table::R3(t) => {
            write_f64s(&mut w, t.e_plane())?;
            write_f64s(&mut w, t.d_plane())?;
            write_u32s(&mut w, t.choice_e_plane())?;
            write_u32s(&mut w, t.choice_d_plane())?;
        }
    }
    let sum = w.hasher.finish();
    let mut out = w.inner;
    out.write_all(&sum.to_le_bytes())?;
    out.flush()
}

/// FNV-1a 64 of `bytes`.
pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8], DecodeError> {
        if self.bytes.len() < n {
            return Err(DecodeError::Truncated(field));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u64(&mut self, field: &'static str) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }

    fn plane_len(&mut self, plane: &'static str, expected: usize) -> Result<usize, DecodeError> {
        let found = self.u64(plane)?;
        if found != expected as u64 {
            return Err(DecodeError::PlaneLength {
                plane,
                expected: expected as u64,
                found,
            });
        }
        Ok(expected)
    }

    fn f64s(&mut self, plane: &'static str, expected: usize) -> Result<Vec<f64>, DecodeError> {
        let len = self.plane_len(plane, expected)?;
        let raw = self.take(len * 8, plane)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u32s(&mut self, plane: &'static str, expected: usize) -> Result<Vec<u32>, DecodeError> {
        let len = self.plane_len(plane, expected)?;
        let raw = self.take(len * 4, plane)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses a complete table file. The checksum is verified before any plane
/// is read, so a corrupt file never yields a table.
pub fn decode(bytes: &[u8]) -> Result<Table, DecodeError> {
    if bytes.len() < 4 {
        return Err(DecodeError::Truncated("magic"));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DecodeError::Magic(magic));
    }
    if bytes.len() < HEADER_LEN + 8 {
        return Err(DecodeError::Truncated("header"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = checksum(body);
    if stored != computed {
        return Err(DecodeError::Checksum { stored, computed });
    }

    let mut cur = Cursor { bytes: &body[4..] };
    let version = u32::from_le_bytes(cur.take(4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(DecodeError::Version(version));
    }
    let tag = cur.take(1, "procedure")?[0];
    let procedure = Procedure::from_tag(tag).ok_or(DecodeError::ProcedureTag(tag))?;
    let q = f64::from_bits(cur.u64("q")?);
    let prevalence = Prevalence::new(q).map_err(DecodeError::InvalidQ)?;
    let n_top_raw = cur.u64("n_top")?;
    // every plane has at least n_top + 1 entries of 4 bytes
    if n_top_raw > u32::MAX as u64 || n_top_raw.saturating_mul(4) > body.len() as u64 {
        return Err(DecodeError::NTop(n_top_raw));
    }
    let n_top = n_top_raw as usize;
    let line = n_top + 1;
    let tri = n_top * (n_top + 1) / 2;

    let table = match procedure {
        Procedure::R1 => {
            let h = cur.f64s("H", line)?;
            let g = cur.f64s("G", tri)?;
            let ch = cur.u32s("choice_H", line)?;
            let cg = cur.u32s("choice_G", tri)?;
            Table::R1(
                R1Table::from_planes(prevalence, n_top, h, g, ch, cg)
                    .map_err(DecodeError::Table)?,
            )
        }
        Procedure::R3 => {
            let e = cur.f64s("E", line)?;
            let d = cur.f64s("D", line)?;
            let ce = cur.u32s("choice_E", line)?;
            let cd = cur.u32s("choice_D", line)?;
            Table::R3(
                R3Table::from_planes(prevalence, n_top, e, d, ce, cd)
                    .map_err(DecodeError::Table)?,
            )
        }
    };
    if !cur.bytes.is_empty() {
        return Err(DecodeError::Trailing(cur.bytes.len()));
    }
    Ok(table)
}

/// Writes `table` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn save_table(table: &Table, path: &Path) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        encode(table, &mut w).map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Reads a table, requiring the given procedure and the exact bit pattern of `expected_q`.
pub fn load_table(
    path: &Path,
    expected_q: f64,
    expected_procedure: Procedure,
) -> Result<Table, StoreError> {
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let fail = |source| StoreError::Decode {
        path: path.to_path_buf(),
        source,
    };
    let table = decode(&bytes).map_err(fail)?;
    if table.procedure() != expected_procedure {
        return Err(fail(DecodeError::Procedure {
            expected: expected_procedure,
            found: table.procedure(),
        }));
    }
    let found = table.prevalence().q().to_bits();
    if found != expected_q.to_bits() {
        return Err(fail(DecodeError::Q {
            expected: expected_q.to_bits(),
            found,
        }));
    }
    Ok(table)
}

/// Directory of table files named by procedure, q bit pattern, size and
/// engine variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$GTDP_CACHE_DIR`, else `$XDG_CACHE_HOME/gtdp`, else `$HOME/.cache/gtdp`.
    pub fn default_dir() -> Option<PathBuf> {
        let var = |k| {
            std::env::var_os(k)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        };
        var(CACHE_ENV)
            .or_else(|| var("XDG_CACHE_HOME").map(|p| p.join("gtdp")))
            .or_else(|| var("HOME").map(|p| p.join(".cache").join("gtdp")))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn prefix(spec: &TableSpec) -> String {
        format!(
            "{}-{:016x}-",
            spec.procedure.name(),
            spec.prevalence.q().to_bits()
        )
    }

    pub fn path_for(&self, spec: &TableSpec) -> PathBuf {
        self.dir.join(format!(
            "{}{}{}.gtdp",
            Self::prefix(spec),
            spec.n_top,
            spec.variant()
        ))
    }

    /// Smallest cached table of the same procedure, q and variant covering `spec.n_top`.
    pub fn lookup(&self, spec: &TableSpec) -> Result<Option<(Table, PathBuf)>, StoreError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(StoreError::Io {
                    path: self.dir.clone(),
                    source,
                })
            }
        };
        let prefix = Self::prefix(spec);
        let suffix = format!("{}.gtdp", spec.variant());
        let mut best: Option<(usize, PathBuf)> = None;
        for entry in entries.flatten() {
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(size) = name
                .strip_prefix(&prefix)
                .and_then(|r| r.strip_suffix(&suffix))
                .filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|r| r.parse::<usize>().ok())
            else {
                continue;
            };
            if size >= spec.n_top && best.as_ref().map_or(true, |(b, _)| size < *b) {
                best = Some((size, entry.path()));
            }
        }
        match best {
            Some((_, path)) => {
                let table = load_table(&path, spec.prevalence.q(), spec.procedure)?;
                Ok(Some((table, path)))
            }
            None => Ok(None),
        }
    }

    pub fn store(&self, spec: &TableSpec, table: &Table) -> Result<PathBuf, StoreError> {
        fs::create_dir_all(&self.dir).map_err(|source| StoreError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.path_for(spec);
        save_table(table, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r3(q: f64, n: usize) -> Table {
        Table::R3(R3Table::build(Prevalence::new(q).unwrap(), n, false).unwrap())
    }

    fn bytes_of(t: &Table) -> Vec<u8> {
        let mut v = Vec::new();
        encode(t, &mut v).unwrap();
        v
    }

    #[test]
    fn fnv1a_reference_vectors() {
        assert_eq!(checksum(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(checksum(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(checksum(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn header_layout() {
        let t = r3(0.9, 3);
        let b = bytes_of(&t);
        assert_eq!(&b[..4], b"GTDP");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(b[8], 3);
        assert_eq!(
            u64::from_le_bytes(b[9..17].try_into().unwrap()),
            0.9f64.to_bits()
        );
        assert_eq!(u64::from_le_bytes(b[17..25].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(b[25..33].try_into().unwrap()), 4);
        // 4 planes of 4 entries: two of f64, two of u32, plus length prefixes
        assert_eq!(b.len(), HEADER_LEN + 4 * 8 + 2 * 32 + 2 * 16 + 8);
        let sum = u64::from_le_bytes(b[b.len() - 8..].try_into().unwrap());
        assert_eq!(sum, checksum(&b[..b.len() - 8]));
    }

    #[test]
    fn decode_errors_name_the_field() {
        let b = bytes_of(&r3(0.9, 5));
        assert_eq!(decode(&b[..2]), Err(DecodeError::Truncated("magic")));
        assert!(matches!(decode(b"XXXXYYYY"), Err(DecodeError::Magic(_))));
        assert!(matches!(
            decode(&b[..b.len() - 1]),
            Err(DecodeError::Checksum { .. })
        ));
        let mut bad = b.clone();
        bad[4] = 9;
        let body = bad.len() - 8;
        let sum = checksum(&bad[..body]);
        bad[body..].copy_from_slice(&sum.to_le_bytes());
        assert_eq!(decode(&bad), Err(DecodeError::Version(9)));

        let mut bad = b.clone();
        bad[25] = 7; // E plane length
        let sum = checksum(&bad[..body]);
        bad[body..].copy_from_slice(&sum.to_le_bytes());
        assert!(matches!(
            decode(&bad),
            Err(DecodeError::PlaneLength { plane: "E", .. })
        ));
    }
}
