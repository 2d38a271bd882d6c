//! Binary and CSV matrix files.
//!
//! Sparse (`SSNM`): magic, u8 version, u8 dtype, u16 n, u16 m, u64 rows,
//! u64 cols, values row-major, then one index byte per stored slot.
//! Dense (`SSDM`): magic, u8 version, u8 dtype, u64 rows, u64 cols, data.
//! All integers and elements are little-endian.

use thiserror::Error;

use crate::element::{DType, Element};
use crate::sparse::{DenseMatrix, SparseError, SparsityPattern, StructuredSparseMatrix};

pub const SPARSE_MAGIC: &[u8; 4] = b"SSNM";
pub const DENSE_MAGIC: &[u8; 4] = b"SSDM";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("unrecognised file magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown dtype code {0}")]
    UnknownDType(u8),
    #[error("file holds {found} elements, expected {expected}")]
    DTypeMismatch { expected: DType, found: DType },
    #[error("file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("{extra} trailing bytes after matrix data")]
    Trailing { extra: usize },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Decoded file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Header {
    Sparse { dtype: DType, pattern: SparsityPattern, rows: usize, cols: usize },
    Dense { dtype: DType, rows: usize, cols: usize },
}

impl Header {
    pub fn dtype(&self) -> DType {
        match *self {
            Header::Sparse { dtype, .. } | Header::Dense { dtype, .. } => dtype,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Header::Sparse { rows, cols, .. } | Header::Dense { rows, cols, .. } => (rows, cols),
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(FormatError::Truncated { needed: self.pos.saturating_add(n), found: self.buf.len() })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u64(&mut self) -> Result<usize, FormatError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| FormatError::Truncated { needed: usize::MAX, found: self.buf.len() })
    }

    fn finish(&self) -> Result<(), FormatError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            extra => Err(FormatError::Trailing { extra }),
        }
    }
}

fn read_header(c: &mut Cursor<'_>) -> Result<Header, FormatError> {
    let magic: [u8; 4] = c.take(4)?.try_into().expect("4 bytes");
    let sparse = match &magic {
        m if m == SPARSE_MAGIC => true,
        m if m == DENSE_MAGIC => false,
        _ => return Err(FormatError::BadMagic(magic)),
    };
    let version = c.u8()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let code = c.u8()?;
    let dtype = DType::from_code(code).ok_or(FormatError::UnknownDType(code))?;
    if sparse {
        let (n, m) = (c.u16()? as usize, c.u16()? as usize);
        let pattern = SparsityPattern::new(n, m)?;
        Ok(Header::Sparse { dtype, pattern, rows: c.u64()?, cols: c.u64()? })
    } else {
        Ok(Header::Dense { dtype, rows: c.u64()?, cols: c.u64()? })
    }
}

/// Reads only the header, to pick the element type before a full read.
pub fn peek_header(bytes: &[u8]) -> Result<Header, FormatError> {
    read_header(&mut Cursor { buf: bytes, pos: 0 })
}

fn read_elements<T: Element>(c: &mut Cursor<'_>, count: usize) -> Result<Vec<T>, FormatError> {
    let size = T::DTYPE.size_bytes();
    let raw = c.take(count.saturating_mul(size))?;
    Ok(raw.chunks_exact(size).map(T::read_le).collect())
}

fn check_dtype<T: Element>(found: DType) -> Result<(), FormatError> {
    if found != T::DTYPE {
        return Err(FormatError::DTypeMismatch { expected: T::DTYPE, found });
    }
    Ok(())
}

pub fn encode_sparse<T: Element>(a: &StructuredSparseMatrix<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SPARSE_MAGIC);
    out.push(VERSION);
    out.push(T::DTYPE.code());
    out.extend_from_slice(&(a.pattern().n() as u16).to_le_bytes());
    out.extend_from_slice(&(a.pattern().m() as u16).to_le_bytes());
    out.extend_from_slice(&(a.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(a.cols() as u64).to_le_bytes());
    for &v in a.values() {
        v.write_le(&mut out);
    }
    out.extend_from_slice(a.col_idx());
    out
}

/// Parses and validates a sparse file.
pub fn decode_sparse<T: Element>(bytes: &[u8]) -> Result<StructuredSparseMatrix<T>, FormatError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let Header::Sparse { dtype, pattern, rows, cols } = read_header(&mut c)? else {
        return Err(FormatError::BadMagic(*DENSE_MAGIC));
    };
    check_dtype::<T>(dtype)?;
    let slots = rows.saturating_mul(pattern.stored_per_row(cols));
    let values = read_elements(&mut c, slots)?;
    let idx = c.take(slots)?.to_vec();
    c.finish()?;
    Ok(StructuredSparseMatrix::from_parts(pattern, rows, cols, values, idx)?)
}

pub fn encode_dense<T: Element>(d: &DenseMatrix<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DENSE_MAGIC);
    out.push(VERSION);
    out.push(T::DTYPE.code());
    out.extend_from_slice(&(d.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(d.cols() as u64).to_le_bytes());
    for &v in d.data() {
        v.write_le(&mut out);
    }
    out
}

pub fn decode_dense<T: Element>(bytes: &[u8]) -> Result<DenseMatrix<T>, FormatError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let Header::Dense { dtype, rows, cols } = read_header(&mut c)? else {
        return Err(FormatError::BadMagic(*SPARSE_MAGIC));
    };
    check_dtype::<T>(dtype)?;
    let data = read_elements(&mut c, rows.saturating_mul(cols))?;
    c.finish()?;
    Ok(DenseMatrix::from_vec(rows, cols, data)?)
}

/// One row per line, comma separated; blank lines are skipped. Empty
/// matrices read back as 0x0.
pub fn read_csv<T: Element>(text: &str) -> Result<DenseMatrix<T>, FormatError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<T>())
            .collect::<Result<Vec<T>, _>>()
            .map_err(|_| FormatError::Csv { line: i + 1, msg: format!("not a {} value", T::DTYPE) })?;
        if rows.first().is_some_and(|r: &Vec<T>| r.len() != row.len()) {
            return Err(FormatError::Csv { line: i + 1, msg: "ragged row".into() });
        }
        rows.push(row);
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

pub fn write_csv<T: Element>(d: &DenseMatrix<T>) -> String {
    let mut out = String::new();
    for r in 0..d.rows() {
        let line: Vec<String> = d.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
