//! NPY v1.0 reader and writer for 2-D little-endian float arrays.
//!
//! Layout: the magic string `\x93NUMPY`, version bytes `1 0`, a little-endian
//! `u16` header length, then an ASCII Python dict literal such as
//! `{'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }` padded with
//! spaces and a final newline so the data starts on a 64-byte boundary.
//! Data follows in C (row-major) order. Versions 2.0 and 3.0 are rejected.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{MetricsError, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;

/// On-disk element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "<f4")]
    F4,
    #[default]
    #[serde(rename = "<f8")]
    F8,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
        }
    }

    fn item_size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descr())
    }
}

impl FromStr for Dtype {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "<f4" | "f4" | "f32" => Ok(Dtype::F4),
            "<f8" | "f8" | "f64" => Ok(Dtype::F8),
            other => Err(MetricsError::UnsupportedDtype(other.to_string())),
        }
    }
}

/// Parsed header dictionary.
#[derive(Debug, Clone, PartialEq)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

pub fn read_array(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    Ok(read_array_bytes(&bytes)?.with_source(path.display().to_string()))
}

pub fn read_array_bytes(bytes: &[u8]) -> Result<EmbeddingSet> {
    if bytes.len() < PREAMBLE_LEN || &bytes[..6] != MAGIC {
        return Err(MetricsError::NotNpy("missing \\x93NUMPY magic".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(MetricsError::UnsupportedVersion { major, minor });
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + header_len;
    if bytes.len() < data_start {
        return Err(MetricsError::NotNpy(format!(
            "truncated header: expected {header_len} bytes, found {}",
            bytes.len() - PREAMBLE_LEN
        )));
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE_LEN..data_start])
        .map_err(|_| MetricsError::NotNpy("header is not ASCII".into()))?;
    let header = parse_header(text)?;
    let (n, d) = match header.shape[..] {
        [n, d] => (n, d),
        _ => {
            return Err(MetricsError::Shape(format!(
                "expected a 2-D array, found shape {:?}",
                header.shape
            )))
        }
    };
    let count = n
        .checked_mul(d)
        .ok_or_else(|| MetricsError::NotNpy(format!("shape ({n}, {d}) overflows")))?;
    let expected = count * header.dtype.item_size();
    let payload = &bytes[data_start..];
    if payload.len() != expected {
        return Err(MetricsError::NotNpy(format!(
            "data section holds {} bytes, shape ({n}, {d}) of {} needs {expected}",
            payload.len(),
            header.dtype
        )));
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    EmbeddingSet::new(Matrix::new(n, d, values)?)
}

pub fn write_array(x: &EmbeddingSet, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let bytes = encode_array(x, dtype)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}

pub fn encode_array(x: &EmbeddingSet, dtype: Dtype) -> Result<Vec<u8>> {
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({}, {}), }}",
        dtype.descr(),
        x.n(),
        x.d()
    );
    // pad with spaces, terminate with '\n', align the data start
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let total = unpadded.div_ceil(ALIGN) * ALIGN;
    let header_len = total - PREAMBLE_LEN;
    let header_len_u16 = u16::try_from(header_len)
        .map_err(|_| MetricsError::InvalidParameter("NPY v1.0 header exceeds 65535 bytes".into()))?;

    let mut out = Vec::with_capacity(total + x.n() * x.d() * dtype.item_size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len_u16.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(total - 1, b' ');
    out.push(b'\n');
    let values = x.matrix().as_slice();
    match dtype {
        Dtype::F8 => values.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F4 => {
            for v in values {
                let f = *v as f32;
                if !f.is_finite() {
                    return Err(MetricsError::InvalidData(format!("{v} overflows 32-bit storage")));
                }
                out.extend_from_slice(&f.to_le_bytes());
            }
        }
    }
    Ok(out)
}

// --- header dictionary parsing -------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Literal {
    Str(String),
    Bool(bool),
    Int(usize),
    Tuple(Vec<Literal>),
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(bad_header(format!("expected '{}' at offset {}", c as char, self.pos)))
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos] != q {
                    self.pos += 1;
                }
                if self.pos == self.s.len() {
                    return Err(bad_header("unterminated string".into()));
                }
                let text = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
                self.pos += 1;
                Ok(Literal::Str(text))
            }
            Some(open @ (b'(' | b'[')) => {
                let close = if open == b'(' { b')' } else { b']' };
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    if self.peek() == Some(close) {
                        self.pos += 1;
                        break;
                    }
                    items.push(self.literal()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(c) if c == close => {}
                        _ => return Err(bad_header("malformed tuple".into())),
                    }
                }
                Ok(Literal::Tuple(items))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                // Python 2 era writers emit long suffixes such as `3L`
                let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                if self.s.get(self.pos) == Some(&b'L') {
                    self.pos += 1;
                }
                digits
                    .parse()
                    .map(Literal::Int)
                    .map_err(|_| bad_header(format!("integer {digits} out of range")))
            }
            Some(_) => {
                let rest = &self.s[self.pos..];
                for (word, value) in [(&b"True"[..], true), (&b"False"[..], false)] {
                    if rest.starts_with(word) {
                        self.pos += word.len();
                        return Ok(Literal::Bool(value));
                    }
                }
                Err(bad_header(format!("unexpected token at offset {}", self.pos)))
            }
            None => Err(bad_header("unexpected end of header".into())),
        }
    }
}

fn bad_header(msg: String) -> MetricsError {
    MetricsError::NotNpy(format!("malformed header: {msg}"))
}

fn parse_header(text: &str) -> Result<Header> {
    let mut cur = Cursor { s: text.as_bytes(), pos: 0 };
    cur.expect(b'{')?;
    let (mut descr, mut fortran, mut shape) = (None, None, None);
    loop {
        if cur.peek() == Some(b'}') {
            cur.pos += 1;
            break;
        }
        let key = match cur.literal()? {
            Literal::Str(k) => k,
            other => return Err(bad_header(format!("non-string key {other:?}"))),
        };
        cur.expect(b':')?;
        let value = cur.literal()?;
        match (key.as_str(), value) {
            ("descr", Literal::Str(s)) => descr = Some(s),
            ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
            ("shape", Literal::Tuple(items)) => {
                let dims = items
                    .into_iter()
                    .map(|l| match l {
                        Literal::Int(v) => Ok(v),
                        other => Err(bad_header(format!("non-integer dimension {other:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                shape = Some(dims);
            }
            (k, v) => return Err(bad_header(format!("unexpected entry {k:?}: {v:?}"))),
        }
        match cur.peek() {
            Some(b',') => cur.pos += 1,
            Some(b'}') => {}
            _ => return Err(bad_header("expected ',' or '}'".into())),
        }
    }
    if cur.peek().is_some() {
        return Err(bad_header("trailing characters after dictionary".into()));
    }
    let descr = descr.ok_or_else(|| bad_header("missing 'descr'".into()))?;
    let fortran = fortran.ok_or_else(|| bad_header("missing 'fortran_order'".into()))?;
    let shape = shape.ok_or_else(|| bad_header("missing 'shape'".into()))?;
    if fortran {
        return Err(MetricsError::UnsupportedLayout(
            "fortran_order is True; only C-order arrays are supported".into(),
        ));
    }
    let dtype = match descr.as_str() {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        _ => return Err(MetricsError::UnsupportedDtype(descr)),
    };
    Ok(Header { dtype, shape })
}
