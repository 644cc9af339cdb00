//! Word vector tables and their word2vec-compatible text and binary files.
//!
//! Both formats start with a `V D` header line. Text records are
//! `surface v1 … vD` lines with six significant digits; binary records are
//! the surface, one space and `D` little-endian `f32`s. Loading detects the
//! format from the first record.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelStoreError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("header announces {expected} records, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("record {record} (`{surface}`) has {found} components, expected {expected}")]
    DimensionMismatch {
        record: usize,
        surface: String,
        expected: usize,
        found: usize,
    },
    #[error("surface `{0}` occurs more than once")]
    DuplicateSurface(String),
    #[error("record {record} (`{surface}`) has a non-finite component")]
    NonFinite { record: usize, surface: String },
    #[error("malformed record {record}: {reason}")]
    MalformedRecord { record: usize, reason: String },
    #[error("cannot save an empty vector table")]
    EmptyTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorFormat {
    Text,
    Binary,
}

/// Words with one dense `f32` vector each, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f32>,
}

impl WordVectors {
    /// Build a table; fails on duplicate surfaces, ragged input or
    /// non-finite values.
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self, ModelStoreError> {
        if data.len() != words.len() * dim {
            return Err(ModelStoreError::CountMismatch {
                expected: words.len(),
                found: data.len().checked_div(dim).unwrap_or(0),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelStoreError::DuplicateSurface(w.clone()));
            }
            if data[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite()) {
                return Err(ModelStoreError::NonFinite {
                    record: i,
                    surface: w.clone(),
                });
            }
        }
        Ok(WordVectors {
            words,
            index,
            dim,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Exact match first, then the lowercased form.
    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.index_of(word).or_else(|| {
            let lower = word.to_lowercase();
            if lower != word {
                self.index_of(&lower)
            } else {
                None
            }
        })
    }

    pub fn vector(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.lookup(word).map(|i| self.vector(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim.max(1)))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// A copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        WordVectors {
            words: self.words.clone(),
            index: self.index.clone(),
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Format like C's `%g` with six significant digits.
pub fn format_g6(v: f32) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let mantissa = trim_zeros(mantissa.to_owned());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn write_vectors<W: Write>(table: &WordVectors, format: VectorFormat, w: W) -> Result<(), ModelStoreError> {
    if table.is_empty() {
        return Err(ModelStoreError::EmptyTable);
    }
    let mut w = BufWriter::new(w);
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for (word, vec) in table.iter() {
        match format {
            VectorFormat::Text => {
                w.write_all(word.as_bytes())?;
                for v in vec {
                    write!(w, " {}", format_g6(*v))?;
                }
                w.write_all(b"\n")?;
            }
            VectorFormat::Binary => {
                w.write_all(word.as_bytes())?;
                w.write_all(b" ")?;
                for v in vec {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_vectors<P: AsRef<Path>>(table: &WordVectors, path: P, format: VectorFormat) -> Result<(), ModelStoreError> {
    if table.is_empty() {
        return Err(ModelStoreError::EmptyTable);
    }
    write_vectors(table, format, fs::File::create(path)?)
}

pub fn load_vectors<P: AsRef<Path>>(path: P) -> Result<WordVectors, ModelStoreError> {
    parse_vectors(&fs::read(path)?)
}

/// Parse a vector file held in memory, detecting its format.
pub fn parse_vectors(bytes: &[u8]) -> Result<WordVectors, ModelStoreError> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ModelStoreError::MalformedHeader("missing newline".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| ModelStoreError::MalformedHeader("not UTF-8".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, dim) = match fields.as_slice() {
        [n, d] => (
            n.parse::<usize>()
                .map_err(|_| ModelStoreError::MalformedHeader(format!("bad count `{n}`")))?,
            d.parse::<usize>()
                .map_err(|_| ModelStoreError::MalformedHeader(format!("bad dimension `{d}`")))?,
        ),
        _ => {
            return Err(ModelStoreError::MalformedHeader(format!(
                "expected `V D`, got `{header}`"
            )))
        }
    };
    if dim == 0 {
        return Err(ModelStoreError::MalformedHeader("dimension is zero".into()));
    }
    let payload = &bytes[nl + 1..];
    let (words, data) = match detect_format(payload) {
        // Float bytes can pass for a text line; a binary file then fails
        // as text but parses as binary.
        VectorFormat::Text => match parse_text(payload, n, dim) {
            Ok(parsed) => parsed,
            Err(e) => parse_binary(payload, n, dim).map_err(|_| e)?,
        },
        VectorFormat::Binary => parse_binary(payload, n, dim)?,
    };
    WordVectors::new(words, dim, data)
}

/// Text when the first record line is UTF-8 whose fields after the surface
/// all parse as numbers.
pub fn detect_format(payload: &[u8]) -> VectorFormat {
    let end = payload.iter().position(|&b| b == b'\n').unwrap_or(payload.len());
    let Ok(line) = std::str::from_utf8(&payload[..end]) else {
        return VectorFormat::Binary;
    };
    let mut fields = line.split_whitespace();
    if fields.next().is_none() {
        return VectorFormat::Text;
    }
    let mut any = false;
    for f in fields {
        if f.parse::<f32>().is_err() {
            return VectorFormat::Binary;
        }
        any = true;
    }
    if any {
        VectorFormat::Text
    } else {
        VectorFormat::Binary
    }
}

fn parse_text(payload: &[u8], n: usize, dim: usize) -> Result<(Vec<String>, Vec<f32>), ModelStoreError> {
    let text = std::str::from_utf8(payload).map_err(|e| ModelStoreError::MalformedRecord {
        record: 0,
        reason: format!("invalid UTF-8: {e}"),
    })?;
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for (record, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        if record >= n {
            return Err(ModelStoreError::CountMismatch {
                expected: n,
                found: text.lines().filter(|l| !l.trim().is_empty()).count(),
            });
        }
        let mut fields = line.split_whitespace();
        let surface = fields.next().expect("non-empty line").to_owned();
        let before = data.len();
        for f in fields {
            let v = f.parse::<f32>().map_err(|_| ModelStoreError::MalformedRecord {
                record,
                reason: format!("`{f}` is not a number"),
            })?;
            data.push(v);
        }
        let found = data.len() - before;
        if found != dim {
            return Err(ModelStoreError::DimensionMismatch {
                record,
                surface,
                expected: dim,
                found,
            });
        }
        words.push(surface);
    }
    if words.len() != n {
        return Err(ModelStoreError::CountMismatch {
            expected: n,
            found: words.len(),
        });
    }
    Ok((words, data))
}

fn parse_binary(payload: &[u8], n: usize, dim: usize) -> Result<(Vec<String>, Vec<f32>), ModelStoreError> {
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    let mut pos = 0;
    let record_bytes = 4 * dim;
    loop {
        // word2vec writers put a newline after each record; accept it.
        while pos < payload.len() && payload[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == payload.len() {
            break;
        }
        let record = words.len();
        if record >= n {
            return Err(ModelStoreError::CountMismatch {
                expected: n,
                found: n + 1,
            });
        }
        let space = payload[pos..]
            .iter()
            .position(|&b| b == b' ')
            .ok_or_else(|| ModelStoreError::MalformedRecord {
                record,
                reason: "missing space after surface".into(),
            })?;
        let surface = std::str::from_utf8(&payload[pos..pos + space])
            .map_err(|_| ModelStoreError::MalformedRecord {
                record,
                reason: "surface is not UTF-8".into(),
            })?
            .to_owned();
        pos += space + 1;
        if payload.len() - pos < record_bytes {
            return Err(ModelStoreError::DimensionMismatch {
                record,
                surface,
                expected: dim,
                found: (payload.len() - pos) / 4,
            });
        }
        data.extend(
            payload[pos..pos + record_bytes]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        );
        pos += record_bytes;
        words.push(surface);
    }
    if words.len() != n {
        return Err(ModelStoreError::CountMismatch {
            expected: n,
            found: words.len(),
        });
    }
    Ok((words, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> WordVectors {
        WordVectors::new(
            vec!["a".into(), "b".into()],
            3,
            vec![0.5, -1.25, 3.0, 1e-7, 123456.7, -0.000123],
        )
        .unwrap()
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(format_g6(0.0), "0");
        assert_eq!(format_g6(0.5), "0.5");
        assert_eq!(format_g6(-1.25), "-1.25");
        assert_eq!(format_g6(123456.7), "123457");
        assert_eq!(format_g6(1234567.0), "1.23457e+06");
        assert_eq!(format_g6(1e-7), "1e-07");
        assert_eq!(format_g6(-0.000123), "-0.000123");
        assert_eq!(format_g6(0.1234567), "0.123457");
        assert_eq!(format_g6(9.999996), "10");
    }

    #[test]
    fn text_layout() {
        let mut buf = Vec::new();
        write_vectors(&table(), VectorFormat::Text, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "2 3\na 0.5 -1.25 3\nb 1e-07 123457 -0.000123\n");
    }

    #[test]
    fn binary_layout() {
        let t = WordVectors::new(vec!["x".into()], 1, vec![1.0]).unwrap();
        let mut buf = Vec::new();
        write_vectors(&t, VectorFormat::Binary, &mut buf).unwrap();
        assert_eq!(buf, b"1 1\nx \x00\x00\x80\x3f");
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let t = table();
        let mut buf = Vec::new();
        write_vectors(&t, VectorFormat::Binary, &mut buf).unwrap();
        assert_eq!(detect_format(&buf[4..]), VectorFormat::Binary);
        assert_eq!(parse_vectors(&buf).unwrap(), t);
    }

    #[test]
    fn binary_record_that_looks_like_text() {
        let mut buf = b"1 1\n\xc3\xa9 ".to_vec();
        let v = f32::from_le_bytes(*b"7\n1 ");
        buf.extend(v.to_le_bytes());
        let table = parse_vectors(&buf).unwrap();
        assert_eq!(table.words(), ["é"]);
        assert_eq!(table.vector(0)[0].to_bits(), v.to_bits());
    }

    #[test]
    fn accepts_word2vec_record_newlines() {
        let mut buf = b"2 1\na ".to_vec();
        buf.extend(1.0f32.to_le_bytes());
        buf.extend(b"\nb ");
        buf.extend(2.0f32.to_le_bytes());
        buf.push(b'\n');
        let t = parse_vectors(&buf).unwrap();
        assert_eq!(t.get("b"), Some(&[2.0f32][..]));
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            parse_vectors(b"2 x\na 1\n"),
            Err(ModelStoreError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_vectors(b"2 1\na 1\nb 2\nc 3\n"),
            Err(ModelStoreError::CountMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(
            parse_vectors(b"2 2\na 1 2\nb 3\n"),
            Err(ModelStoreError::DimensionMismatch { record: 1, .. })
        ));
        assert!(matches!(
            parse_vectors(b"2 1\na 1\na 2\n"),
            Err(ModelStoreError::DuplicateSurface(_))
        ));
        assert!(matches!(
            parse_vectors(b"1 2\na 1 NaN\n"),
            Err(ModelStoreError::NonFinite { .. })
        ));
    }

    #[test]
    fn empty_table_is_not_saved() {
        let t = WordVectors::new(vec![], 3, vec![]).unwrap();
        assert!(matches!(
            write_vectors(&t, VectorFormat::Text, Vec::new()),
            Err(ModelStoreError::EmptyTable)
        ));
    }

    #[test]
    fn lookup_falls_back_to_lowercase() {
        let t = WordVectors::new(vec!["paris".into(), "Rome".into()], 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(t.lookup("Paris"), Some(0));
        assert_eq!(t.lookup("Rome"), Some(1));
        assert_eq!(t.lookup("rome"), None);
    }
}
