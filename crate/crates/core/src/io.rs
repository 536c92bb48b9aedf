//! Datasets and on-disk formats.
//!
//! `BJLD` layout (all little-endian):
//!
//! | offset | size  | field                         |
//! |--------|-------|-------------------------------|
//! | 0      | 4     | magic `b"BJLD"`               |
//! | 4      | 4     | version, `u32` = 1            |
//! | 8      | 8     | point count `N`, `u64`        |
//! | 16     | 8     | dimension `D`, `u64`          |
//! | 24     | 8·N·D | entries, `f64`, row-major     |
//!
//! CSV is one point per line, comma separated, no header.
//! Reports are JSON with a `schema_version` field and reals written with 17
//! significant digits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::matrix::{DenseMatrix, Scalar};

pub const BJLD_MAGIC: [u8; 4] = *b"BJLD";
pub const BJLD_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Version stamped into every JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Bjld,
}

impl DataFormat {
    /// Guesses from the file extension, defaulting to BJLD.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Bjld,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "bjld" => Ok(DataFormat::Bjld),
            other => Err(Error::Input(format!("unknown data format {other:?}"))),
        }
    }
}

/// `N` points in `R^D`, one per row of `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub points: DenseMatrix<T>,
    pub source: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(points: DenseMatrix<T>, source: impl Into<String>) -> Result<Self> {
        if points.rows() < 2 {
            return Err(Error::Input(format!("a dataset needs N >= 2 points, got {}", points.rows())));
        }
        Ok(Self { points, source: source.into() })
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }

    pub fn d(&self) -> usize {
        self.points.cols()
    }

    pub fn point(&self, i: usize) -> &[T] {
        self.points.row(i)
    }

    /// `x_u - x_v`.
    pub fn difference(&self, u: usize, v: usize) -> Vec<T> {
        self.point(u).iter().zip(self.point(v)).map(|(&a, &b)| a - b).collect()
    }
}

pub fn load(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let source = path.display().to_string();
    match format {
        DataFormat::Bjld => decode_bjld(&bytes, source),
        DataFormat::Csv => decode_csv(&bytes, source),
    }
}

pub fn save(dataset: &Dataset<f64>, path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        DataFormat::Bjld => out.write_all(&encode_bjld(dataset))?,
        DataFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            for i in 0..dataset.n() {
                w.write_record(dataset.point(i).iter().map(|x| format!("{x:?}")))
                    .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn encode_bjld(dataset: &Dataset<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * dataset.n() * dataset.d());
    out.extend_from_slice(&BJLD_MAGIC);
    out.extend_from_slice(&BJLD_VERSION.to_le_bytes());
    out.extend_from_slice(&(dataset.n() as u64).to_le_bytes());
    out.extend_from_slice(&(dataset.d() as u64).to_le_bytes());
    for x in dataset.points.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_bjld(bytes: &[u8], source: impl Into<String>) -> Result<Dataset<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated { expected: HEADER_LEN, found: bytes.len() }.into());
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    if magic != BJLD_MAGIC {
        return Err(FormatError::BadMagic(magic).into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != BJLD_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let d = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    if n < 2 || d < 1 {
        return Err(FormatError::Malformed(format!("header declares N={n}, D={d}")).into());
    }
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| FormatError::Malformed("header sizes overflow".into()))?;
    if bytes.len() != expected {
        if bytes.len() < expected {
            return Err(FormatError::Truncated { expected, found: bytes.len() }.into());
        }
        return Err(FormatError::Malformed(format!("{} trailing bytes", bytes.len() - expected)).into());
    }
    let mut data = Vec::with_capacity(n * d);
    for (idx, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !x.is_finite() {
            return Err(FormatError::NonFinite { row: idx / d, col: idx % d }.into());
        }
        data.push(x);
    }
    Dataset::new(DenseMatrix::new(n, d, data)?, source)
}

pub fn decode_csv(bytes: &[u8], source: impl Into<String>) -> Result<Dataset<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FormatError::Malformed(e.to_string()))?;
        let mut values = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let x: f64 =
                field.parse().map_err(|_| FormatError::Malformed(format!("row {row}, column {col}: {field:?}")))?;
            if !x.is_finite() {
                return Err(FormatError::NonFinite { row, col }.into());
            }
            values.push(x);
        }
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(FormatError::Malformed(format!(
                    "row {row} has {} fields, expected {}",
                    values.len(),
                    first.len()
                ))
                .into());
            }
        }
        rows.push(values);
    }
    if rows.len() < 2 {
        return Err(FormatError::Malformed(format!("need at least 2 points, found {}", rows.len())).into());
    }
    Dataset::new(DenseMatrix::from_rows(&rows)?, source)
}

/// JSON formatter writing every `f64` with 17 significant digits.
#[derive(Debug, Default, Clone, Copy)]
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value == 0.0 {
            writer.write_all(if value.is_sign_negative() { b"-0.0" } else { b"0.0" })
        } else {
            write!(writer, "{value:.16e}")
        }
    }
}

/// A report wrapped with its schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    pub kind: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_report_json<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let wrapped = Versioned { schema_version: REPORT_SCHEMA_VERSION, kind: kind.to_string(), body };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    wrapped.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes utf-8"))
}

pub fn save_report<T: Serialize>(kind: &str, body: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(to_report_json(kind, body)?.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_report<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Versioned<T>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
