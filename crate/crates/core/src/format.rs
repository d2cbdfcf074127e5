//! Binary sample files and their JSON sidecars.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   8 bytes   "LWES1\0\0\0" (raw samples) or "LWEB1\0\0\0" (binary examples)
//! d       u64
//! m       u64
//! period  f64
//! rows    m × (d × f64, then f64 y′  |  i8 label ±1)
//! ```
//!
//! The sidecar lives at `<file>.json`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduction::{BinaryExample, Label};
use crate::sampler::RawSample;

pub const MAGIC_SAMPLES: [u8; 8] = *b"LWES1\0\0\0";
pub const MAGIC_EXAMPLES: [u8; 8] = *b"LWEB1\0\0\0";
pub const HEADER_LEN: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Samples,
    Examples,
}

impl FileKind {
    fn magic(self) -> [u8; 8] {
        match self {
            FileKind::Samples => MAGIC_SAMPLES,
            FileKind::Examples => MAGIC_EXAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub kind: FileKind,
    pub d: u64,
    pub m: u64,
    pub period: f64,
}

impl Header {
    fn row_len(&self) -> u64 {
        match self.kind {
            FileKind::Samples => 8 * (self.d + 1),
            FileKind::Examples => 8 * self.d + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisKind {
    Alternative,
    Null,
}

/// Metadata written next to every data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: SampleKind,
    pub d: usize,
    pub m: usize,
    pub period: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    pub hypothesis: HypothesisKind,
    pub seed: u64,
    /// Whether rows carry `±1` labels instead of raw `y′`.
    #[serde(default)]
    pub binarized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<Vec<f64>>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let target = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(sidecar)?;
    text.push('\n');
    std::fs::write(&target, text).map_err(|e| Error::io(&target, e))
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let target = sidecar_path(path);
    let text = std::fs::read_to_string(&target).map_err(|e| Error::io(&target, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Streaming writer; the row count in the header is patched on [`finish`](Self::finish).
pub struct DataWriter {
    out: BufWriter<File>,
    path: PathBuf,
    header: Header,
    rows: u64,
}

impl DataWriter {
    pub fn create(path: &Path, kind: FileKind, d: usize, period: f64) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = DataWriter {
            out: BufWriter::with_capacity(1 << 20, file),
            path: path.to_path_buf(),
            header: Header {
                kind,
                d: d as u64,
                m: 0,
                period,
            },
            rows: 0,
        };
        w.write_header()?;
        Ok(w)
    }

    fn io(&self, e: std::io::Error) -> Error {
        Error::io(&self.path, e)
    }

    fn write_header(&mut self) -> Result<()> {
        let h = self.header;
        let mut buf = Vec::with_capacity(HEADER_LEN as usize);
        buf.extend_from_slice(&h.kind.magic());
        buf.extend_from_slice(&h.d.to_le_bytes());
        buf.extend_from_slice(&h.m.to_le_bytes());
        buf.extend_from_slice(&h.period.to_le_bytes());
        self.out.write_all(&buf).map_err(|e| self.io(e))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() as u64 != self.header.d {
            return Err(Error::invalid(format!(
                "row has dimension {}, file has {}",
                x.len(),
                self.header.d
            )));
        }
        Ok(())
    }

    fn put_x(&mut self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        for v in x {
            self.out.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn push_sample(&mut self, x: &[f64], y_prime: f64) -> Result<()> {
        if self.header.kind != FileKind::Samples {
            return Err(Error::invalid("raw sample written to an example file"));
        }
        self.put_x(x)?;
        self.out.write_all(&y_prime.to_le_bytes()).map_err(|e| self.io(e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn push_example(&mut self, x: &[f64], y: Label) -> Result<()> {
        if self.header.kind != FileKind::Examples {
            return Err(Error::invalid("example written to a raw sample file"));
        }
        self.put_x(x)?;
        self.out.write_all(&y.as_i8().to_le_bytes()).map_err(|e| self.io(e))?;
        self.rows += 1;
        Ok(())
    }

    /// Patch the row count and flush. Returns the final header.
    pub fn finish(mut self) -> Result<Header> {
        self.header.m = self.rows;
        self.out.flush().map_err(|e| self.io(e))?;
        let mut file = self.out.into_inner().map_err(|e| Error::io(&self.path, e.into_error()))?;
        file.seek(SeekFrom::Start(16)).map_err(|e| Error::io(&self.path, e))?;
        file.write_all(&self.rows.to_le_bytes()).map_err(|e| Error::io(&self.path, e))?;
        file.sync_all().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.header)
    }
}

/// A data row of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Sample(RawSample),
    Example(BinaryExample),
}

/// Streaming reader over a data file.
pub struct DataReader {
    input: BufReader<File>,
    path: PathBuf,
    pub header: Header,
    remaining: u64,
    index: u64,
}

impl DataReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut input = BufReader::with_capacity(1 << 20, file);
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let mut raw = [0u8; HEADER_LEN as usize];
        input
            .read_exact(&mut raw)
            .map_err(|_| bad("shorter than the 32-byte header".into()))?;
        let word = |i: usize| <[u8; 8]>::try_from(&raw[8 * i..8 * i + 8]).expect("8 bytes");
        let kind = match word(0) {
            MAGIC_SAMPLES => FileKind::Samples,
            MAGIC_EXAMPLES => FileKind::Examples,
            other => return Err(bad(format!("unknown magic {other:?}"))),
        };
        let header = Header {
            kind,
            d: u64::from_le_bytes(word(1)),
            m: u64::from_le_bytes(word(2)),
            period: f64::from_le_bytes(word(3)),
        };
        if header.d == 0 || !(header.period > 0.0 && header.period.is_finite()) {
            return Err(bad(format!("bad header d = {}, period = {}", header.d, header.period)));
        }
        let expected = header.m.checked_mul(header.row_len()).and_then(|b| b.checked_add(HEADER_LEN));
        if expected != Some(len) {
            return Err(bad(format!(
                "size {len} does not match {} rows of dimension {}",
                header.m, header.d
            )));
        }
        Ok(DataReader {
            input,
            path: path.to_path_buf(),
            header,
            remaining: header.m,
            index: 0,
        })
    }

    fn read_f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.input.read_exact(&mut b).map_err(|e| Error::io(&self.path, e))?;
        Ok(f64::from_le_bytes(b))
    }

    fn read_row(&mut self) -> Result<Row> {
        let x = (0..self.header.d).map(|_| self.read_f64()).collect::<Result<Vec<_>>>()?;
        match self.header.kind {
            FileKind::Samples => Ok(Row::Sample(RawSample {
                x,
                y_prime: self.read_f64()?,
            })),
            FileKind::Examples => {
                let mut b = [0u8; 1];
                self.input.read_exact(&mut b).map_err(|e| Error::io(&self.path, e))?;
                let y = Label::from_i8(i8::from_le_bytes(b)).ok_or_else(|| Error::Format {
                    path: self.path.clone(),
                    reason: format!("row {}: label byte {} is not +1 or -1", self.index, b[0]),
                })?;
                Ok(Row::Example(BinaryExample { x, y }))
            }
        }
    }

    /// Iterate raw samples; fails on an example file.
    pub fn samples(self) -> Result<impl Iterator<Item = Result<RawSample>>> {
        if self.header.kind != FileKind::Samples {
            return Err(Error::Format {
                path: self.path.clone(),
                reason: "expected raw samples, found binary examples".into(),
            });
        }
        Ok(self.map(|r| {
            r.map(|row| match row {
                Row::Sample(s) => s,
                Row::Example(_) => unreachable!("kind checked above"),
            })
        }))
    }
}

impl Iterator for DataReader {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let row = self.read_row();
        self.index += 1;
        if row.is_err() {
            self.remaining = 0;
        }
        Some(row)
    }
}

/// Read every row of a file as binary examples, binarizing raw samples.
pub fn read_examples(path: &Path) -> Result<(Header, Vec<BinaryExample>)> {
    let reader = DataReader::open(path)?;
    let header = reader.header;
    let mut out = Vec::with_capacity(header.m.min(1 << 24) as usize);
    for (i, row) in reader.enumerate() {
        match row? {
            Row::Example(e) => out.push(e),
            Row::Sample(s) => {
                let y = crate::reduction::label_of(s.y_prime, header.period).ok_or_else(|| {
                    Error::invalid(format!("sample {i}: y' = {} outside [0, {})", s.y_prime, header.period))
                })?;
                out.push(BinaryExample { x: s.x, y });
            }
        }
    }
    Ok((header, out))
}
