//! Nucleotide sequences, FASTA input, and the gray-level pixel layout.
//!
//! Each base maps to a fixed intensity (A=63, T=127, C=191, G=255). The
//! intensities are evenly spaced 64 apart. A sequence of `len` bases is laid
//! out row-major in the smallest square matrix that holds it. Trailing cells
//! are filled with [`PAD_VALUE`], which no base uses.
//!
//! Guanine is 255. A printed table of the original encoding lists 256, which
//! does not fit an 8-bit gray level.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

/// Shortest sequence that still yields a 2x2 matrix.
pub const MIN_SEQUENCE_LEN: usize = 4;

/// Intensity written into cells past the end of the sequence: the mean of
/// the four base intensities. With this fill every AC coefficient equals the
/// transform of the payload's deviation from the mean, so padding adds no
/// structure shared by all sequences of one length.
pub const PAD_VALUE: u8 = 159;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid base {base:?} in record {record:?} at position {position}")]
    InvalidBase {
        record: String,
        /// 1-based offset of the offending base within the record.
        position: usize,
        base: char,
    },
    #[error("sequence {id:?} has {len} bp; at least {MIN_SEQUENCE_LEN} bp are required")]
    SequenceTooShort { id: String, len: usize },
    #[error("malformed FASTA at line {line}: {reason}")]
    MalformedFasta { line: usize, reason: String },
    #[error("FASTA record {id:?} has no sequence data")]
    EmptyRecord { id: String },
    #[error("I/O error while reading FASTA: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Nucleotide {
    A,
    T,
    C,
    G,
}

impl Nucleotide {
    /// All four bases in ascending intensity order.
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::T, Nucleotide::C, Nucleotide::G];

    /// Case-insensitive parse of a single ASCII base.
    #[inline]
    pub fn from_ascii(byte: u8) -> Option<Self> {
        match byte {
            b'A' | b'a' => Some(Nucleotide::A),
            b'T' | b't' => Some(Nucleotide::T),
            b'C' | b'c' => Some(Nucleotide::C),
            b'G' | b'g' => Some(Nucleotide::G),
            _ => None,
        }
    }

    #[inline]
    pub fn to_ascii(self) -> u8 {
        match self {
            Nucleotide::A => b'A',
            Nucleotide::T => b'T',
            Nucleotide::C => b'C',
            Nucleotide::G => b'G',
        }
    }

    #[inline]
    pub fn intensity(self) -> u8 {
        match self {
            Nucleotide::A => 63,
            Nucleotide::T => 127,
            Nucleotide::C => 191,
            Nucleotide::G => 255,
        }
    }

    #[inline]
    pub fn from_intensity(value: u8) -> Option<Self> {
        match value {
            63 => Some(Nucleotide::A),
            127 => Some(Nucleotide::T),
            191 => Some(Nucleotide::C),
            255 => Some(Nucleotide::G),
            _ => None,
        }
    }
}

/// Gray intensity of one ASCII base.
pub fn encode_base(base: u8) -> Result<u8, CodecError> {
    Nucleotide::from_ascii(base)
        .map(Nucleotide::intensity)
        .ok_or(CodecError::InvalidBase {
            record: String::new(),
            position: 1,
            base: base as char,
        })
}

/// A validated nucleotide sequence with its identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence {
    id: String,
    bases: Vec<Nucleotide>,
}

impl Sequence {
    pub fn new(id: impl Into<String>, bases: Vec<Nucleotide>) -> Result<Self, CodecError> {
        let id = id.into();
        if bases.len() < MIN_SEQUENCE_LEN {
            return Err(CodecError::SequenceTooShort {
                id,
                len: bases.len(),
            });
        }
        Ok(Sequence { id, bases })
    }

    /// Parses ASCII bases, accepting lowercase input.
    pub fn from_ascii(id: impl Into<String>, text: &[u8]) -> Result<Self, CodecError> {
        let id = id.into();
        let mut bases = Vec::with_capacity(text.len());
        for (i, &b) in text.iter().enumerate() {
            match Nucleotide::from_ascii(b) {
                Some(n) => bases.push(n),
                None => {
                    return Err(CodecError::InvalidBase {
                        record: id,
                        position: i + 1,
                        base: b as char,
                    })
                }
            }
        }
        Sequence::new(id, bases)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bases(&self) -> &[Nucleotide] {
        &self.bases
    }

    /// Length in base pairs.
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    /// Always false for a constructed sequence; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Copy of `len` bases starting at `offset`, with a new id.
    pub fn window(
        &self,
        id: impl Into<String>,
        offset: usize,
        len: usize,
    ) -> Result<Self, CodecError> {
        let end = offset.saturating_add(len).min(self.bases.len());
        let start = offset.min(end);
        Sequence::new(id, self.bases[start..end].to_vec())
    }

    pub fn to_ascii_string(&self) -> String {
        self.bases.iter().map(|b| b.to_ascii() as char).collect()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ">{}\n{}", self.id, self.to_ascii_string())
    }
}

/// Square gray-level image of a sequence, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMatrix {
    dim: usize,
    cells: Vec<u8>,
    payload_len: usize,
    pad_value: u8,
}

impl PixelMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.dim + col]
    }

    /// Number of cells that hold real bases.
    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn pad_value(&self) -> u8 {
        self.pad_value
    }

    pub fn padding_cells(&self) -> usize {
        self.cells.len() - self.payload_len
    }

    /// Reads the payload cells back into bases.
    pub fn decode(&self) -> Option<Vec<Nucleotide>> {
        self.cells[..self.payload_len]
            .iter()
            .map(|&v| Nucleotide::from_intensity(v))
            .collect()
    }
}

/// Side of the smallest square holding `len` cells.
pub fn matrix_dim(len: usize) -> usize {
    let mut dim = (len as f64).sqrt() as usize;
    while dim * dim < len {
        dim += 1;
    }
    while dim > 0 && (dim - 1) * (dim - 1) >= len {
        dim -= 1;
    }
    dim
}

pub fn layout_matrix(seq: &Sequence) -> Result<PixelMatrix, CodecError> {
    layout_matrix_with_pad(seq, PAD_VALUE)
}

/// Row-major layout with an explicit padding intensity.
pub fn layout_matrix_with_pad(seq: &Sequence, pad_value: u8) -> Result<PixelMatrix, CodecError> {
    let len = seq.len();
    if len < MIN_SEQUENCE_LEN {
        return Err(CodecError::SequenceTooShort {
            id: seq.id.clone(),
            len,
        });
    }
    let dim = matrix_dim(len);
    let mut cells = vec![pad_value; dim * dim];
    for (cell, base) in cells.iter_mut().zip(&seq.bases) {
        *cell = base.intensity();
    }
    Ok(PixelMatrix {
        dim,
        cells,
        payload_len: len,
        pad_value,
    })
}

/// What to do with a FASTA record containing a symbol outside {A,C,G,T}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NPolicy {
    /// Fail the whole parse.
    #[default]
    Reject,
    /// Drop the record and report it in [`FastaParse::skipped`].
    SkipRecord,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FastaOptions {
    pub n_policy: NPolicy,
}

/// A record dropped under [`NPolicy::SkipRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: CodecError,
}

#[derive(Debug, Clone, Default)]
pub struct FastaParse {
    pub sequences: Vec<Sequence>,
    pub skipped: Vec<SkippedRecord>,
}

/// Parses FASTA text, rejecting any record with a non-ACGT symbol.
pub fn parse_fasta<R: BufRead>(reader: R) -> Result<Vec<Sequence>, CodecError> {
    parse_fasta_with(reader, &FastaOptions::default()).map(|p| p.sequences)
}

pub fn parse_fasta_with<R: BufRead>(
    reader: R,
    options: &FastaOptions,
) -> Result<FastaParse, CodecError> {
    let mut out = FastaParse::default();
    let mut current: Option<PendingRecord> = None;

    for (lineno, line) in reader.split(b'\n').enumerate() {
        let line = line.map_err(|e| CodecError::Io(e.to_string()))?;
        let line = line.trim_ascii();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix(b">") {
            if let Some(rec) = current.take() {
                rec.finish(options, &mut out)?;
            }
            let id = header
                .split(|b| b.is_ascii_whitespace())
                .next()
                .unwrap_or_default();
            if id.is_empty() {
                return Err(CodecError::MalformedFasta {
                    line: lineno + 1,
                    reason: "header has no identifier".into(),
                });
            }
            let id = std::str::from_utf8(id).map_err(|_| CodecError::MalformedFasta {
                line: lineno + 1,
                reason: "identifier is not valid UTF-8".into(),
            })?;
            current = Some(PendingRecord::new(id.to_owned()));
        } else {
            let Some(rec) = current.as_mut() else {
                return Err(CodecError::MalformedFasta {
                    line: lineno + 1,
                    reason: "sequence data before the first '>' header".into(),
                });
            };
            rec.push_line(line);
        }
    }
    if let Some(rec) = current.take() {
        rec.finish(options, &mut out)?;
    }
    Ok(out)
}

struct PendingRecord {
    id: String,
    bases: Vec<Nucleotide>,
    bad: Option<CodecError>,
}

impl PendingRecord {
    fn new(id: String) -> Self {
        PendingRecord {
            id,
            bases: Vec::new(),
            bad: None,
        }
    }

    fn push_line(&mut self, line: &[u8]) {
        for &b in line.iter().filter(|b| !b.is_ascii_whitespace()) {
            match Nucleotide::from_ascii(b) {
                Some(n) => self.bases.push(n),
                None => {
                    if self.bad.is_none() {
                        self.bad = Some(CodecError::InvalidBase {
                            record: self.id.clone(),
                            position: self.bases.len() + 1,
                            base: b as char,
                        });
                    }
                    return;
                }
            }
        }
    }

    fn finish(self, options: &FastaOptions, out: &mut FastaParse) -> Result<(), CodecError> {
        if let Some(err) = self.bad {
            return match options.n_policy {
                NPolicy::Reject => Err(err),
                NPolicy::SkipRecord => {
                    out.skipped.push(SkippedRecord {
                        id: self.id,
                        reason: err,
                    });
                    Ok(())
                }
            };
        }
        if self.bases.is_empty() {
            return Err(CodecError::EmptyRecord { id: self.id });
        }
        out.sequences.push(Sequence::new(self.id, self.bases)?);
        Ok(())
    }
}
