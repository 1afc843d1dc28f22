//! Persistent collections of hashes and exact Hamming-distance retrieval.
//!
//! Queries are an exhaustive scan over every record, so results are exact.
//! Results are ordered by distance and then by id.
//!
//! On-disk layout, all integers little-endian:
//!
//! ```text
//! magic "DPH1" | version u16 = 1 | width u16 | strategy u8 | reserved u8 = 0
//! record count u64
//! per record: id length u16 | id (UTF-8) | source_len u32 | hash (ceil(width/8) octets)
//! CRC-32 (IEEE) of every preceding byte, u32
//! ```

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{self, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::phash::{compute_hash, HashError, PerceptualHash, SelectionStrategy, StrategyKind};
use crate::sequence_codec::Sequence;

pub const MAGIC: [u8; 4] = *b"DPH1";
pub const FORMAT_VERSION: u16 = 1;
/// Bytes before the first record.
pub const HEADER_LEN: usize = 18;
pub const CHECKSUM_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record id must be non-empty and at most {} bytes", u16::MAX)]
    InvalidId,
    #[error("an index needs at least one sequence")]
    EmptyInput,
    #[error("index width is {index} bits but the query hash has {query}")]
    WidthMismatch { index: usize, query: usize },
    #[error("index uses {index} selection but the query hash uses {query}")]
    StrategyMismatch {
        index: StrategyKind,
        query: StrategyKind,
    },
    #[error("max distance {max} exceeds hash width {width}")]
    DistanceOutOfRange { max: u32, width: usize },
    #[error("top-k must be between 1 and {len}, got {k}")]
    KOutOfRange { k: usize, len: usize },
    #[error("window {window} / step {step} is invalid")]
    InvalidWindow { window: usize, step: usize },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u16),
    #[error("index file is truncated")]
    TruncatedFile,
    #[error("index checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl IndexError {
    /// True for errors that describe a damaged or foreign index file.
    pub fn is_format_error(&self) -> bool {
        matches!(
            self,
            IndexError::BadMagic
                | IndexError::UnsupportedVersion(_)
                | IndexError::TruncatedFile
                | IndexError::ChecksumMismatch { .. }
                | IndexError::Corrupt(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRecord {
    pub id: String,
    pub hash: PerceptualHash,
    pub source_len: usize,
}

/// One query hit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub id: String,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashIndex {
    width: usize,
    strategy: StrategyKind,
    records: Vec<IndexRecord>,
}

impl HashIndex {
    /// An index with no records.
    pub fn empty(strategy: SelectionStrategy) -> Self {
        HashIndex {
            width: strategy.width(),
            strategy: strategy.kind,
            records: Vec::new(),
        }
    }

    /// Builds an index from precomputed records. Ids must be unique and every
    /// hash must match the index width and strategy.
    pub fn from_records(
        strategy: SelectionStrategy,
        records: Vec<IndexRecord>,
    ) -> Result<Self, IndexError> {
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &records {
            if rec.id.is_empty() || rec.id.len() > usize::from(u16::MAX) {
                return Err(IndexError::InvalidId);
            }
            if !seen.insert(rec.id.as_str()) {
                return Err(IndexError::DuplicateId(rec.id.clone()));
            }
            if rec.hash.width() != strategy.width() {
                return Err(IndexError::WidthMismatch {
                    index: strategy.width(),
                    query: rec.hash.width(),
                });
            }
            if rec.hash.strategy() != strategy.kind {
                return Err(IndexError::StrategyMismatch {
                    index: strategy.kind,
                    query: rec.hash.strategy(),
                });
            }
        }
        Ok(HashIndex {
            width: strategy.width(),
            strategy: strategy.kind,
            records,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn strategy_kind(&self) -> StrategyKind {
        self.strategy
    }

    pub fn strategy(&self) -> SelectionStrategy {
        SelectionStrategy {
            kind: self.strategy,
            k: self.width,
        }
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_query(&self, q: &PerceptualHash) -> Result<(), IndexError> {
        if q.width() != self.width {
            return Err(IndexError::WidthMismatch {
                index: self.width,
                query: q.width(),
            });
        }
        if q.strategy() != self.strategy {
            return Err(IndexError::StrategyMismatch {
                index: self.strategy,
                query: q.strategy(),
            });
        }
        Ok(())
    }

    fn distances<'a>(&'a self, q: &'a PerceptualHash) -> impl Iterator<Item = (usize, u32)> + 'a {
        self.records
            .iter()
            .enumerate()
            .map(move |(i, r)| (i, r.hash.hamming_unchecked(q)))
    }

    fn compare(&self, a: &(usize, u32), b: &(usize, u32)) -> Ordering {
        a.1.cmp(&b.1)
            .then_with(|| self.records[a.0].id.cmp(&self.records[b.0].id))
    }

    fn to_matches(&self, hits: Vec<(usize, u32)>) -> Vec<Match> {
        hits.into_iter()
            .map(|(i, distance)| Match {
                id: self.records[i].id.clone(),
                distance,
            })
            .collect()
    }

    /// Every record within `max_dist` of `q`.
    pub fn query(&self, q: &PerceptualHash, max_dist: u32) -> Result<Vec<Match>, IndexError> {
        self.check_query(q)?;
        if max_dist as usize > self.width {
            return Err(IndexError::DistanceOutOfRange {
                max: max_dist,
                width: self.width,
            });
        }
        let mut hits: Vec<_> = self.distances(q).filter(|&(_, d)| d <= max_dist).collect();
        hits.sort_unstable_by(|a, b| self.compare(a, b));
        Ok(self.to_matches(hits))
    }

    /// The `k` nearest records.
    pub fn query_topk(&self, q: &PerceptualHash, k: usize) -> Result<Vec<Match>, IndexError> {
        self.check_query(q)?;
        if k == 0 || k > self.records.len() {
            return Err(IndexError::KOutOfRange {
                k,
                len: self.records.len(),
            });
        }
        let mut all: Vec<_> = self.distances(q).collect();
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, |a, b| self.compare(a, b));
            all.truncate(k);
        }
        all.sort_unstable_by(|a, b| self.compare(a, b));
        Ok(self.to_matches(all))
    }

    /// Writes the binary layout described in the module docs.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<(), IndexError> {
        sink.write_all(&self.to_bytes()?)?;
        sink.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, IndexError> {
        let width = u16::try_from(self.width).map_err(|_| HashError::InvalidWidth(self.width))?;
        let hash_len = self.width.div_ceil(8);
        let mut buf = Vec::with_capacity(
            HEADER_LEN
                + CHECKSUM_LEN
                + self
                    .records
                    .iter()
                    .map(|r| 2 + r.id.len() + 4 + hash_len)
                    .sum::<usize>(),
        );
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&width.to_le_bytes());
        buf.push(self.strategy.tag());
        buf.push(0);
        buf.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for rec in &self.records {
            let id_len = u16::try_from(rec.id.len()).map_err(|_| IndexError::InvalidId)?;
            let source_len = u32::try_from(rec.source_len).map_err(|_| {
                IndexError::Corrupt(format!("source length {} exceeds u32", rec.source_len))
            })?;
            buf.extend_from_slice(&id_len.to_le_bytes());
            buf.extend_from_slice(rec.id.as_bytes());
            buf.extend_from_slice(&source_len.to_le_bytes());
            buf.extend_from_slice(&rec.hash.to_bytes());
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        Ok(buf)
    }

    pub fn load<R: Read>(mut source: R) -> Result<Self, IndexError> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        HashIndex::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
            return Err(IndexError::BadMagic);
        }
        if bytes.len() < 6 {
            return Err(IndexError::TruncatedFile);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
            return Err(IndexError::TruncatedFile);
        }
        let (body, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(if body.len() < min_body_len(body) {
                IndexError::TruncatedFile
            } else {
                IndexError::ChecksumMismatch { stored, computed }
            });
        }
        parse_body(body)
    }
}

/// Smallest body the header's width and record count allow, each record
/// having at least a one-byte id.
fn min_body_len(body: &[u8]) -> usize {
    let width = usize::from(u16::from_le_bytes([body[6], body[7]]));
    let count = u64::from_le_bytes(body[10..18].try_into().expect("8-byte count"));
    let per_record = (2 + 1 + 4 + width.div_ceil(8)) as u64;
    count
        .saturating_mul(per_record)
        .saturating_add(HEADER_LEN as u64)
        .try_into()
        .unwrap_or(usize::MAX)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::TruncatedFile)?;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or(IndexError::TruncatedFile)?;
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn parse_body(body: &[u8]) -> Result<HashIndex, IndexError> {
    let mut cur = Cursor {
        bytes: body,
        pos: 6,
    };
    let width = usize::from(cur.u16()?);
    let tag = cur.u8()?;
    let kind = StrategyKind::from_tag(tag)
        .ok_or_else(|| IndexError::Corrupt(format!("unknown strategy tag {tag}")))?;
    if cur.u8()? != 0 {
        return Err(IndexError::Corrupt(
            "reserved header byte is not zero".into(),
        ));
    }
    let strategy = SelectionStrategy::new(kind, width)?;
    let count = cur.u64()?;
    let hash_len = width.div_ceil(8);
    // Each record needs at least 6 fixed bytes plus the hash.
    let min_record = 6 + hash_len;
    if count > ((body.len() - cur.pos) / min_record) as u64 {
        return Err(IndexError::TruncatedFile);
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id_len = usize::from(cur.u16()?);
        let id = std::str::from_utf8(cur.take(id_len)?)
            .map_err(|_| IndexError::Corrupt("record id is not UTF-8".into()))?
            .to_owned();
        let source_len = cur.u32()? as usize;
        let hash = PerceptualHash::from_bytes(cur.take(hash_len)?, width, kind, source_len)?;
        records.push(IndexRecord {
            id,
            hash,
            source_len,
        });
    }
    if cur.pos != body.len() {
        return Err(IndexError::Corrupt(format!(
            "{} unexpected bytes after the last record",
            body.len() - cur.pos
        )));
    }
    HashIndex::from_records(strategy, records)
}

/// Sliding-window options for [`build_index_windowed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Windowing {
    pub window: usize,
    pub step: usize,
}

/// Hashes every sequence in input order. Hashing runs on the current rayon
/// pool; record order does not depend on it.
pub fn build_index(
    seqs: &[Sequence],
    strategy: SelectionStrategy,
) -> Result<HashIndex, IndexError> {
    if seqs.is_empty() {
        return Err(IndexError::EmptyInput);
    }
    let records = seqs
        .par_iter()
        .map(|s| {
            Ok(IndexRecord {
                id: s.id().to_owned(),
                hash: compute_hash(s, &strategy)?,
                source_len: s.len(),
            })
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    HashIndex::from_records(strategy, records)
}

/// Indexes fixed-size windows of each sequence instead of whole sequences.
///
/// Windows start at 0, `step`, `2 * step`, ... and only full windows are
/// kept; a sequence shorter than `window` contributes nothing. Record ids are
/// `"{seq_id}:{offset}"` with a 0-based offset.
pub fn build_index_windowed(
    seqs: &[Sequence],
    strategy: SelectionStrategy,
    windowing: Windowing,
) -> Result<HashIndex, IndexError> {
    let Windowing { window, step } = windowing;
    if window < crate::sequence_codec::MIN_SEQUENCE_LEN || step == 0 {
        return Err(IndexError::InvalidWindow { window, step });
    }
    let mut windows = Vec::new();
    for s in seqs {
        let mut offset = 0;
        while offset + window <= s.len() {
            windows.push(
                s.window(format!("{}:{}", s.id(), offset), offset, window)
                    .map_err(HashError::from)?,
            );
            offset += step;
        }
    }
    build_index(&windows, strategy)
}
