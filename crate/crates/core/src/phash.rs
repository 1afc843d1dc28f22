//! Sign-only perceptual hashes and their Hamming distance.
//!
//! A hash keeps one bit per selected DCT coefficient: 1 when the coefficient
//! is strictly positive, 0 otherwise (zero included). Bit 0 is the first
//! coefficient visited by the selection strategy. Bits are packed most
//! significant first, so the hex rendering reads in selection order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sequence_codec::{layout_matrix, matrix_dim, CodecError, Sequence};
use crate::transform::{dct2_pixels, CoefficientMatrix};

/// Widest supported hash.
pub const MAX_WIDTH: usize = 4096;

/// Coefficients below this fraction of the image's L2 norm are treated as
/// exact zeros before taking signs. Floating-point evaluation of a
/// coefficient that is mathematically zero lands on either side of zero at
/// around 1e-15 relative, which would make the tie rule depend on the
/// transform kernel.
pub const ZERO_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("{kind} selection of {k} coefficients does not fit a {dim}x{dim} matrix")]
    StrategyTooLarge {
        kind: StrategyKind,
        k: usize,
        dim: usize,
    },
    #[error("block selection needs a perfect-square width, got {0}")]
    NotPerfectSquare(usize),
    #[error("hash width must be between 1 and {MAX_WIDTH} bits, got {0}")]
    InvalidWidth(usize),
    #[error("hash widths differ: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("hash strategies differ: {left} vs {right}")]
    StrategyMismatch {
        left: StrategyKind,
        right: StrategyKind,
    },
    #[error("unknown selection strategy {0:?}")]
    UnknownStrategy(String),
    #[error("invalid hash text {0:?}")]
    InvalidHashText(String),
}

/// How coefficients are picked from the sign matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Top-left sqrt(k) x sqrt(k) block, row-major.
    Block,
    /// JPEG zigzag walk from (0, 0).
    Zigzag,
    /// Zigzag walk starting after the DC coefficient.
    ZigzagSkipDc,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Block,
        StrategyKind::Zigzag,
        StrategyKind::ZigzagSkipDc,
    ];

    /// Tag byte used by the index file format.
    pub fn tag(self) -> u8 {
        match self {
            StrategyKind::Block => 0,
            StrategyKind::Zigzag => 1,
            StrategyKind::ZigzagSkipDc => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        StrategyKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Block => "block",
            StrategyKind::Zigzag => "zigzag",
            StrategyKind::ZigzagSkipDc => "zigzag_skip_dc",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = HashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "block" => Ok(StrategyKind::Block),
            "zigzag" => Ok(StrategyKind::Zigzag),
            "zigzag_skip_dc" => Ok(StrategyKind::ZigzagSkipDc),
            _ => Err(HashError::UnknownStrategy(s.to_owned())),
        }
    }
}

/// A selection kind paired with the number of coefficients (the hash width).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SelectionStrategy {
    pub kind: StrategyKind,
    pub k: usize,
}

impl SelectionStrategy {
    pub fn new(kind: StrategyKind, k: usize) -> Result<Self, HashError> {
        if k == 0 || k > MAX_WIDTH {
            return Err(HashError::InvalidWidth(k));
        }
        if kind == StrategyKind::Block && exact_sqrt(k).is_none() {
            return Err(HashError::NotPerfectSquare(k));
        }
        Ok(SelectionStrategy { kind, k })
    }

    /// An 8x8 block for 64-bit hashes, zigzag order for every other width.
    pub fn default_for_width(k: usize) -> Result<Self, HashError> {
        let kind = if k == 64 {
            StrategyKind::Block
        } else {
            StrategyKind::Zigzag
        };
        SelectionStrategy::new(kind, k)
    }

    pub fn width(&self) -> usize {
        self.k
    }

    /// Checks that the selection fits a `dim` x `dim` coefficient matrix.
    pub fn check_dim(&self, dim: usize) -> Result<(), HashError> {
        let fits = match self.kind {
            StrategyKind::Block => exact_sqrt(self.k).is_some_and(|side| side <= dim),
            StrategyKind::Zigzag => self.k <= dim * dim,
            StrategyKind::ZigzagSkipDc => self.k < dim * dim,
        };
        if fits {
            Ok(())
        } else {
            Err(HashError::StrategyTooLarge {
                kind: self.kind,
                k: self.k,
                dim,
            })
        }
    }

    /// Selected (row, col) positions in bit order.
    pub fn positions(&self, dim: usize) -> Result<Vec<(usize, usize)>, HashError> {
        self.check_dim(dim)?;
        Ok(match self.kind {
            StrategyKind::Block => {
                let side = exact_sqrt(self.k).unwrap_or_default();
                (0..side)
                    .flat_map(|r| (0..side).map(move |c| (r, c)))
                    .collect()
            }
            StrategyKind::Zigzag => zigzag(dim).take(self.k).collect(),
            StrategyKind::ZigzagSkipDc => zigzag(dim).skip(1).take(self.k).collect(),
        })
    }
}

fn exact_sqrt(k: usize) -> Option<usize> {
    let r = (k as f64).sqrt().round() as usize;
    (r * r == k).then_some(r)
}

/// JPEG zigzag order over an N x N grid.
///
/// Odd anti-diagonals run top-right to bottom-left, even ones bottom-left to
/// top-right, so the walk starts (0,0), (0,1), (1,0), (2,0), (1,1), (0,2).
pub fn zigzag(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim.saturating_mul(2).saturating_sub(1)).flat_map(move |s| {
        let lo = s.saturating_sub(dim - 1);
        let hi = s.min(dim - 1);
        let rows: Box<dyn Iterator<Item = usize>> = if s % 2 == 1 {
            Box::new(lo..=hi)
        } else {
            Box::new((lo..=hi).rev())
        };
        rows.map(move |r| (r, s - r))
    })
}

/// The sign rule: strictly positive maps to 1, everything else to 0.
#[inline]
pub fn sign_bit(value: f64) -> bool {
    value > 0.0
}

/// Binary matrix of coefficient signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    dim: usize,
    bits: Vec<bool>,
}

impl SignMatrix {
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let dim = rows.len();
        let bits = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), dim, "rows must form a square");
                r.iter().map(|&b| b != 0)
            })
            .collect();
        SignMatrix { dim, bits }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.dim + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

pub fn sign_map(c: &CoefficientMatrix) -> SignMatrix {
    SignMatrix {
        dim: c.dim(),
        bits: c.coeffs().iter().map(|&v| sign_bit(v)).collect(),
    }
}

/// Zeroes every coefficient whose magnitude is within rounding noise of zero.
pub fn suppress_rounding_noise(c: &mut CoefficientMatrix, image_norm: f64) {
    let tol = ZERO_RELATIVE_TOLERANCE * image_norm;
    for v in c.coeffs_mut() {
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
}

/// Fixed-width bit vector produced by one selection strategy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PerceptualHash {
    /// Bit `i` lives in `words[i / 64]` at position `63 - i % 64`.
    words: Vec<u64>,
    width: usize,
    strategy: StrategyKind,
    source_len: usize,
}

impl PerceptualHash {
    pub fn from_bits(
        bits: impl IntoIterator<Item = bool>,
        strategy: StrategyKind,
        source_len: usize,
    ) -> Result<Self, HashError> {
        let mut words = Vec::new();
        let mut width = 0usize;
        for bit in bits {
            if width % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[width / 64] |= 1u64 << (63 - width % 64);
            }
            width += 1;
        }
        if width == 0 || width > MAX_WIDTH {
            return Err(HashError::InvalidWidth(width));
        }
        Ok(PerceptualHash {
            words,
            width,
            strategy,
            source_len,
        })
    }

    /// Parses a string of '0'/'1' characters; whitespace is ignored.
    pub fn from_bit_str(
        text: &str,
        strategy: StrategyKind,
        source_len: usize,
    ) -> Result<Self, HashError> {
        let mut bits = Vec::with_capacity(text.len());
        for ch in text.chars().filter(|c| !c.is_whitespace()) {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(HashError::InvalidHashText(text.to_owned())),
            }
        }
        PerceptualHash::from_bits(bits, strategy, source_len)
    }

    /// Rebuilds a hash from packed octets (first bit = MSB of first octet).
    pub fn from_bytes(
        bytes: &[u8],
        width: usize,
        strategy: StrategyKind,
        source_len: usize,
    ) -> Result<Self, HashError> {
        if width == 0 || width > MAX_WIDTH || bytes.len() != width.div_ceil(8) {
            return Err(HashError::InvalidWidth(width));
        }
        let bits = (0..width).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        PerceptualHash::from_bits(bits, strategy, source_len)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    /// Length in bp of the sequence that produced this hash.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        assert!(
            i < self.width,
            "bit {i} out of range for width {}",
            self.width
        );
        self.words[i / 64] & (1u64 << (63 - i % 64)) != 0
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(|i| self.bit(i))
    }

    /// Packed words; unused trailing bits are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Storage size in octets.
    pub fn byte_len(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        out.truncate(self.byte_len());
        out
    }

    /// Lowercase hex, one digit per 4 bits, the last digit zero-padded.
    pub fn to_hex(&self) -> String {
        let mut hex = String::with_capacity(self.byte_len() * 2);
        for b in self.to_bytes() {
            hex.push_str(&format!("{b:02x}"));
        }
        hex.truncate(self.width.div_ceil(4));
        hex
    }

    pub fn to_bit_string(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Every bit flipped.
    pub fn complement(&self) -> Self {
        let bits: Vec<bool> = self.bits().map(|b| !b).collect();
        PerceptualHash::from_bits(bits, self.strategy, self.source_len).expect("width is unchanged")
    }

    /// Leading `k` bits as a new hash.
    pub fn prefix(&self, k: usize) -> Result<Self, HashError> {
        if k > self.width {
            return Err(HashError::InvalidWidth(k));
        }
        PerceptualHash::from_bits(self.bits().take(k), self.strategy, self.source_len)
    }

    /// Hamming distance. Both hashes must share width and strategy; source
    /// lengths may differ.
    pub fn hamming(&self, other: &PerceptualHash) -> Result<u32, HashError> {
        self.check_comparable(other)?;
        Ok(self.hamming_unchecked(other))
    }

    pub fn check_comparable(&self, other: &PerceptualHash) -> Result<(), HashError> {
        if self.width != other.width {
            return Err(HashError::WidthMismatch {
                left: self.width,
                right: other.width,
            });
        }
        if self.strategy != other.strategy {
            return Err(HashError::StrategyMismatch {
                left: self.strategy,
                right: other.strategy,
            });
        }
        Ok(())
    }

    /// Hamming distance without the width/strategy check.
    #[inline]
    pub fn hamming_unchecked(&self, other: &PerceptualHash) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

impl fmt::Display for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Free-function form of [`PerceptualHash::hamming`].
pub fn hamming(a: &PerceptualHash, b: &PerceptualHash) -> Result<u32, HashError> {
    a.hamming(b)
}

/// Reads the selected sign bits into a hash.
pub fn select_bits(
    signs: &SignMatrix,
    strategy: &SelectionStrategy,
    source_len: usize,
) -> Result<PerceptualHash, HashError> {
    let positions = strategy.positions(signs.dim())?;
    PerceptualHash::from_bits(
        positions.into_iter().map(|(r, c)| signs.get(r, c)),
        strategy.kind,
        source_len,
    )
}

/// Sequence -> pixels -> DCT -> signs -> selected bits.
pub fn compute_hash(
    seq: &Sequence,
    strategy: &SelectionStrategy,
) -> Result<PerceptualHash, HashError> {
    strategy.check_dim(matrix_dim(seq.len()))?;
    let pixels = layout_matrix(seq)?;
    let norm = pixels
        .cells()
        .iter()
        .map(|&c| f64::from(c) * f64::from(c))
        .sum::<f64>()
        .sqrt();
    let mut coeffs = dct2_pixels(&pixels);
    suppress_rounding_noise(&mut coeffs, norm);
    select_bits(&sign_map(&coeffs), strategy, seq.len())
}
