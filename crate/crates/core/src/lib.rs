//! Perceptual hashing of DNA sequences.
//!
//! A sequence is drawn as a square gray-level image (one pixel per base),
//! transformed with an orthonormal 2D DCT, and reduced to the signs of a
//! fixed set of low-frequency coefficients. Similar sequences give hashes at
//! small Hamming distance, so a collection of hashes can be searched by
//! distance instead of by alignment.
//!
//! ```
//! use dnaphash::phash::{compute_hash, SelectionStrategy, StrategyKind};
//! use dnaphash::sequence_codec::Sequence;
//!
//! let seq = Sequence::from_ascii("s1", "ACGT".repeat(64).as_bytes()).unwrap();
//! let strategy = SelectionStrategy::new(StrategyKind::Block, 64).unwrap();
//! let hash = compute_hash(&seq, &strategy).unwrap();
//! assert_eq!(hash.to_hex().len(), 16);
//! ```

pub mod index_store;
pub mod phash;
pub mod sequence_codec;
pub mod simulator;
pub mod transform;

pub use index_store::{
    build_index, build_index_windowed, HashIndex, IndexError, IndexRecord, Match,
};
pub use phash::{
    compute_hash, hamming, HashError, PerceptualHash, SelectionStrategy, StrategyKind,
};
pub use sequence_codec::{
    layout_matrix, parse_fasta, CodecError, Nucleotide, PixelMatrix, Sequence,
};
pub use simulator::{
    run_group, write_histogram_csv, DistanceHistogram, SimError, SimulationConfig,
};
pub use transform::{dct2, dct2_reference, idct2, CoefficientMatrix, SquareMatrix};
