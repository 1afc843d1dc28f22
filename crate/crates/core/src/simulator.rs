//! Divergence-rate simulations and throughput measurement.
//!
//! For each primary ordinal the simulator draws a uniform random sequence,
//! derives one variant per divergence rate by substituting exactly
//! `round(rate * len)` distinct positions, hashes both and records the
//! Hamming distance.
//!
//! # Random streams
//!
//! Every random draw comes from xoshiro256** seeded through
//! `Xoshiro256StarStar::seed_from_u64` (SplitMix64 state expansion). Each
//! (ordinal, lane) pair gets its own stream:
//!
//! ```text
//! stream_seed = mix64(mix64(mix64(seed) ^ ordinal) ^ lane)
//! ```
//!
//! where `mix64` is one SplitMix64 step and `lane` is 0 for the primary
//! sequence and `rate.to_bits()` for the variant at `rate`. Results depend
//! only on the seed, never on the number of worker threads, and adding a
//! rate leaves the variants of other rates unchanged.
//!
//! A base is `ALL[next_u64() >> 62]` with `ALL = [A, T, C, G]`. Bounded
//! integers use Lemire's multiply-and-reject method on `next_u64()`.

use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use thiserror::Error;

use crate::phash::{compute_hash, HashError, PerceptualHash, SelectionStrategy};
use crate::sequence_codec::{matrix_dim, Nucleotide, Sequence, MIN_SEQUENCE_LEN};

/// Rates exercised by default.
pub const DEFAULT_RATES: [f64; 6] = [0.05, 0.10, 0.20, 0.30, 0.50, 1.00];

/// Primary sequences per group at desk scale.
pub const DEFAULT_N_PRIMARY: u64 = 10_000;

pub const CSV_HEADER: &str =
    "group,seq_len,hash_width,strategy,divergence_rate,hamming_distance,count,fraction";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown group {0:?} (expected one of A-F)")]
    UnknownGroup(String),
}

/// One SplitMix64 step.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub type SimRng = Xoshiro256StarStar;

/// Independent generator for one (ordinal, lane) pair.
pub fn substream(seed: u64, ordinal: u64, lane: u64) -> SimRng {
    SimRng::seed_from_u64(mix64(mix64(mix64(seed) ^ ordinal) ^ lane))
}

/// Uniform integer in `0..n`.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0);
    let range = n as u64;
    let mut m = u128::from(rng.next_u64()) * u128::from(range);
    if (m as u64) < range {
        let threshold = range.wrapping_neg() % range;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(range);
        }
    }
    (m >> 64) as usize
}

/// Uniform random sequence. Panics if `len` is below the minimum length.
pub fn generate_sequence<R: RngCore + ?Sized>(
    id: impl Into<String>,
    len: usize,
    rng: &mut R,
) -> Sequence {
    assert!(
        len >= MIN_SEQUENCE_LEN,
        "sequence length {len} is below {MIN_SEQUENCE_LEN}"
    );
    let bases = (0..len)
        .map(|_| Nucleotide::ALL[(rng.next_u64() >> 62) as usize])
        .collect();
    Sequence::new(id, bases).expect("length checked above")
}

/// Number of positions a variant must differ in.
pub fn mutation_count(rate: f64, len: usize) -> usize {
    ((rate * len as f64).round_ties_even() as usize).min(len)
}

/// Substitutes exactly `round(rate * len)` distinct positions, each with one
/// of the three other bases. Rate 0 returns an identical copy.
pub fn mutate_sequence<R: RngCore + ?Sized>(seq: &Sequence, rate: f64, rng: &mut R) -> Sequence {
    assert!((0.0..=1.0).contains(&rate), "rate {rate} outside [0, 1]");
    let len = seq.len();
    let count = mutation_count(rate, len);
    let mut bases = seq.bases().to_vec();
    let mut order: Vec<usize> = (0..len).collect();
    for i in 0..count {
        let j = i + below(rng, len - i);
        order.swap(i, j);
        let pos = order[i];
        let original = bases[pos];
        let mut others = Nucleotide::ALL.into_iter().filter(|&n| n != original);
        bases[pos] = others.nth(below(rng, 3)).expect("three alternatives");
    }
    Sequence::new(seq.id(), bases).expect("length unchanged")
}

/// The six preset groups: sequence length by hash width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupPreset {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl GroupPreset {
    pub const ALL: [GroupPreset; 6] = [
        GroupPreset::A,
        GroupPreset::B,
        GroupPreset::C,
        GroupPreset::D,
        GroupPreset::E,
        GroupPreset::F,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GroupPreset::A => "A",
            GroupPreset::B => "B",
            GroupPreset::C => "C",
            GroupPreset::D => "D",
            GroupPreset::E => "E",
            GroupPreset::F => "F",
        }
    }

    pub fn seq_len(self) -> usize {
        match self {
            GroupPreset::A | GroupPreset::B => 100,
            GroupPreset::C | GroupPreset::D => 1_000,
            GroupPreset::E | GroupPreset::F => 10_000,
        }
    }

    pub fn hash_width(self) -> usize {
        match self {
            GroupPreset::A | GroupPreset::C | GroupPreset::E => 32,
            GroupPreset::B | GroupPreset::D | GroupPreset::F => 64,
        }
    }

    /// Sequence bytes (one per base) over hash bytes.
    pub fn reduction_factor(self) -> f64 {
        reduction_factor(self.seq_len(), self.hash_width())
    }

    pub fn config(self, n_primary: u64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            group: self.label().to_owned(),
            seq_len: self.seq_len(),
            strategy: SelectionStrategy::default_for_width(self.hash_width())
                .expect("preset widths are valid"),
            divergence_rates: DEFAULT_RATES.to_vec(),
            n_primary,
            seed,
        }
    }
}

impl FromStr for GroupPreset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupPreset::ALL
            .into_iter()
            .find(|g| g.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownGroup(s.to_owned()))
    }
}

pub fn reduction_factor(seq_len: usize, hash_width: usize) -> f64 {
    seq_len as f64 / (hash_width as f64 / 8.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub group: String,
    pub seq_len: usize,
    pub strategy: SelectionStrategy,
    /// Fractions in [0, 1]; 0 is the identity control.
    pub divergence_rates: Vec<f64>,
    pub n_primary: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn hash_width(&self) -> usize {
        self.strategy.width()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.group.is_empty() || self.group.contains([',', '\n', '\r', '"']) {
            return bad(format!(
                "group label {:?} is not a plain CSV field",
                self.group
            ));
        }
        if self.seq_len < MIN_SEQUENCE_LEN {
            return bad(format!(
                "sequence length {} is below {MIN_SEQUENCE_LEN}",
                self.seq_len
            ));
        }
        if self.n_primary == 0 {
            return bad("at least one primary sequence is required".into());
        }
        if self.divergence_rates.is_empty() {
            return bad("no divergence rates".into());
        }
        for &r in &self.divergence_rates {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("divergence rate {r} outside [0, 1]"));
            }
        }
        for (i, r) in self.divergence_rates.iter().enumerate() {
            if self.divergence_rates[..i].contains(r) {
                return bad(format!("divergence rate {r} listed twice"));
            }
        }
        self.strategy.check_dim(matrix_dim(self.seq_len))?;
        Ok(())
    }
}

/// Distances from one primary to each of its variants, in rate order.
pub fn simulate_ordinal(cfg: &SimulationConfig, ordinal: u64) -> Result<Vec<u32>, SimError> {
    let primary = generate_sequence(
        format!("p{ordinal}"),
        cfg.seq_len,
        &mut substream(cfg.seed, ordinal, 0),
    );
    let base_hash = compute_hash(&primary, &cfg.strategy)?;
    cfg.divergence_rates
        .iter()
        .map(|&rate| {
            let mut rng = substream(cfg.seed, ordinal, rate.to_bits());
            let variant = mutate_sequence(&primary, rate, &mut rng);
            let h = compute_hash(&variant, &cfg.strategy)?;
            Ok(base_hash.hamming(&h)?)
        })
        .collect()
}

/// Per-rate Hamming-distance counts for one simulated group.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    pub group: String,
    pub seq_len: usize,
    pub hash_width: usize,
    pub strategy: SelectionStrategy,
    pub rates: Vec<f64>,
    /// `counts[r][d]` for rate index `r` and distance `d` in `0..=hash_width`.
    pub counts: Vec<Vec<u64>>,
    pub n_primary: u64,
}

impl DistanceHistogram {
    fn empty(cfg: &SimulationConfig) -> Self {
        DistanceHistogram {
            group: cfg.group.clone(),
            seq_len: cfg.seq_len,
            hash_width: cfg.hash_width(),
            strategy: cfg.strategy,
            rates: cfg.divergence_rates.clone(),
            counts: vec![vec![0; cfg.hash_width() + 1]; cfg.divergence_rates.len()],
            n_primary: 0,
        }
    }

    fn add(&mut self, distances: &[u32]) {
        for (row, &d) in self.counts.iter_mut().zip(distances) {
            row[d as usize] += 1;
        }
        self.n_primary += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.n_primary += other.n_primary;
        self
    }

    pub fn rate_index(&self, rate: f64) -> Option<usize> {
        self.rates.iter().position(|&r| r == rate)
    }

    pub fn total(&self, rate_idx: usize) -> u64 {
        self.counts[rate_idx].iter().sum()
    }

    pub fn fractions(&self, rate_idx: usize) -> Vec<f64> {
        let n = self.n_primary as f64;
        self.counts[rate_idx]
            .iter()
            .map(|&c| c as f64 / n)
            .collect()
    }

    pub fn mean(&self, rate_idx: usize) -> f64 {
        let weighted: u64 = self.counts[rate_idx]
            .iter()
            .enumerate()
            .map(|(d, &c)| d as u64 * c)
            .sum();
        weighted as f64 / self.n_primary as f64
    }

    /// Builds a histogram from per-pair outcomes.
    pub fn from_pairs(cfg: &SimulationConfig, pairs: &[PairOutcome]) -> Self {
        let mut h = DistanceHistogram::empty(cfg);
        for chunk in pairs.chunks(cfg.divergence_rates.len()) {
            let distances: Vec<u32> = chunk.iter().map(|p| p.distance).collect();
            h.add(&distances);
        }
        h
    }
}

/// Runs the whole group on the current rayon pool.
pub fn run_group(cfg: &SimulationConfig) -> Result<DistanceHistogram, SimError> {
    cfg.validate()?;
    (0..cfg.n_primary)
        .into_par_iter()
        .try_fold(
            || DistanceHistogram::empty(cfg),
            |mut h, ordinal| {
                h.add(&simulate_ordinal(cfg, ordinal)?);
                Ok(h)
            },
        )
        .try_reduce(|| DistanceHistogram::empty(cfg), |a, b| Ok(a.merge(b)))
}

/// One primary/variant comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOutcome {
    pub ordinal: u64,
    pub rate: f64,
    pub distance: u32,
}

/// Every comparison, ordered by ordinal and then by rate position.
pub fn run_pairs(cfg: &SimulationConfig) -> Result<Vec<PairOutcome>, SimError> {
    cfg.validate()?;
    let per_ordinal = (0..cfg.n_primary)
        .into_par_iter()
        .map(|ordinal| simulate_ordinal(cfg, ordinal))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_ordinal
        .into_iter()
        .enumerate()
        .flat_map(|(ordinal, distances)| {
            cfg.divergence_rates
                .iter()
                .zip(distances)
                .map(move |(&rate, distance)| PairOutcome {
                    ordinal: ordinal as u64,
                    rate,
                    distance,
                })
        })
        .collect())
}

/// Shortest round-trip decimal, always with a fractional part ("1.0", "0.05").
fn format_rate(rate: f64) -> String {
    format!("{rate:?}")
}

/// Rows sorted by (rate, distance); every distance 0..=width is listed.
/// Fractions are printed as shortest round-trip decimals.
pub fn write_histogram_csv<W: Write>(h: &DistanceHistogram, mut sink: W) -> io::Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    let mut order: Vec<usize> = (0..h.rates.len()).collect();
    order.sort_by(|&a, &b| h.rates[a].total_cmp(&h.rates[b]));
    for r in order {
        let rate = format_rate(h.rates[r]);
        for (d, (count, fraction)) in h.counts[r].iter().zip(h.fractions(r)).enumerate() {
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{}",
                h.group, h.seq_len, h.hash_width, h.strategy.kind, rate, d, count, fraction
            )?;
        }
    }
    sink.flush()
}

pub fn write_pairs_csv<W: Write>(pairs: &[PairOutcome], mut sink: W) -> io::Result<()> {
    writeln!(sink, "ordinal,divergence_rate,hamming_distance")?;
    for p in pairs {
        writeln!(sink, "{},{},{}", p.ordinal, format_rate(p.rate), p.distance)?;
    }
    sink.flush()
}

/// Generation and hashing timings measured separately.
#[derive(Debug, Clone)]
pub struct ThroughputReport {
    pub seq_len: usize,
    pub strategy: SelectionStrategy,
    pub n: u64,
    pub workers: usize,
    pub generation: Duration,
    pub hashing: Duration,
    /// XOR of every hash's leading word; identical across runs with one seed.
    pub digest: u64,
}

impl ThroughputReport {
    pub fn generation_rate(&self) -> f64 {
        self.n as f64 / self.generation.as_secs_f64().max(f64::MIN_POSITIVE)
    }

    pub fn hashing_rate(&self) -> f64 {
        self.n as f64 / self.hashing.as_secs_f64().max(f64::MIN_POSITIVE)
    }

    /// Share of total time spent generating sequences.
    pub fn generation_share(&self) -> f64 {
        let g = self.generation.as_secs_f64();
        let total = g + self.hashing.as_secs_f64();
        if total > 0.0 {
            g / total
        } else {
            0.0
        }
    }

    pub fn write_report<W: Write>(&self, mut sink: W) -> io::Result<()> {
        writeln!(sink, "seq_len: {}", self.seq_len)?;
        writeln!(sink, "hash_width: {}", self.strategy.width())?;
        writeln!(sink, "strategy: {}", self.strategy.kind)?;
        writeln!(sink, "sequences: {}", self.n)?;
        writeln!(sink, "workers: {}", self.workers)?;
        writeln!(
            sink,
            "generation_seconds: {:.6}",
            self.generation.as_secs_f64()
        )?;
        writeln!(sink, "generation_per_second: {:.1}", self.generation_rate())?;
        writeln!(sink, "hashing_seconds: {:.6}", self.hashing.as_secs_f64())?;
        writeln!(sink, "hashes_per_second: {:.1}", self.hashing_rate())?;
        writeln!(sink, "generation_share: {:.4}", self.generation_share())?;
        writeln!(sink, "digest: {:016x}", self.digest)?;
        sink.flush()
    }
}

const BENCH_BATCH: u64 = 4096;

/// Generates `n` sequences and hashes them on the current rayon pool, timing
/// the two phases separately. Work proceeds in fixed-size batches so long
/// sequences do not have to fit in memory at once.
pub fn measure_throughput(
    seq_len: usize,
    strategy: SelectionStrategy,
    n: u64,
    seed: u64,
) -> Result<ThroughputReport, SimError> {
    if seq_len < MIN_SEQUENCE_LEN {
        return Err(SimError::InvalidConfig(format!(
            "sequence length {seq_len} is below {MIN_SEQUENCE_LEN}"
        )));
    }
    if n == 0 {
        return Err(SimError::InvalidConfig("n must be at least 1".into()));
    }
    strategy.check_dim(matrix_dim(seq_len))?;

    let mut generation = Duration::ZERO;
    let mut hashing = Duration::ZERO;
    let mut digest = 0u64;
    let mut start = 0;
    while start < n {
        let end = (start + BENCH_BATCH).min(n);
        let t = Instant::now();
        let seqs: Vec<Sequence> = (start..end)
            .into_par_iter()
            .map(|i| generate_sequence(format!("b{i}"), seq_len, &mut substream(seed, i, 0)))
            .collect();
        generation += t.elapsed();

        let t = Instant::now();
        let hashes = seqs
            .par_iter()
            .map(|s| compute_hash(s, &strategy))
            .collect::<Result<Vec<PerceptualHash>, _>>()?;
        hashing += t.elapsed();

        digest = hashes.iter().fold(digest, |acc, h| acc ^ h.words()[0]);
        start = end;
    }
    Ok(ThroughputReport {
        seq_len,
        strategy,
        n,
        workers: rayon::current_num_threads(),
        generation,
        hashing,
        digest,
    })
}
