use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use dnaphash::index_store::{build_index, build_index_windowed, HashIndex, Windowing};
use dnaphash::phash::{compute_hash, SelectionStrategy, StrategyKind};
use dnaphash::sequence_codec::{parse_fasta_with, FastaOptions, NPolicy, Sequence};
use dnaphash::simulator::{
    measure_throughput, run_group, run_pairs, write_histogram_csv, write_pairs_csv,
    DistanceHistogram, GroupPreset, SimulationConfig, DEFAULT_RATES,
};
use rayon::prelude::*;

use crate::failure::Failure;
use crate::output::{write_atomically, write_to};
use crate::{
    BenchArgs, FastaOpts, HashArgs, IndexArgs, NPolicyArg, QueryArgs, SimulateArgs, StrategyArg,
};

fn strategy(kind: StrategyArg, width: usize) -> Result<SelectionStrategy, Failure> {
    let s = match kind {
        StrategyArg::Auto => SelectionStrategy::default_for_width(width),
        StrategyArg::Block => SelectionStrategy::new(StrategyKind::Block, width),
        StrategyArg::Zigzag => SelectionStrategy::new(StrategyKind::Zigzag, width),
        StrategyArg::ZigzagSkipDc => SelectionStrategy::new(StrategyKind::ZigzagSkipDc, width),
    };
    s.map_err(|e| Failure::Usage(e.to_string()))
}

fn read_fasta(opts: &FastaOpts) -> Result<Vec<Sequence>, Failure> {
    let options = FastaOptions {
        n_policy: match opts.n_policy {
            NPolicyArg::Reject => NPolicy::Reject,
            NPolicyArg::SkipRecord => NPolicy::SkipRecord,
        },
    };
    let stdin = [PathBuf::from("-")];
    let inputs = if opts.inputs.is_empty() {
        &stdin[..]
    } else {
        &opts.inputs[..]
    };
    let mut seqs = Vec::new();
    for path in inputs {
        let parsed = if path == Path::new("-") {
            parse_fasta_with(io::stdin().lock(), &options)?
        } else {
            let file = File::open(path).map_err(|e| Failure::io(path.display(), e))?;
            parse_fasta_with(BufReader::new(file), &options)
                .map_err(|e| Failure::from(e).with_context(path.display()))?
        };
        for skipped in &parsed.skipped {
            eprintln!(
                "warning: skipped record {:?}: {}",
                skipped.id, skipped.reason
            );
        }
        seqs.extend(parsed.sequences);
    }
    Ok(seqs)
}

impl Failure {
    fn with_context(self, context: impl Display) -> Self {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("{context}: {m}")),
            Failure::Data(m) => Failure::Data(format!("{context}: {m}")),
            Failure::Io(m) => Failure::Io(format!("{context}: {m}")),
        }
    }
}

pub fn hash(args: HashArgs) -> Result<(), Failure> {
    let strategy = strategy(args.hash.strategy, args.hash.width)?;
    let seqs = read_fasta(&args.fasta)?;
    let hashes = seqs
        .par_iter()
        .map(|s| {
            compute_hash(s, &strategy)
                .map_err(|e| Failure::from(e).with_context(format!("record {:?}", s.id())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_to(None, |out| {
        for (s, h) in seqs.iter().zip(&hashes) {
            writeln!(out, "{}\t{}", s.id(), h)?;
        }
        Ok(())
    })
}

pub fn index(args: IndexArgs) -> Result<(), Failure> {
    let strategy = strategy(args.hash.strategy, args.hash.width)?;
    let seqs = read_fasta(&args.fasta)?;
    let idx = match args.window {
        Some(window) => build_index_windowed(
            &seqs,
            strategy,
            Windowing {
                window,
                step: args.step.unwrap_or(window),
            },
        )?,
        None => build_index(&seqs, strategy)?,
    };
    let bytes = idx.to_bytes()?;
    write_atomically(&args.output, |out| Ok(out.write_all(&bytes)?))?;
    eprintln!(
        "indexed {} records ({} bits, {}) into {}",
        idx.len(),
        idx.width(),
        idx.strategy_kind(),
        args.output.display()
    );
    Ok(())
}

pub fn query(args: QueryArgs) -> Result<(), Failure> {
    let file = File::open(&args.index).map_err(|e| Failure::io(args.index.display(), e))?;
    let idx = HashIndex::load(BufReader::new(file))
        .map_err(|e| Failure::from(e).with_context(args.index.display()))?;
    let strategy = idx.strategy();
    let seqs = read_fasta(&args.fasta)?;
    let results = seqs
        .par_iter()
        .map(|s| {
            let h = compute_hash(s, &strategy)?;
            match (args.max_dist, args.top_k) {
                (Some(d), _) => idx.query(&h, d),
                (None, Some(k)) => idx.query_topk(&h, k),
                (None, None) => unreachable!("clap requires one mode"),
            }
            .map_err(Failure::from)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    write_to(None, |out| {
        for (s, hits) in seqs.iter().zip(&results) {
            for m in hits {
                writeln!(out, "{}\t{}\t{}", s.id(), m.id, m.distance)?;
            }
        }
        Ok(())
    })
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig, Failure> {
    let mut cfg = match (&args.group, args.len, args.width) {
        (Some(label), _, _) => {
            let preset: GroupPreset = label.parse()?;
            let mut cfg = preset.config(args.n, args.seed);
            cfg.strategy = strategy(args.strategy, preset.hash_width())?;
            cfg
        }
        (None, Some(len), Some(width)) => SimulationConfig {
            group: format!("custom_{len}bp_{width}bit"),
            seq_len: len,
            strategy: strategy(args.strategy, width)?,
            divergence_rates: DEFAULT_RATES.to_vec(),
            n_primary: args.n,
            seed: args.seed,
        },
        _ => {
            return Err(Failure::Usage(
                "simulate needs --group or both --len and --width".into(),
            ))
        }
    };
    if let Some(rates) = &args.rates {
        cfg.divergence_rates = rates.clone();
    }
    if args.identity_control && !cfg.divergence_rates.contains(&0.0) {
        cfg.divergence_rates.insert(0, 0.0);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = simulation_config(&args)?;
    let histogram = match &args.per_pair {
        Some(path) => {
            let pairs = run_pairs(&cfg)?;
            write_atomically(path, |out| Ok(write_pairs_csv(&pairs, out)?))?;
            DistanceHistogram::from_pairs(&cfg, &pairs)
        }
        None => run_group(&cfg)?,
    };
    write_to(args.output.as_deref(), |out| {
        Ok(write_histogram_csv(&histogram, out)?)
    })
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    let strategy = strategy(args.strategy, args.width)?;
    let report = measure_throughput(args.len, strategy, args.n, args.seed)?;
    write_to(None, |out| Ok(report.write_report(out)?))
}
