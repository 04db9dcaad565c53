//! Key sets and query workloads.
//!
//! Generators are pure functions of their seed. Correlated workloads place the
//! left endpoint of each range within `2^{30(1−D)}` of a randomly chosen key, so
//! `D = 1` produces ranges starting right at (or just after) a key.
//!
//! Datasets on disk use the common benchmark layout: a little-endian `u64`
//! count followed by that many little-endian `u64` values. Workload files use
//! the same count prefix followed by `(a, b)` pairs.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grafite::FULL_UNIVERSE;
use crate::rng::{self, SeededRng};

/// Correlation degree used when none is given.
pub const DEFAULT_CORRELATION: f64 = 0.8;

/// Candidate draws allowed per requested range when enforcing emptiness.
pub const EMPTY_RETRY_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkloadKind {
    Uncorrelated { universe: u128 },
    Correlated { degree: f64, universe: u128 },
    TrueQueries { universe: u128 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryWorkload {
    /// Closed ranges `[a, b]`.
    pub ranges: Vec<(u64, u64)>,
    pub range_size: u64,
    pub kind: WorkloadKind,
    pub seed: u64,
}

impl QueryWorkload {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Whether the sorted `keys` hold a value inside `[a, b]`.
#[inline]
pub fn intersects(keys: &[u64], a: u64, b: u64) -> bool {
    let i = keys.partition_point(|&k| k < a);
    i < keys.len() && keys[i] <= b
}

/// `n` distinct keys uniform in `[0, u)`, sorted.
pub fn gen_uniform_keys(n: usize, universe: u128, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidWorkload(
            "key count must be at least 1".into(),
        ));
    }
    if universe == 0 || universe > FULL_UNIVERSE {
        return Err(Error::InvalidUniverse(universe));
    }
    if n as u128 > universe {
        return Err(Error::InvalidWorkload(format!(
            "cannot draw {n} distinct keys from a universe of {universe}"
        )));
    }
    if n as u128 == universe {
        return Ok((0..n as u64).collect());
    }
    let mut rng = rng::seeded(seed);
    let mut keys: Vec<u64> = if (n as u128) * 2 > universe {
        // Dense: sample without replacement from the index space.
        rand::seq::index::sample(&mut rng, universe as usize, n)
            .into_iter()
            .map(|i| i as u64)
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let k = draw_below(&mut rng, universe);
            if seen.insert(k) {
                out.push(k);
            }
        }
        out
    };
    keys.sort_unstable();
    Ok(keys)
}

#[inline]
fn draw_below(rng: &mut SeededRng, universe: u128) -> u64 {
    if universe == FULL_UNIVERSE {
        rng.random()
    } else {
        rng.random_range(0..universe as u64)
    }
}

/// Draws candidate ranges for one workload kind.
enum Sampler<'a> {
    Uniform {
        max_start: u64,
        ell: u64,
    },
    Correlated {
        keys: &'a [u64],
        max_offset: u64,
        max_start: u64,
        ell: u64,
    },
    True {
        keys: &'a [u64],
        max_start: u64,
        ell: u64,
    },
}

impl Sampler<'_> {
    fn draw(&self, rng: &mut SeededRng) -> (u64, u64) {
        match *self {
            Sampler::Uniform { max_start, ell } => {
                let a = rng.random_range(0..=max_start);
                (a, a + (ell - 1))
            }
            Sampler::Correlated {
                keys,
                max_offset,
                max_start,
                ell,
            } => {
                let k = keys[rng.random_range(0..keys.len())];
                let offset = rng.random_range(0..=max_offset);
                let a = k.saturating_add(offset).min(max_start);
                (a, a + (ell - 1))
            }
            Sampler::True {
                keys,
                max_start,
                ell,
            } => {
                let k = keys[rng.random_range(0..keys.len())];
                let lo = k.saturating_sub(ell - 1);
                let a = rng.random_range(lo..=k.min(max_start));
                (a, a + (ell - 1))
            }
        }
    }
}

fn max_start(ell: u64, universe: u128) -> Result<u64> {
    if ell == 0 {
        return Err(Error::InvalidWorkload(
            "range size must be at least 1".into(),
        ));
    }
    if universe == 0 || universe > FULL_UNIVERSE {
        return Err(Error::InvalidUniverse(universe));
    }
    if ell as u128 > universe {
        return Err(Error::InvalidWorkload(format!(
            "range size {ell} exceeds the universe {universe}"
        )));
    }
    Ok((universe - ell as u128) as u64)
}

/// Largest correlated offset, `⌊2^{30(1−D)}⌋`.
pub fn correlated_offset_bound(degree: f64) -> u64 {
    // 30·(1 − 0.8) evaluates to 5.999…; snap the exponent before flooring.
    let exponent = (30.0 * (1.0 - degree) * 1e9).round() / 1e9;
    exponent.exp2().floor() as u64
}

fn sampler<'a>(kind: WorkloadKind, keys: &'a [u64], ell: u64) -> Result<Sampler<'a>> {
    Ok(match kind {
        WorkloadKind::Uncorrelated { universe } => Sampler::Uniform {
            max_start: max_start(ell, universe)?,
            ell,
        },
        WorkloadKind::Correlated { degree, universe } => {
            if !(0.0..=1.0).contains(&degree) {
                return Err(Error::InvalidWorkload(format!(
                    "correlation degree {degree} outside [0, 1]"
                )));
            }
            if keys.is_empty() {
                return Err(Error::EmptyKeys);
            }
            Sampler::Correlated {
                keys,
                max_offset: correlated_offset_bound(degree),
                max_start: max_start(ell, universe)?,
                ell,
            }
        }
        WorkloadKind::TrueQueries { universe } => {
            if keys.is_empty() {
                return Err(Error::EmptyKeys);
            }
            if let Some(&k) = keys.iter().find(|&&k| k as u128 >= universe) {
                return Err(Error::OutOfUniverse { value: k, universe });
            }
            Sampler::True {
                keys,
                max_start: max_start(ell, universe)?,
                ell,
            }
        }
    })
}

fn generate(
    kind: WorkloadKind,
    keys: &[u64],
    n_queries: usize,
    ell: u64,
    seed: u64,
) -> Result<QueryWorkload> {
    let sampler = sampler(kind, keys, ell)?;
    let mut rng = rng::seeded(seed);
    let ranges = (0..n_queries).map(|_| sampler.draw(&mut rng)).collect();
    Ok(QueryWorkload {
        ranges,
        range_size: ell,
        kind,
        seed,
    })
}

/// Ranges `[x, x+ℓ−1]` with `x` uniform in `[0, u−ℓ]`.
pub fn gen_uncorrelated_queries(
    n_queries: usize,
    ell: u64,
    universe: u128,
    seed: u64,
) -> Result<QueryWorkload> {
    generate(
        WorkloadKind::Uncorrelated { universe },
        &[],
        n_queries,
        ell,
        seed,
    )
}

/// Ranges starting at `x` uniform in `[k, k + ⌊2^{30(1−D)}⌋]` for a random key
/// `k`, clamped so the range stays inside the universe.
pub fn gen_correlated_queries(
    keys: &[u64],
    n_queries: usize,
    ell: u64,
    degree: f64,
    universe: u128,
    seed: u64,
) -> Result<QueryWorkload> {
    generate(
        WorkloadKind::Correlated { degree, universe },
        keys,
        n_queries,
        ell,
        seed,
    )
}

/// Ranges guaranteed to contain a key: left endpoint uniform in `[k−ℓ+1, k]`.
pub fn gen_true_queries(
    keys: &[u64],
    n_queries: usize,
    ell: u64,
    universe: u128,
    seed: u64,
) -> Result<QueryWorkload> {
    generate(
        WorkloadKind::TrueQueries { universe },
        keys,
        n_queries,
        ell,
        seed,
    )
}

/// Replays the workload's generator and keeps only ranges holding no key,
/// until as many ranges as the input are collected. Gives up after
/// [`EMPTY_RETRY_FACTOR`] draws per requested range.
///
/// `keys` must be sorted and, for correlated workloads, be the keys the
/// workload was generated from.
pub fn enforce_empty(workload: &QueryWorkload, keys: &[u64]) -> Result<QueryWorkload> {
    if matches!(workload.kind, WorkloadKind::TrueQueries { .. }) {
        return Err(Error::InvalidWorkload(
            "true-query workloads cannot be made empty".into(),
        ));
    }
    let wanted = workload.ranges.len();
    let sampler = sampler(workload.kind, keys, workload.range_size)?;
    let mut rng = rng::seeded(workload.seed);
    let cap = wanted.saturating_mul(EMPTY_RETRY_FACTOR);
    let mut ranges = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while ranges.len() < wanted {
        if attempts == cap {
            return Err(Error::RetryCapExceeded {
                wanted,
                collected: ranges.len(),
                attempts,
            });
        }
        attempts += 1;
        let (a, b) = sampler.draw(&mut rng);
        if !intersects(keys, a, b) {
            ranges.push((a, b));
        }
    }
    Ok(QueryWorkload {
        ranges,
        ..workload.clone()
    })
}

/// Reads a count-prefixed little-endian `u64` key file; returns sorted distinct keys.
pub fn load_binary_dataset(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let count = read_u64(&mut reader)
        .map_err(|_| Error::InvalidDataset(format!("{}: missing count header", path.display())))?;
    if count == 0 {
        return Err(Error::InvalidDataset(format!(
            "{}: zero keys",
            path.display()
        )));
    }
    let len = std::fs::metadata(path)?.len();
    let needed = count.checked_mul(8).and_then(|b| b.checked_add(8));
    if needed.is_none_or(|needed| len < needed) {
        return Err(Error::InvalidDataset(format!(
            "{}: header announces {count} keys but the file holds {} bytes",
            path.display(),
            len
        )));
    }
    let mut buf = vec![0u8; count as usize * 8];
    reader.read_exact(&mut buf)?;
    let mut keys: Vec<u64> = buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys)
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Writes keys in the layout read by [`load_binary_dataset`].
pub fn write_binary_dataset(path: impl AsRef<Path>, keys: &[u64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(keys.len() as u64).to_le_bytes())?;
    for &k in keys {
        w.write_all(&k.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the ranges of a workload as a count followed by `(a, b)` pairs.
pub fn write_workload(path: impl AsRef<Path>, workload: &QueryWorkload) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(workload.ranges.len() as u64).to_le_bytes())?;
    for &(a, b) in &workload.ranges {
        w.write_all(&a.to_le_bytes())?;
        w.write_all(&b.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads ranges written by [`write_workload`].
pub fn read_workload_ranges(path: impl AsRef<Path>) -> Result<Vec<(u64, u64)>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::InvalidDataset("missing count header".into()));
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let body = &bytes[8..];
    if count.checked_mul(16) != Some(body.len() as u64) {
        return Err(Error::InvalidDataset(format!(
            "header announces {count} ranges but {} bytes follow",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(16)
        .map(|c| {
            (
                u64::from_le_bytes(c[..8].try_into().unwrap()),
                u64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}
