//! Bucketing: split the universe into buckets of width `s` and keep the
//! Elias-Fano encoded list of buckets holding at least one key.
//!
//! Queries are answered by a single predecessor search over bucket indices.
//! Unlike Grafite there is no guarantee on the false-positive rate: a query
//! sitting next to a key inside the same bucket is always a false positive.

use crate::codec::{ByteReader, ByteWriter};
use crate::eliasfano::EliasFano;
use crate::error::{Error, Result};
use crate::grafite::{Answer, FULL_UNIVERSE};

const MAGIC: &str = "BCKT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketingFilter {
    shift: u32,
    universe: u128,
    n: u64,
    buckets: EliasFano,
}

fn width_shift(bucket_width: u128) -> Result<u32> {
    if bucket_width == 0 || !bucket_width.is_power_of_two() || bucket_width > FULL_UNIVERSE {
        return Err(Error::InvalidBucketWidth(bucket_width));
    }
    Ok(bucket_width.trailing_zeros())
}

fn check_universe(universe: u128) -> Result<()> {
    if universe == 0 || universe > FULL_UNIVERSE {
        return Err(Error::InvalidUniverse(universe));
    }
    Ok(())
}

#[inline]
fn bucket_of(x: u64, shift: u32) -> u64 {
    if shift >= 64 {
        0
    } else {
        x >> shift
    }
}

impl BucketingFilter {
    /// Builds with bucket width `bucket_width` (a power of two) over `[0, universe)`.
    pub fn build(keys: &[u64], bucket_width: u128, universe: u128) -> Result<Self> {
        let shift = width_shift(bucket_width)?;
        check_universe(universe)?;
        let sorted = sorted_keys(keys, universe)?;
        Self::from_sorted(&sorted, keys.len() as u64, shift, universe)
    }

    /// Picks the smallest power-of-two bucket width whose filter fits in
    /// `bits_per_key · n` bits. Falls back to a single bucket when none does.
    pub fn build_with_budget(keys: &[u64], bits_per_key: f64, universe: u128) -> Result<Self> {
        if bits_per_key.is_nan() || bits_per_key <= 0.0 {
            return Err(Error::InvalidBudget(bits_per_key));
        }
        check_universe(universe)?;
        let sorted = sorted_keys(keys, universe)?;
        let n = keys.len() as u64;
        let budget = bits_per_key * n as f64;
        // The smallest shift giving a single bucket.
        let last_shift = 128 - (universe - 1).leading_zeros();
        let mut filter = None;
        for shift in 0..=last_shift {
            let f = Self::from_sorted(&sorted, n, shift, universe)?;
            let fits = f.size_in_bits() as f64 <= budget;
            filter = Some(f);
            if fits {
                break;
            }
        }
        Ok(filter.expect("loop runs at least once"))
    }

    fn from_sorted(sorted: &[u64], n: u64, shift: u32, universe: u128) -> Result<Self> {
        let mut indices: Vec<u64> = sorted.iter().map(|&k| bucket_of(k, shift)).collect();
        indices.dedup();
        let bound = (universe + (1u128 << shift) - 1) >> shift;
        Ok(Self {
            shift,
            universe,
            n,
            buckets: EliasFano::build(&indices, bound)?,
        })
    }

    pub fn bucket_width(&self) -> u128 {
        1u128 << self.shift
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    /// Number of buckets `⌈u/s⌉`.
    pub fn bucket_count(&self) -> u128 {
        self.buckets.bound()
    }

    /// Number of occupied buckets `t`.
    pub fn occupied(&self) -> usize {
        self.buckets.len()
    }

    pub fn buckets(&self) -> &EliasFano {
        &self.buckets
    }

    pub fn key_count(&self) -> u64 {
        self.n
    }

    pub fn size_in_bits(&self) -> u64 {
        self.buckets.size_in_bits()
    }

    pub fn bits_per_key(&self) -> f64 {
        self.size_in_bits() as f64 / self.n as f64
    }

    /// Space formula `t·(log2(u/(t·s)) + 2)` without select samples, with
    /// `u/s` rounded up to whole buckets.
    pub fn space_formula_bits(&self) -> f64 {
        let t = self.occupied() as f64;
        t * ((self.bucket_count() as f64 / t).log2() + 2.0)
    }

    pub fn query(&self, a: u64, b: u64) -> Result<Answer> {
        if a > b {
            return Err(Error::InvalidRange { a, b });
        }
        if b as u128 >= self.universe {
            return Err(Error::OutOfUniverse {
                value: b,
                universe: self.universe,
            });
        }
        Ok(if self.may_contain(a, b) {
            Answer::NotEmpty
        } else {
            Answer::Empty
        })
    }

    #[inline]
    pub fn may_contain(&self, a: u64, b: u64) -> bool {
        let (ba, bb) = (bucket_of(a, self.shift), bucket_of(b, self.shift));
        self.buckets.predecessor(bb).is_some_and(|z| z >= ba)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC.as_bytes());
        w.u32(VERSION);
        w.u128(self.bucket_width());
        w.u128(self.universe);
        w.u64(self.n);
        self.buckets.write_to(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let shift = width_shift(r.u128()?).map_err(|_| Error::Corrupt("bucket width"))?;
        let universe = r.u128()?;
        check_universe(universe).map_err(|_| Error::Corrupt("universe"))?;
        let n = r.u64()?;
        let buckets = EliasFano::read_from(&mut r)?;
        r.finish()?;
        let bound = (universe + (1u128 << shift) - 1) >> shift;
        if buckets.bound() != bound || buckets.len() as u64 > n {
            return Err(Error::Corrupt("bucket sequence"));
        }
        Ok(Self {
            shift,
            universe,
            n,
            buckets,
        })
    }
}

fn sorted_keys(keys: &[u64], universe: u128) -> Result<Vec<u64>> {
    if keys.is_empty() {
        return Err(Error::EmptyKeys);
    }
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let max = *sorted.last().unwrap();
    if max as u128 >= universe {
        return Err(Error::OutOfUniverse {
            value: max,
            universe,
        });
    }
    Ok(sorted)
}
