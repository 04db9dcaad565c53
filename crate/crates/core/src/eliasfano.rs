//! Elias-Fano encoding of a strictly increasing integer sequence.
//!
//! Each value `z` is split into a low part of `l` bits, stored in a packed
//! array, and a high part `z >> l`, stored in unary inside a bit vector where
//! the `i`-th value (1-based) sets position `hi(z_i) + i`. With
//! `l = ⌊log2(bound / m)⌋` the encoding takes at most `m·(log2(bound/m) + 2) + 1`
//! bits before select samples.
//!
//! The public positional API follows the usual succinct-structure convention:
//! `access(i)` takes `1 ≤ i ≤ m`, and `select0`/`select1` return 1-based bit
//! positions with `select(0) = 0`.

use crate::bits::{low_mask, words_for, PackedInts, SelectBits};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &str = "EFSQ";
const VERSION: u32 = 1;

/// A static monotone sequence with select, random access, rank and predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliasFano {
    len: usize,
    bound: u128,
    low: PackedInts,
    high: SelectBits,
    first: u64,
    last: u64,
}

/// `⌊log2(bound / m)⌋`, or 0 when `bound < m`.
pub fn low_bits_for(bound: u128, m: usize) -> u32 {
    let ratio = bound / m as u128;
    if ratio == 0 {
        0
    } else {
        127 - ratio.leading_zeros()
    }
}

impl EliasFano {
    /// Encodes `values`, which must be strictly increasing and below `bound`.
    pub fn build(values: &[u64], bound: u128) -> Result<Self> {
        let Some((&first, &last)) = values.first().zip(values.last()) else {
            return Err(Error::EmptyKeys);
        };
        if let Some(i) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Unsorted(i + 1));
        }
        if last as u128 >= bound {
            return Err(Error::OutOfUniverse {
                value: last,
                universe: bound,
            });
        }
        let m = values.len();
        let l = low_bits_for(bound, m);
        let mut low = PackedInts::with_len(l, m);
        let high_len = hi_part(last, l) as usize + m + 1;
        let mut high = vec![0u64; words_for(high_len)];
        for (i, &z) in values.iter().enumerate() {
            low.set(i, z);
            let pos = hi_part(z, l) as usize + i;
            high[pos / 64] |= 1 << (pos % 64);
        }
        Ok(Self {
            len: m,
            bound,
            low,
            high: SelectBits::new(high, high_len),
            first,
            last,
        })
    }

    /// Number of stored values `m`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Exclusive upper bound on the stored values.
    pub fn bound(&self) -> u128 {
        self.bound
    }

    /// Width `l` of the low parts.
    pub fn low_bits(&self) -> u32 {
        self.low.width()
    }

    /// Length of the high-part bit vector `H`.
    pub fn high_len(&self) -> usize {
        self.high.len()
    }

    /// Bits of the low-part array `V` (`m·l`).
    pub fn low_size_in_bits(&self) -> u64 {
        self.len as u64 * self.low.width() as u64
    }

    /// Bits spent on select samples.
    pub fn sample_size_in_bits(&self) -> u64 {
        self.high.sample_bits()
    }

    /// `m·l + |H| + samples`.
    pub fn size_in_bits(&self) -> u64 {
        self.low_size_in_bits() + self.high.len() as u64 + self.sample_size_in_bits()
    }

    /// Whether bit `pos` (1-based) of `H` is set.
    pub fn high_bit(&self, pos: usize) -> Option<bool> {
        (1..=self.high.len())
            .contains(&pos)
            .then(|| self.high.get(pos - 1))
    }

    /// 1-based position of the `k`-th zero of `H`; `select0(0) = 0`.
    pub fn select0(&self, k: usize) -> Result<usize> {
        match k {
            0 => Ok(0),
            k if k <= self.high.zeros() => Ok(self.high.select0(k - 1) + 1),
            _ => Err(Error::IndexOutOfRange {
                index: k,
                valid: format!("0..={}", self.high.zeros()),
            }),
        }
    }

    /// 1-based position of the `k`-th one of `H`; `select1(0) = 0`.
    pub fn select1(&self, k: usize) -> Result<usize> {
        match k {
            0 => Ok(0),
            k if k <= self.len => Ok(self.high.select1(k - 1) + 1),
            _ => Err(Error::IndexOutOfRange {
                index: k,
                valid: format!("0..={}", self.len),
            }),
        }
    }

    /// The `i`-th smallest value, `1 ≤ i ≤ m`.
    pub fn access(&self, i: usize) -> Result<u64> {
        if i == 0 || i > self.len {
            return Err(Error::IndexOutOfRange {
                index: i,
                valid: format!("1..={}", self.len),
            });
        }
        Ok(self.get(i - 1))
    }

    /// 0-based random access.
    #[inline]
    pub fn get(&self, index: usize) -> u64 {
        let hi = (self.high.select1(index) - index) as u64;
        join(hi, self.low.get(index), self.low.width())
    }

    pub fn first(&self) -> u64 {
        self.first
    }

    pub fn last(&self) -> u64 {
        self.last
    }

    /// Largest stored value `≤ y`.
    #[inline]
    pub fn predecessor(&self, y: u64) -> Option<u64> {
        self.rank_and_predecessor(y).1
    }

    /// Number of stored values `≤ y`.
    #[inline]
    pub fn rank(&self, y: u64) -> usize {
        self.rank_and_predecessor(y).0
    }

    /// Rank of `y` together with its predecessor.
    ///
    /// Locates the run of values sharing `hi(y)` through two `select0` calls,
    /// binary-searches their low parts, and falls back to the value right before
    /// the run when none of them is `≤ y`.
    pub fn rank_and_predecessor(&self, y: u64) -> (usize, Option<u64>) {
        if y >= self.last {
            return (self.len, Some(self.last));
        }
        if y < self.first {
            return (0, None);
        }
        let l = self.low.width();
        let p = hi_part(y, l) as usize;
        // y < last, so hi(y) ≤ hi(last) and the (p+1)-th zero exists.
        let start = if p == 0 {
            0
        } else {
            self.high.select0(p - 1) + 1 - p
        };
        let end = self.high.select0(p) - p;
        let lo_y = y & low_mask(l);
        let mut lo_idx = start;
        let mut hi_idx = end;
        while lo_idx < hi_idx {
            let mid = lo_idx + (hi_idx - lo_idx) / 2;
            if self.low.get(mid) <= lo_y {
                lo_idx = mid + 1;
            } else {
                hi_idx = mid;
            }
        }
        if lo_idx > start {
            let idx = lo_idx - 1;
            (idx + 1, Some(join(p as u64, self.low.get(idx), l)))
        } else if start > 0 {
            (start, Some(self.get(start - 1)))
        } else {
            (0, None)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.write_to(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let ef = Self::read_from(&mut r)?;
        r.finish()?;
        Ok(ef)
    }

    pub(crate) fn write_to(&self, w: &mut ByteWriter) {
        w.bytes(MAGIC.as_bytes());
        w.u32(VERSION);
        w.u64(self.len as u64);
        w.u128(self.bound);
        w.u8(self.low.width() as u8);
        w.u64(self.high.len() as u64);
        w.words(self.low.words());
        w.words(self.high.words());
        w.u64(self.high.one_samples().len() as u64);
        w.words(self.high.one_samples());
        w.u64(self.high.zero_samples().len() as u64);
        w.words(self.high.zero_samples());
    }

    pub(crate) fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let len = usize::try_from(r.u64()?).map_err(|_| Error::Corrupt("length"))?;
        let bound = r.u128()?;
        let l = r.u8()? as u32;
        let high_len = usize::try_from(r.u64()?).map_err(|_| Error::Corrupt("length"))?;
        if len == 0 || bound == 0 || l != low_bits_for(bound, len) {
            return Err(Error::Corrupt("inconsistent Elias-Fano header"));
        }
        let low_words = len
            .checked_mul(l as usize)
            .map(words_for)
            .ok_or(Error::Corrupt("length"))?;
        let low = r.words(low_words)?;
        let high = r.words(words_for(high_len))?;
        let n = r.len_prefix()?;
        let one_samples = r.words(n)?;
        let n = r.len_prefix()?;
        let zero_samples = r.words(n)?;

        let low = PackedInts::from_words(l, len, low).ok_or(Error::Corrupt("low parts"))?;
        let high = SelectBits::from_parts(high, high_len, one_samples, zero_samples)
            .ok_or(Error::Corrupt("high parts or select samples"))?;
        if high.ones() != len || high_len == 0 || high.get(high_len - 1) {
            return Err(Error::Corrupt("high parts"));
        }
        let mut ef = Self {
            len,
            bound,
            low,
            high,
            first: 0,
            last: 0,
        };
        ef.first = ef.get(0);
        ef.last = ef.get(len - 1);
        // The terminating zero must directly follow the last one.
        if hi_part(ef.last, l) as usize + len + 1 != high_len || ef.last as u128 >= bound {
            return Err(Error::Corrupt("high parts"));
        }
        Ok(ef)
    }
}

#[inline]
fn hi_part(z: u64, l: u32) -> u64 {
    if l >= 64 {
        0
    } else {
        z >> l
    }
}

#[inline]
fn join(hi: u64, lo: u64, l: u32) -> u64 {
    if l >= 64 {
        lo
    } else {
        (hi << l) | lo
    }
}
