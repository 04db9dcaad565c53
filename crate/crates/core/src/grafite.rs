//! The Grafite range filter.
//!
//! Keys are mapped into a reduced universe `[0, r)` with the locality hash of
//! [`PairwiseHash`], and the deduplicated sorted codes are stored with
//! [`EliasFano`]. A range `[a, b]` inside one block of width `r` maps to a
//! contiguous (possibly wrapping) arc of codes, so emptiness reduces to one
//! predecessor query or a comparison against the first and last code.
//!
//! With `r = ⌈n·L/ε⌉` a query of length `ℓ ≤ L` is a false positive with
//! probability at most `ℓ·ε/L`, independently of how queries relate to keys.

use log::warn;

use crate::codec::{ByteReader, ByteWriter};
use crate::eliasfano::EliasFano;
use crate::error::{Error, Result};
use crate::modhash::{PairwiseHash, MAX_REDUCED_UNIVERSE};

const MAGIC: &str = "GRFT";
const VERSION: u32 = 1;

/// Default universe: all 64-bit keys.
pub const FULL_UNIVERSE: u128 = 1 << 64;

/// Outcome of a range-emptiness query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    /// No key lies in the range.
    Empty,
    /// Some key may lie in the range.
    NotEmpty,
}

impl Answer {
    pub fn is_empty(self) -> bool {
        self == Answer::Empty
    }

    fn from_bool(not_empty: bool) -> Self {
        if not_empty {
            Answer::NotEmpty
        } else {
            Answer::Empty
        }
    }
}

/// A false-positive probability stored as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Epsilon {
    num: u64,
    den: u64,
}

impl Epsilon {
    /// `num / den`, which must lie strictly between 0 and 1.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::InvalidEpsilon(num as f64 / den as f64));
        }
        Ok(Self::reduced(num, den))
    }

    /// Closest fraction with denominator at most 2^32.
    pub fn from_f64(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEpsilon(eps));
        }
        let (num, den) = best_rational(eps, 1 << 32);
        Self::from_ratio(num, den).map_err(|_| Error::InvalidEpsilon(eps))
    }

    fn reduced(num: u64, den: u64) -> Self {
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Continued-fraction convergents of `x` with denominator capped at `max_den`.
fn best_rational(x: f64, max_den: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a > u64::MAX as f64 {
            break;
        }
        let a = a as u64;
        let Some(q2) = a.checked_mul(q1).and_then(|t| t.checked_add(q0)) else {
            break;
        };
        if q2 > max_den {
            break;
        }
        let p2 = a * p1 + p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a as f64;
        if frac.abs() < 1e-15 || (p1 as f64 / q1 as f64 - x).abs() <= f64::EPSILON * x {
            break;
        }
        v = 1.0 / frac;
    }
    (p1, q1.max(1))
}

/// `2^(B−2)` keys of reduced universe per key for a budget of `B` bits.
pub fn budget_slots_per_key(bits_per_key: u32) -> u128 {
    1u128 << (bits_per_key - 2)
}

/// Analytic false-positive bound `min{1, ℓ/2^(B−2)}` for a budgeted filter.
pub fn budget_fpr_bound(bits_per_key: u32, range_size: u64) -> f64 {
    (range_size as f64 / budget_slots_per_key(bits_per_key) as f64).min(1.0)
}

/// Expected number of duplicated hash codes, `ε(n−1)/(2L)`.
pub fn expected_duplicates(n: u64, max_range: u64, epsilon: f64) -> f64 {
    epsilon * (n.saturating_sub(1)) as f64 / (2.0 * max_range as f64)
}

#[derive(Debug, Clone, Copy)]
enum Sizing {
    Target { max_range: u64, epsilon: Epsilon },
    Budget { bits_per_key: u32, range_hint: u64 },
}

/// Configures and builds a [`GrafiteFilter`].
#[derive(Debug, Clone)]
pub struct GrafiteBuilder {
    sizing: Sizing,
    seed: u64,
    universe: u128,
    coefficients: Option<(u128, u128, u128)>,
}

impl GrafiteBuilder {
    /// Targets false-positive probability `epsilon` for ranges of size `max_range`.
    pub fn new(max_range: u64, epsilon: Epsilon) -> Self {
        Self::with_sizing(Sizing::Target { max_range, epsilon })
    }

    /// Spends `bits_per_key` bits per key; `range_hint` only affects the
    /// reported `L` and `ε`.
    pub fn with_budget(bits_per_key: u32, range_hint: Option<u64>) -> Self {
        Self::with_sizing(Sizing::Budget {
            bits_per_key,
            range_hint: range_hint.unwrap_or(1),
        })
    }

    fn with_sizing(sizing: Sizing) -> Self {
        Self {
            sizing,
            seed: 0,
            universe: FULL_UNIVERSE,
            coefficients: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Key universe `[0, u)`; `r` is capped at `u`.
    pub fn universe(mut self, universe: u128) -> Self {
        self.universe = universe;
        self
    }

    /// Fixes the hash parameters instead of drawing them from the seed.
    pub fn hash_coefficients(mut self, p: u128, c1: u128, c2: u128) -> Self {
        self.coefficients = Some((p, c1, c2));
        self
    }

    pub fn build(&self, keys: &[u64]) -> Result<GrafiteFilter> {
        if keys.is_empty() {
            return Err(Error::EmptyKeys);
        }
        if self.universe == 0 || self.universe > FULL_UNIVERSE {
            return Err(Error::InvalidUniverse(self.universe));
        }
        if let Some(&k) = keys.iter().find(|&&k| k as u128 >= self.universe) {
            return Err(Error::OutOfUniverse {
                value: k,
                universe: self.universe,
            });
        }
        let n = keys.len() as u64;
        let (max_range, epsilon, r) = match self.sizing {
            Sizing::Target { max_range, epsilon } => {
                if max_range == 0 {
                    return Err(Error::InvalidRangeSize);
                }
                // r = ⌈n·L/ε⌉ = ⌈n·L·den/num⌉, saturating at the universe.
                let r = (n as u128)
                    .checked_mul(max_range as u128)
                    .and_then(|t| t.checked_mul(epsilon.den as u128))
                    .map(|t| t.div_ceil(epsilon.num as u128))
                    .unwrap_or(u128::MAX);
                let limit = self.universe as f64 * epsilon.as_f64() / n as f64;
                if max_range as f64 > limit {
                    warn!(
                        "range size {max_range} exceeds u·ε/n = {limit:.3}; \
                         the false-positive guarantee weakens"
                    );
                }
                (max_range, epsilon, r)
            }
            Sizing::Budget {
                bits_per_key,
                range_hint,
            } => {
                if !(3..=64).contains(&bits_per_key) {
                    return Err(Error::InvalidBudget(bits_per_key as f64));
                }
                let slots = budget_slots_per_key(bits_per_key);
                let epsilon = Epsilon::reduced(range_hint.max(1), slots as u64);
                (range_hint.max(1), epsilon, n as u128 * slots)
            }
        };
        let r = r.min(self.universe).min(MAX_REDUCED_UNIVERSE);
        let hash = match self.coefficients {
            Some((p, c1, c2)) => PairwiseHash::with_coefficients(r, p, c1, c2)?,
            None => PairwiseHash::new(r, self.seed, None)?,
        };
        let mut codes: Vec<u64> = keys.iter().map(|&k| hash.h(k)).collect();
        codes.sort_unstable();
        codes.dedup();
        let codes = EliasFano::build(&codes, r)?;
        Ok(GrafiteFilter {
            hash,
            codes,
            n,
            max_range,
            epsilon,
            universe: self.universe,
        })
    }
}

/// Static approximate range-emptiness filter with a workload-independent
/// false-positive guarantee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrafiteFilter {
    hash: PairwiseHash,
    codes: EliasFano,
    n: u64,
    max_range: u64,
    epsilon: Epsilon,
    universe: u128,
}

impl GrafiteFilter {
    /// Builds over the full 64-bit universe with `r = ⌈n·L/ε⌉`.
    pub fn build(keys: &[u64], max_range: u64, epsilon: f64, seed: u64) -> Result<Self> {
        GrafiteBuilder::new(max_range, Epsilon::from_f64(epsilon)?)
            .seed(seed)
            .build(keys)
    }

    /// Builds with `r = n·2^(B−2)`, giving false-positive probability at most
    /// `min{1, ℓ/2^(B−2)}` for ranges of size `ℓ`.
    pub fn build_with_budget(
        keys: &[u64],
        bits_per_key: u32,
        range_hint: Option<u64>,
        seed: u64,
    ) -> Result<Self> {
        GrafiteBuilder::with_budget(bits_per_key, range_hint)
            .seed(seed)
            .build(keys)
    }

    pub fn hash(&self) -> &PairwiseHash {
        &self.hash
    }

    pub fn codes(&self) -> &EliasFano {
        &self.codes
    }

    pub fn reduced_universe(&self) -> u128 {
        self.hash.reduced_universe()
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    /// Number of keys the filter was built from.
    pub fn key_count(&self) -> u64 {
        self.n
    }

    /// Number of distinct stored codes.
    pub fn code_count(&self) -> usize {
        self.codes.len()
    }

    pub fn max_range(&self) -> u64 {
        self.max_range
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    /// Payload size: low parts, high parts and select samples.
    pub fn size_in_bits(&self) -> u64 {
        self.codes.size_in_bits()
    }

    pub fn bits_per_key(&self) -> f64 {
        self.size_in_bits() as f64 / self.n as f64
    }

    fn check_range(&self, a: u64, b: u64) -> Result<()> {
        if a > b {
            return Err(Error::InvalidRange { a, b });
        }
        if b as u128 >= self.universe {
            return Err(Error::OutOfUniverse {
                value: b,
                universe: self.universe,
            });
        }
        Ok(())
    }

    /// Answers whether `[a, b]` may contain a key. Never returns
    /// [`Answer::Empty`] for a range holding a key.
    pub fn query(&self, a: u64, b: u64) -> Result<Answer> {
        self.check_range(a, b)?;
        Ok(Answer::from_bool(self.may_contain(a, b)))
    }

    /// Unchecked form of [`query`](Self::query); requires `a ≤ b`.
    #[inline]
    pub fn may_contain(&self, a: u64, b: u64) -> bool {
        match self.split(a, b) {
            Span::Covering => true,
            Span::Block(a, b) => self.block_may_contain(a, b),
            Span::Straddling(left, right) => {
                self.block_may_contain(left.0, left.1) || self.block_may_contain(right.0, right.1)
            }
        }
    }

    /// Number of stored codes inside the hashed image of `[a, b]`, capped at the
    /// code count. Zero exactly when [`query`](Self::query) answers `Empty`.
    pub fn approx_count(&self, a: u64, b: u64) -> Result<u64> {
        self.check_range(a, b)?;
        let m = self.codes.len() as u64;
        let count = match self.split(a, b) {
            Span::Covering => m,
            Span::Block(a, b) => self.block_count(a, b),
            Span::Straddling(left, right) => {
                self.block_count(left.0, left.1) + self.block_count(right.0, right.1)
            }
        };
        Ok(count.min(m))
    }

    #[inline]
    fn split(&self, a: u64, b: u64) -> Span {
        let r = self.hash.reduced_universe();
        let width = (b - a) as u128 + 1;
        if width >= r {
            return Span::Covering;
        }
        let (block_a, block_b) = (a as u128 / r, b as u128 / r);
        match block_b - block_a {
            0 => Span::Block(a, b),
            1 => {
                let right_start = b - (b as u128 % r) as u64;
                Span::Straddling((a, right_start - 1), (right_start, b))
            }
            // Unreachable while width < r, kept for clarity.
            _ => Span::Covering,
        }
    }

    /// `[a, b]` within one block of width `r`.
    #[inline]
    fn block_may_contain(&self, a: u64, b: u64) -> bool {
        let (ha, hb) = (self.hash.h(a), self.hash.h(b));
        if ha <= hb {
            self.codes.predecessor(hb).is_some_and(|z| z >= ha)
        } else {
            self.codes.first() <= hb || self.codes.last() >= ha
        }
    }

    fn block_count(&self, a: u64, b: u64) -> u64 {
        let (ha, hb) = (self.hash.h(a), self.hash.h(b));
        let below_ha = if ha == 0 { 0 } else { self.codes.rank(ha - 1) } as u64;
        let upto_hb = self.codes.rank(hb) as u64;
        if ha <= hb {
            upto_hb - below_ha
        } else {
            upto_hb + self.codes.len() as u64 - below_ha
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC.as_bytes());
        w.u32(VERSION);
        w.u64(self.n);
        w.u64(self.codes.len() as u64);
        w.u64(self.max_range);
        w.u64(self.epsilon.num);
        w.u64(self.epsilon.den);
        w.u128(self.hash.reduced_universe());
        w.u128(self.hash.prime());
        w.u128(self.hash.c1());
        w.u128(self.hash.c2());
        w.u128(self.universe);
        self.codes.write_to(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = ByteReader::new(bytes);
        rd.magic(MAGIC)?;
        let version = rd.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = rd.u64()?;
        let m = rd.u64()?;
        let max_range = rd.u64()?;
        let (num, den) = (rd.u64()?, rd.u64()?);
        let r = rd.u128()?;
        let (p, c1, c2) = (rd.u128()?, rd.u128()?, rd.u128()?);
        let universe = rd.u128()?;
        let codes = EliasFano::read_from(&mut rd)?;
        rd.finish()?;
        if num == 0 || den == 0 || max_range == 0 {
            return Err(Error::Corrupt("filter parameters"));
        }
        if universe == 0 || universe > FULL_UNIVERSE || r > universe {
            return Err(Error::Corrupt("universe"));
        }
        if codes.len() as u64 != m || m > n || codes.bound() != r {
            return Err(Error::Corrupt("code count or bound"));
        }
        let hash = PairwiseHash::with_coefficients(r, p, c1, c2)?;
        Ok(Self {
            hash,
            codes,
            n,
            max_range,
            epsilon: Epsilon::reduced(num, den),
            universe,
        })
    }
}

enum Span {
    Covering,
    Block(u64, u64),
    Straddling((u64, u64), (u64, u64)),
}
