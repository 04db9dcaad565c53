//! Pairwise-independent hashing over a prime field and the locality-preserving
//! reduction built on top of it.
//!
//! `q(x) = ((c1·x + c2) mod p) mod r` is drawn from the classic
//! Carter–Wegman family. The locality hash
//! `h(x) = (q(⌊x/r⌋) + x) mod r` maps every block of `r` consecutive keys
//! onto a rotation of `[0, r)`, so keys in the same block keep their pairwise
//! differences modulo `r` while distinct blocks are shifted independently.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// The Mersenne prime `2^89 − 1`, large enough for any reduced universe and
/// any 64-bit domain value.
pub const MERSENNE_89: u128 = (1 << 89) - 1;

/// Largest admissible reduced universe: the whole 64-bit key space.
pub const MAX_REDUCED_UNIVERSE: u128 = 1 << 64;

const MASK_25: u128 = (1 << 25) - 1;

/// A member of the pairwise-independent family `q` together with the
/// reduced universe size `r` used by the locality hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseHash {
    p: u128,
    c1: u128,
    c2: u128,
    r: u128,
}

impl PairwiseHash {
    /// Draws a random member of the family for reduced universe `r`.
    ///
    /// `c1` is uniform in `[1, p)` and `c2` uniform in `[0, p)`, both taken from
    /// a generator seeded with `seed`. Without `p_override` the prime is
    /// [`MERSENNE_89`].
    pub fn new(r: u128, seed: u64, p_override: Option<u128>) -> Result<Self> {
        let p = p_override.unwrap_or(MERSENNE_89);
        check_modulus(p, r)?;
        let mut rng = rng::seeded(seed);
        // `random_range` on integers is rejection-sampled, hence unbiased.
        let c1 = rng.random_range(1..p);
        let c2 = rng.random_range(0..p);
        Ok(Self { p, c1, c2, r })
    }

    /// Builds a hash with explicit parameters, e.g. to reproduce a fixed example.
    pub fn with_coefficients(r: u128, p: u128, c1: u128, c2: u128) -> Result<Self> {
        check_modulus(p, r)?;
        if c1 == 0 || c1 >= p || c2 >= p {
            return Err(Error::InvalidCoefficients { p, c1, c2 });
        }
        Ok(Self { p, c1, c2, r })
    }

    pub fn prime(&self) -> u128 {
        self.p
    }

    pub fn c1(&self) -> u128 {
        self.c1
    }

    pub fn c2(&self) -> u128 {
        self.c2
    }

    /// Reduced universe size `r`.
    pub fn reduced_universe(&self) -> u128 {
        self.r
    }

    /// `((c1·x + c2) mod p) mod r`, computed exactly.
    #[inline]
    pub fn q(&self, x: u64) -> u64 {
        let v = add_mod(mul_mod(self.c1, x, self.p), self.c2, self.p);
        // r ≤ 2^64, so the residue fits.
        (v % self.r) as u64
    }

    /// The locality hash `(q(⌊x/r⌋) + x) mod r`.
    #[inline]
    pub fn h(&self, x: u64) -> u64 {
        let x = x as u128;
        let block = (x / self.r) as u64;
        let q = self.q(block) as u128;
        ((q + x % self.r) % self.r) as u64
    }
}

fn check_modulus(p: u128, r: u128) -> Result<()> {
    if r == 0 || r > MAX_REDUCED_UNIVERSE {
        return Err(Error::InvalidReducedUniverse(r));
    }
    // The generic multiplication path doubles values below p, so p < 2^127.
    if p != MERSENNE_89 && (p >= 1 << 127 || !is_prime(p)) {
        return Err(Error::NotPrime(p));
    }
    if p <= r {
        return Err(Error::PrimeTooSmall { p, r });
    }
    Ok(())
}

#[inline]
fn add_mod(a: u128, b: u128, p: u128) -> u128 {
    // a, b < p < 2^127
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

/// `a·b mod p` for `a < p` and a 64-bit `b`.
#[inline]
pub(crate) fn mul_mod(a: u128, b: u64, p: u128) -> u128 {
    if p == MERSENNE_89 {
        mul_mod_m89(a, b)
    } else if p <= 1 << 64 {
        // a < 2^64 here, so the product fits in 128 bits.
        (a * b as u128) % p
    } else {
        mul_mod_generic(a, b as u128 % p, p)
    }
}

#[inline]
fn fold_m89(v: u128) -> u128 {
    let v = (v & MERSENNE_89) + (v >> 89);
    let v = (v & MERSENNE_89) + (v >> 89);
    if v >= MERSENNE_89 {
        v - MERSENNE_89
    } else {
        v
    }
}

/// Two-limb product reduced with `2^89 ≡ 1 (mod 2^89 − 1)`.
#[inline]
fn mul_mod_m89(a: u128, b: u64) -> u128 {
    let a_lo = a as u64 as u128;
    let a_hi = a >> 64; // < 2^25
    let b = b as u128;
    let lo = fold_m89(a_lo * b);
    // a_hi·b·2^64 with t = a_hi·b < 2^89: t·2^64 = (t >> 25)·2^89 + (t & (2^25−1))·2^64.
    let t = a_hi * b;
    let hi = fold_m89((t >> 25) + ((t & MASK_25) << 64));
    fold_m89(lo + hi)
}

fn mul_mod_generic(mut a: u128, mut b: u128, p: u128) -> u128 {
    let mut acc = 0;
    a %= p;
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod(acc, a, p);
        }
        a = add_mod(a, a, p);
        b >>= 1;
    }
    acc
}

fn mul_mod_full(a: u128, b: u128, p: u128) -> u128 {
    if p <= 1 << 64 {
        (a % p) * (b % p) % p
    } else {
        mul_mod_generic(a, b, p)
    }
}

fn pow_mod(mut base: u128, mut exp: u128, p: u128) -> u128 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_full(acc, base, p);
        }
        base = mul_mod_full(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Miller–Rabin with the first twelve prime bases: deterministic below 2^64,
/// a strong probable-prime test above.
pub fn is_prime(n: u128) -> bool {
    const BASES: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n == b {
            return true;
        }
        if n.is_multiple_of(b) {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_full(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const P31: u128 = (1 << 31) - 1;

    fn example_hash() -> PairwiseHash {
        PairwiseHash::with_coefficients(100, P31, 10, 5).unwrap()
    }

    #[test]
    fn example_q_values() {
        let h = example_hash();
        assert_eq!(h.q(0), 5);
        assert_eq!(h.q(1), 15);
    }

    #[test]
    fn example_locality_hash_values() {
        let h = example_hash();
        assert_eq!(h.h(44), 49);
        assert_eq!(h.h(47), 52);
        assert_eq!(h.h(9), 14);
        assert_eq!(h.h(191), 6);
        let keys = [9u64, 48, 50, 191, 226, 269, 335, 446, 487, 511];
        let codes: Vec<u64> = keys.iter().map(|&k| h.h(k)).collect();
        assert_eq!(codes, [14, 53, 55, 6, 51, 94, 70, 91, 32, 66]);
    }

    #[test]
    fn single_slot_universe_maps_to_zero() {
        for seed in 0..20 {
            let h = PairwiseHash::new(1, seed, None).unwrap();
            for x in [0, 1, 77, u64::MAX] {
                assert_eq!(h.q(x), 0);
                assert_eq!(h.h(x), 0);
            }
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = PairwiseHash::new(1 << 20, 42, None).unwrap();
        let b = PairwiseHash::new(1 << 20, 42, None).unwrap();
        assert_eq!((a.c1(), a.c2()), (b.c1(), b.c2()));
        let c = PairwiseHash::new(1 << 20, 43, None).unwrap();
        assert_ne!((a.c1(), a.c2()), (c.c1(), c.c2()));
        assert_eq!(a.prime(), MERSENNE_89);
    }

    #[test]
    fn identity_for_unit_multiplier() {
        let r = P31 - 1;
        let h = PairwiseHash::with_coefficients(r, P31, 1, 0).unwrap();
        for x in [0u64, 1, 12345, (r - 1) as u64] {
            assert_eq!(h.q(x), x);
        }
    }

    #[test]
    fn full_universe_is_identity() {
        let h = PairwiseHash::new(MAX_REDUCED_UNIVERSE, 9, None).unwrap();
        for x in [0u64, 1, 1 << 40, u64::MAX - 1, u64::MAX] {
            assert_eq!(h.h(x), x.wrapping_add(h.q(0)));
        }
        let h = PairwiseHash::with_coefficients(MAX_REDUCED_UNIVERSE, MERSENNE_89, 3, 0).unwrap();
        for x in [0u64, 5, u64::MAX] {
            assert_eq!(h.h(x), x);
        }
        let h = PairwiseHash::with_coefficients(1000, P31, 7, 0).unwrap();
        for x in 0..1000u64 {
            assert_eq!(h.h(x), x);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            PairwiseHash::new(0, 1, None),
            Err(Error::InvalidReducedUniverse(0))
        ));
        assert!(matches!(
            PairwiseHash::new(100, 1, Some(91)),
            Err(Error::NotPrime(91))
        ));
        assert!(matches!(
            PairwiseHash::new(100, 1, Some(97)),
            Err(Error::PrimeTooSmall { .. })
        ));
        assert!(PairwiseHash::with_coefficients(100, P31, 0, 5).is_err());
        assert!(PairwiseHash::with_coefficients(100, P31, 1, P31).is_err());
        assert!(PairwiseHash::new((1 << 64) + 1, 1, None).is_err());
    }

    #[test]
    fn primality() {
        let primes = [
            2u128,
            3,
            97,
            P31,
            (1 << 61) - 1,
            MERSENNE_89,
            18446744073709551557,
        ];
        for p in primes {
            assert!(is_prime(p), "{p}");
        }
        // 3215031751 is a strong pseudoprime to bases 2, 3, 5, 7.
        let composites = [
            0u128,
            1,
            4,
            91,
            561,
            3215031751,
            (1 << 64) + 1,
            MERSENNE_89 + 2,
        ];
        for c in composites {
            assert!(!is_prime(c), "{c}");
        }
    }

    fn mul_mod_bigint_oracle(a: u128, b: u64, p: u128) -> u128 {
        // Horner over the bits of b, independent of the limb-splitting path.
        let mut acc = 0u128;
        for bit in (0..64).rev() {
            acc = mul_mod_generic(acc, 2, p);
            if (b >> bit) & 1 == 1 {
                acc = add_mod(acc, a % p, p);
            }
        }
        acc
    }

    proptest::proptest! {
        #[test]
        fn mersenne_product_matches_generic(a in 0u128..MERSENNE_89, b: u64) {
            proptest::prop_assert_eq!(mul_mod_m89(a, b), mul_mod_bigint_oracle(a, b, MERSENNE_89));
        }

        #[test]
        fn block_shift_invariance(seed: u64, r in 1u128..(1 << 40), x: u64, d in 0u64..(1 << 40)) {
            let h = PairwiseHash::new(r, seed, None).unwrap();
            let base = (x as u128 / r) * r;
            let x = x as u128;
            let y = base + (x - base + d as u128) % r;
            if y <= u64::MAX as u128 {
                let (hx, hy) = (h.h(x as u64) as u128, h.h(y as u64) as u128);
                proptest::prop_assert!(hx < r && hy < r);
                proptest::prop_assert_eq!((hy + r - hx) % r, (y % r + r - x % r) % r);
            }
        }

        #[test]
        fn output_in_range(seed: u64, r in 1u128..=(1 << 64), x: u64) {
            let h = PairwiseHash::new(r, seed, None).unwrap();
            proptest::prop_assert!((h.q(x) as u128) < r);
            proptest::prop_assert!((h.h(x) as u128) < r);
            proptest::prop_assert_eq!(h.h(x), h.h(x));
        }
    }

    #[test]
    fn collision_frequency_within_bound() {
        // Distinct blocks, so only q decides whether the codes collide.
        let r: u128 = 64;
        let trials = 20_000u32;
        for (x, y) in [(3u64, 70u64), (0, 1 << 40), (12345, 98765)] {
            let hits = (0..trials)
                .filter(|&seed| {
                    let h = PairwiseHash::new(r, seed as u64, None).unwrap();
                    h.h(x) == h.h(y)
                })
                .count() as f64;
            let p = 1.0 / r as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let freq = hits / trials as f64;
            assert!(freq <= p + 4.0 * sigma, "x={x} y={y} freq={freq}");
        }
    }
}
