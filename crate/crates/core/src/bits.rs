//! Plain bit storage used by the Elias-Fano encoder: a packed array of
//! fixed-width cells and a bit vector with sampled select.

/// Every `SELECT_SAMPLE_RATE`-th bit of each kind has its position sampled.
pub const SELECT_SAMPLE_RATE: usize = 1024;

#[inline]
pub(crate) fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Position (0-based) of the `k`-th set bit of `word`, `k < popcount(word)`.
#[inline]
fn select_in_word(mut word: u64, k: u32) -> u32 {
    for _ in 0..k {
        word &= word - 1;
    }
    word.trailing_zeros()
}

/// Fixed-width integers packed back to back; a cell may straddle two words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PackedInts {
    width: u32,
    len: usize,
    words: Vec<u64>,
}

impl PackedInts {
    pub fn with_len(width: u32, len: usize) -> Self {
        Self {
            width,
            len,
            words: vec![0; words_for(width as usize * len)],
        }
    }

    pub fn from_words(width: u32, len: usize, words: Vec<u64>) -> Option<Self> {
        (words.len() == words_for(width as usize * len)).then_some(Self { width, len, words })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn set(&mut self, index: usize, value: u64) {
        if self.width == 0 {
            return;
        }
        let value = value & low_mask(self.width);
        let bit = index * self.width as usize;
        let (w, off) = (bit / 64, (bit % 64) as u32);
        self.words[w] |= value << off;
        if off + self.width > 64 {
            self.words[w + 1] |= value >> (64 - off);
        }
    }

    #[inline]
    pub fn get(&self, index: usize) -> u64 {
        debug_assert!(index < self.len);
        if self.width == 0 {
            return 0;
        }
        let bit = index * self.width as usize;
        let (w, off) = (bit / 64, (bit % 64) as u32);
        let mut v = self.words[w] >> off;
        if off + self.width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        v & low_mask(self.width)
    }
}

/// Bit vector with select over both bit values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct SelectBits {
    len: usize,
    words: Vec<u64>,
    ones: usize,
    /// `one_samples[j]` is the position of the one with rank `(j+1)·RATE`.
    one_samples: Vec<u64>,
    zero_samples: Vec<u64>,
}

impl SelectBits {
    /// Builds from raw words; bits at positions `>= len` must be clear.
    pub fn new(words: Vec<u64>, len: usize) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        let ones = words.iter().map(|w| w.count_ones() as usize).sum();
        let (one_samples, zero_samples) = sample_positions(&words, len);
        Self {
            len,
            words,
            ones,
            one_samples,
            zero_samples,
        }
    }

    /// Rebuilds from serialized parts, checking that the samples match.
    pub fn from_parts(
        words: Vec<u64>,
        len: usize,
        one_samples: Vec<u64>,
        zero_samples: Vec<u64>,
    ) -> Option<Self> {
        if words.len() != words_for(len) {
            return None;
        }
        if !len.is_multiple_of(64) {
            if let Some(&last) = words.last() {
                if last & !low_mask((len % 64) as u32) != 0 {
                    return None;
                }
            }
        }
        let bits = Self::new(words, len);
        (bits.one_samples == one_samples && bits.zero_samples == zero_samples).then_some(bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn zeros(&self) -> usize {
        self.len - self.ones
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn one_samples(&self) -> &[u64] {
        &self.one_samples
    }

    pub fn zero_samples(&self) -> &[u64] {
        &self.zero_samples
    }

    pub fn sample_bits(&self) -> u64 {
        64 * (self.one_samples.len() + self.zero_samples.len()) as u64
    }

    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        (self.words[pos / 64] >> (pos % 64)) & 1 == 1
    }

    #[inline]
    fn word_for<const ONE: bool>(&self, i: usize) -> u64 {
        let w = self.words[i];
        if ONE {
            w
        } else {
            let inv = !w;
            let end = self.len - i * 64;
            if end < 64 {
                inv & low_mask(end as u32)
            } else {
                inv
            }
        }
    }

    /// 0-based position of the one with 0-based rank `k`; requires `k < ones()`.
    #[inline]
    pub fn select1(&self, k: usize) -> usize {
        debug_assert!(k < self.ones);
        self.select::<true>(k, &self.one_samples)
    }

    /// 0-based position of the zero with 0-based rank `k`; requires `k < zeros()`.
    #[inline]
    pub fn select0(&self, k: usize) -> usize {
        debug_assert!(k < self.zeros());
        self.select::<false>(k, &self.zero_samples)
    }

    #[inline]
    fn select<const ONE: bool>(&self, k: usize, samples: &[u64]) -> usize {
        let block = k / SELECT_SAMPLE_RATE;
        let (mut wi, mut remaining) = if block == 0 {
            (0, k)
        } else {
            let pos = samples[block - 1] as usize;
            let wi = pos / 64;
            // Count the sampled bit's predecessors inside its own word.
            let below = self.word_for::<ONE>(wi) & low_mask((pos % 64) as u32);
            (
                wi,
                k - block * SELECT_SAMPLE_RATE + below.count_ones() as usize,
            )
        };
        loop {
            let w = self.word_for::<ONE>(wi);
            let c = w.count_ones() as usize;
            if remaining < c {
                return wi * 64 + select_in_word(w, remaining as u32) as usize;
            }
            remaining -= c;
            wi += 1;
        }
    }
}

fn sample_positions(words: &[u64], len: usize) -> (Vec<u64>, Vec<u64>) {
    let mut ones = Vec::new();
    let mut zeros = Vec::new();
    let (mut seen1, mut seen0) = (0usize, 0usize);
    for (i, &w) in words.iter().enumerate() {
        let valid = (len - i * 64).min(64) as u32;
        let w1 = w;
        let w0 = !w & low_mask(valid);
        for (w, seen, out) in [(w1, &mut seen1, &mut ones), (w0, &mut seen0, &mut zeros)] {
            let c = w.count_ones() as usize;
            // Smallest sampled rank not yet passed.
            let mut next = seen.div_ceil(SELECT_SAMPLE_RATE).max(1) * SELECT_SAMPLE_RATE;
            while next < *seen + c {
                let pos = i * 64 + select_in_word(w, (next - *seen) as u32) as usize;
                out.push(pos as u64);
                next += SELECT_SAMPLE_RATE;
            }
            *seen += c;
        }
    }
    (ones, zeros)
}
