//! Fixed-length bit vectors packed into 64-bit words.
//!
//! Bit `k` lives in word `k / 64` at position `k % 64`. Padding bits past
//! `len` are always zero, which lets the clause evaluation loop work on
//! whole words without masking.

/// A fixed-length packed bit vector.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        BitVec {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from bytes packed least-significant-bit first:
    /// bit `k` comes from byte `k / 8`, bit position `k % 8`.
    /// Padding bits in the final byte must be zero.
    pub fn from_bytes_lsb(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut v = BitVec::zeros(len);
        for (i, &byte) in bytes.iter().enumerate() {
            v.words[i / 8] |= u64::from(byte) << (8 * (i % 8));
        }
        // Reject set bits beyond len.
        if v.count_ones()
            != v.words
                .iter()
                .map(|w| w.count_ones() as usize)
                .sum::<usize>()
        {
            return None;
        }
        Some(v)
    }

    /// Inverse of [`BitVec::from_bytes_lsb`].
    pub fn to_bytes_lsb(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = (self.words[i / 8] >> (8 * (i % 8))) as u8;
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(
            index < self.len,
            "bit index {index} out of range {}",
            self.len
        );
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Clears every bit, keeping the length.
    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn count_ones(&self) -> usize {
        let mut total = 0usize;
        for (i, &w) in self.words.iter().enumerate() {
            let w = if (i + 1) * 64 > self.len && !self.len.is_multiple_of(64) {
                w & ((1u64 << (self.len % 64)) - 1)
            } else {
                w
            };
            total += w.count_ones() as usize;
        }
        total
    }

    /// Iterates the indices of set bits in ascending order.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            vec: self,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }
}

pub struct Ones<'a> {
    vec: &'a BitVec,
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let index = self.word_index * 64 + bit;
                return (index < self.vec.len).then_some(index);
            }
            self.word_index += 1;
            if self.word_index >= self.vec.words.len() {
                return None;
            }
            self.current = self.vec.words[self.word_index];
        }
    }
}
