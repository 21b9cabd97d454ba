//! Seeded random number generation.
//!
//! The generator is xoshiro256++ seeded through splitmix64, frozen as part
//! of the reproducibility contract: the same seed produces the same
//! sequence on every platform and in every build of this library. The
//! period is 2^256 - 1 and the generator passes the standard empirical
//! test batteries for the draw types used here.
//!
//! Every `next_u64` increments a draw counter, which the sampling
//! benchmark and the feedback instrumentation tests read through
//! [`RngState::draw_count`].

/// Splittable, reproducible random generator state.
///
/// Single-owner by design: parallel training derives one independent
/// generator per worker with [`RngState::derive`] instead of sharing.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    s: [u64; 4],
    draws: u64,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        RngState {
            seed,
            s: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
            draws: 0,
        }
    }

    /// The seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent generator from this generator's seed and a
    /// stream index, without consuming any draws. Used to give each
    /// training worker its own stream.
    pub fn derive(&self, stream: u64) -> RngState {
        let mut sm = self.seed;
        let base = splitmix64(&mut sm);
        let mut sm2 = base ^ stream.wrapping_mul(0xD1B54A32D192ED03);
        RngState::new(splitmix64(&mut sm2))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        self.draws += 1;
        result
    }

    /// Uniform double in `[0, 1)` with 53 random bits. Costs one draw.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Cumulative number of 64-bit draws consumed so far.
    pub fn draw_count(&self) -> u64 {
        self.draws
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen against an independent implementation of splitmix64 +
    // xoshiro256++; guards the cross-platform reproducibility contract.
    #[test]
    fn known_answer_sequence() {
        let mut rng = RngState::new(42);
        assert_eq!(rng.next_u64(), 0xd0764d4f4476689f);
        assert_eq!(rng.next_u64(), 0x519e4174576f3791);
        assert_eq!(rng.next_u64(), 0xfbe07cfb0c24ed8c);
        assert_eq!(rng.next_u64(), 0xb37d9f600cd835b8);
        assert_eq!(rng.next_u64(), 0xcb231c3874846a73);

        let mut zero = RngState::new(0);
        assert_eq!(zero.next_u64(), 0x53175d61490b23df);
        assert_eq!(zero.next_u64(), 0x61da6f3dc380d507);
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngState::new(1234);
        let mut b = RngState::new(1234);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn draw_counting() {
        let mut rng = RngState::new(7);
        assert_eq!(rng.draw_count(), 0);
        rng.next_u64();
        rng.next_f64();
        assert_eq!(rng.draw_count(), 2);
    }

    #[test]
    fn next_f64_in_unit_interval() {
        let mut rng = RngState::new(99);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn derived_streams_differ_and_are_stable() {
        let rng = RngState::new(5);
        let mut w0 = rng.derive(0);
        let mut w1 = rng.derive(1);
        let mut w0b = rng.derive(0);
        let a: Vec<u64> = (0..8).map(|_| w0.next_u64()).collect();
        let b: Vec<u64> = (0..8).map(|_| w1.next_u64()).collect();
        let c: Vec<u64> = (0..8).map(|_| w0b.next_u64()).collect();
        assert_ne!(a, b);
        assert_eq!(a, c);
        // deriving must not consume draws from the parent
        assert_eq!(rng.draw_count(), 0);
    }
}
