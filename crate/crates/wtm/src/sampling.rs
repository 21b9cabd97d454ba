//! Exact binomial sampling and feedback-mask generation.
//!
//! Stochastic feedback needs, per clause update, a length-`u` mask whose
//! bits are independently set with probability `p`. The straightforward
//! generator ([`bernoulli_mask`]) flips `u` coins. [`binomial_uniform_mask`]
//! produces an identically distributed mask much cheaper when `p` is
//! small: it draws the popcount `q` from Binomial(u, p) once and then
//! places `q` bits at distinct uniform positions, resampling on
//! collision. Expected cost is about `u * p + 1` draws instead of `u`.
//!
//! The binomial draw itself is exact: inverse-CDF walk when `u * p` is
//! small, and Hormann-style transformed rejection (table-free, in the
//! BTPE family) for the large regime. Both paths are validated against
//! the Bernoulli reference distribution in the test suite.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::rng::RngState;

/// Per-automaton selection mask for one stochastic feedback event.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FeedbackMask {
    bits: BitVec,
}

impl FeedbackMask {
    fn zeros(len: usize) -> Self {
        FeedbackMask {
            bits: BitVec::zeros(len),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits.get(index)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// Indices of selected automata, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// Mask with every bit forced to `value`. Lets tests exercise the
    /// stochastic table cells deterministically.
    pub fn filled(len: usize, value: bool) -> Self {
        let mut mask = FeedbackMask::zeros(len);
        if value {
            for i in 0..len {
                mask.bits.set(i, true);
            }
        }
        mask
    }

    fn clear(&mut self) {
        self.bits.clear();
    }
}

/// Which mask generator feedback uses. `BinomialUniform` is the default;
/// `Bernoulli` is the reference process kept for equivalence tests and
/// the sampling benchmark.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum MaskSampler {
    #[default]
    BinomialUniform,
    Bernoulli,
}

impl MaskSampler {
    pub fn draw(self, rng: &mut RngState, len: usize, p: f64) -> Result<FeedbackMask> {
        let mut mask = FeedbackMask::zeros(len);
        self.draw_into(rng, p, &mut mask)?;
        Ok(mask)
    }

    /// Refills an existing mask in place; the training loop reuses one
    /// buffer across feedback events.
    pub fn draw_into(self, rng: &mut RngState, p: f64, mask: &mut FeedbackMask) -> Result<()> {
        match self {
            MaskSampler::BinomialUniform => binomial_uniform_mask_into(rng, p, mask),
            MaskSampler::Bernoulli => bernoulli_mask_into(rng, p, mask),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Uniform integer in `[lo, hi]`, inclusive on both ends.
pub fn uniform_int(rng: &mut RngState, lo: u64, hi: u64) -> Result<u64> {
    if lo > hi {
        return Err(Error::Argument(format!("empty range [{lo}, {hi}]")));
    }
    let span = hi - lo;
    if span == u64::MAX {
        return Ok(rng.next_u64());
    }
    Ok(lo + bounded(rng, span + 1))
}

/// Uniform in `[0, range)` by Lemire's nearly-divisionless method.
#[inline]
pub(crate) fn bounded(rng: &mut RngState, range: u64) -> u64 {
    debug_assert!(range > 0);
    let threshold = range.wrapping_neg() % range;
    loop {
        let x = rng.next_u64();
        let m = u128::from(x) * u128::from(range);
        if m as u64 >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Exact draw from Binomial(trials, p).
pub fn binomial_draw(rng: &mut RngState, trials: u64, p: f64) -> Result<u64> {
    check_probability(p)?;
    // Work with p' = min(p, 1 - p) and flip at the end; keeps the
    // inverse-CDF walk short and the rejection setup well-conditioned.
    let flip = p > 0.5;
    let ps = if flip { 1.0 - p } else { p };
    let k = if trials as f64 * ps <= INVERSION_CUTOFF {
        binomial_inversion(rng, trials, ps)
    } else {
        binomial_btrs(rng, trials, ps)
    };
    Ok(if flip { trials - k } else { k })
}

/// Regime switch: inverse-CDF walk below, transformed rejection above.
const INVERSION_CUTOFF: f64 = 30.0;

/// Reciprocals of small integers for the pmf recurrence; the walk rarely
/// leaves this range in the inversion regime.
const RECIP: [f64; 64] = {
    let mut table = [0.0f64; 64];
    let mut k = 1;
    while k < 64 {
        table[k] = 1.0 / k as f64;
        k += 1;
    }
    table
};

/// Inverse-CDF walk over the pmf recurrence. Costs exactly one draw.
/// Requires p <= 0.5 so that (1-p)^trials cannot underflow in this regime.
fn binomial_inversion(rng: &mut RngState, trials: u64, p: f64) -> u64 {
    let q = 1.0 - p;
    let u = rng.next_f64();
    let mut pmf = if trials <= i32::MAX as u64 {
        q.powi(trials as i32)
    } else {
        (trials as f64 * q.ln()).exp()
    };
    let mut cdf = pmf;
    let ratio = p / q;
    let mut k = 0u64;
    while u > cdf && k < trials {
        k += 1;
        let recip_k = if k < 64 {
            RECIP[k as usize]
        } else {
            1.0 / k as f64
        };
        pmf *= (trials - k + 1) as f64 * recip_k * ratio;
        cdf += pmf;
    }
    k
}

/// Transformed rejection sampler for the large `trials * p` regime,
/// following Hormann's BTRS scheme. Requires `trials * p > 10` and
/// `p <= 0.5`. Consumes two draws per acceptance-loop iteration.
fn binomial_btrs(rng: &mut RngState, trials: u64, p: f64) -> u64 {
    let n = trials as f64;
    let q = 1.0 - p;
    let stddev = (n * p * q).sqrt();
    let b = 1.15 + 2.53 * stddev;
    let a = -0.0873 + 0.0248 * b + 0.01 * p;
    let c = n * p + 0.5;
    let v_r = 0.92 - 4.2 / b;
    let r = p / q;
    let alpha = (2.83 + 5.1 / b) * stddev;
    let m = ((n + 1.0) * p).floor();

    loop {
        let u = rng.next_f64() - 0.5;
        let mut v = rng.next_f64();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + c).floor();
        // Inside the box region the hat is tight and k is guaranteed valid.
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || k > n {
            continue;
        }
        // Full acceptance test against the pmf ratio f(k)/f(m), evaluated
        // in log space with Stirling corrections.
        v = (v * alpha / (a / (us * us) + b)).ln();
        let bound = (m + 0.5) * ((m + 1.0) / (r * (n - m + 1.0))).ln()
            + (n + 1.0) * ((n - m + 1.0) / (n - k + 1.0)).ln()
            + (k + 0.5) * (r * (n - k + 1.0) / (k + 1.0)).ln()
            + stirling_tail(m)
            + stirling_tail(n - m)
            - stirling_tail(k)
            - stirling_tail(n - k);
        if v <= bound {
            return k as u64;
        }
    }
}

/// ln(k!) minus its Stirling main term `ln sqrt(2 pi) + (k+1/2) ln(k+1) - (k+1)`.
fn stirling_tail(k: f64) -> f64 {
    const TABLE: [f64; 10] = [
        0.08106146679532733,
        0.04134069595540946,
        0.02767792568499772,
        0.020790672103765395,
        0.016644691189820815,
        0.013876128823072875,
        0.011896709945893313,
        0.010411265261971892,
        0.009255462182707674,
        0.008330563433357696,
    ];
    if k < 10.0 {
        return TABLE[k as usize];
    }
    let kp1 = k + 1.0;
    let kp1sq = kp1 * kp1;
    (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp1sq) / kp1sq) / kp1
}

/// Length-`len` mask with i.i.d. Bernoulli(p) bits, generated by drawing
/// the popcount from Binomial(len, p) and then placing that many set bits
/// at uniform positions, resampling positions that are already set.
pub fn binomial_uniform_mask(rng: &mut RngState, len: usize, p: f64) -> Result<FeedbackMask> {
    check_mask_len(len)?;
    let mut mask = FeedbackMask::zeros(len);
    binomial_uniform_mask_into(rng, p, &mut mask)?;
    Ok(mask)
}

fn binomial_uniform_mask_into(rng: &mut RngState, p: f64, mask: &mut FeedbackMask) -> Result<()> {
    let len = mask.len();
    check_mask_len(len)?;
    mask.clear();
    let q = binomial_draw(rng, len as u64, p)?;
    let mut placed = 0u64;
    while placed < q {
        let v = bounded(rng, len as u64) as usize;
        if !mask.bits.get(v) {
            mask.bits.set(v, true);
            placed += 1;
        }
    }
    Ok(())
}

/// Reference generator: one independent Bernoulli(p) trial per position,
/// costing exactly `len` draws.
pub fn bernoulli_mask(rng: &mut RngState, len: usize, p: f64) -> Result<FeedbackMask> {
    check_mask_len(len)?;
    let mut mask = FeedbackMask::zeros(len);
    bernoulli_mask_into(rng, p, &mut mask)?;
    Ok(mask)
}

fn bernoulli_mask_into(rng: &mut RngState, p: f64, mask: &mut FeedbackMask) -> Result<()> {
    let len = mask.len();
    check_mask_len(len)?;
    check_probability(p)?;
    mask.clear();
    for i in 0..len {
        if rng.next_f64() < p {
            mask.bits.set(i, true);
        }
    }
    Ok(())
}

fn check_mask_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Argument("mask length must be at least 1".into()));
    }
    Ok(())
}
