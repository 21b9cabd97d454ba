//! Shared helpers for the integration and acceptance suites: a
//! chi-square goodness-of-fit oracle (independent of the library code)
//! and fixture loading.

#![allow(dead_code)]

use std::io::Read;
use std::path::PathBuf;

use wtm::{BinaryDataset, BitVec, RngState};

/// Regularized lower incomplete gamma P(a, x), series + continued
/// fraction split as in the standard numerical recipes.
fn gammp(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let ln_gamma_a = ln_gamma(a);
    if x < a + 1.0 {
        // series representation
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma_a).exp()
    } else {
        // continued fraction for Q = 1 - P
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        let q = (-x + a * x.ln() - ln_gamma_a).exp() * h;
        1.0 - q
    }
}

/// Lanczos ln-gamma, good to ~1e-13 for positive arguments.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom.
pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    1.0 - gammp(df as f64 / 2.0, stat / 2.0)
}

/// Two-sample chi-square test that two histograms over the same bins come
/// from the same distribution. Bins where the combined count is below 5
/// are pooled into their neighbour. Returns the p-value.
pub fn two_sample_chi2_pvalue(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    // pool sparse bins left to right
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0f64, 0.0f64);
    for (&ca, &cb) in a.iter().zip(b) {
        acc.0 += ca as f64;
        acc.1 += cb as f64;
        if acc.0 + acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            pooled.push(acc);
        }
    }
    let n1: f64 = pooled.iter().map(|p| p.0).sum();
    let n2: f64 = pooled.iter().map(|p| p.1).sum();
    let k1 = (n2 / n1).sqrt();
    let k2 = (n1 / n2).sqrt();
    let mut stat = 0.0;
    let mut df = 0usize;
    for &(ca, cb) in &pooled {
        let total = ca + cb;
        if total == 0.0 {
            continue;
        }
        let delta = k1 * ca - k2 * cb;
        stat += delta * delta / total;
        df += 1;
    }
    assert!(df > 1, "too few occupied bins for a chi-square test");
    chi2_sf(stat, df - 1)
}

/// One-sample chi-square of observed counts against expected
/// probabilities; sparse expected bins are pooled. Returns the p-value.
pub fn one_sample_chi2_pvalue(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let n: f64 = observed.iter().map(|&c| c as f64).sum();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0f64, 0.0f64);
    for (&obs, &p) in observed.iter().zip(probs) {
        acc.0 += obs as f64;
        acc.1 += p * n;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            pooled.push(acc);
        }
    }
    let mut stat = 0.0;
    let mut df = 0usize;
    for &(obs, expect) in &pooled {
        stat += (obs - expect) * (obs - expect) / expect;
        df += 1;
    }
    assert!(df > 1, "too few occupied bins for a chi-square test");
    chi2_sf(stat, df - 1)
}

/// Exact Binomial(n, p) pmf over 0..=n.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if p == 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p == 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    for (k, slot) in pmf.iter_mut().enumerate() {
        let ln = ln_choose(n, k) + (k as f64) * p.ln() + ((n - k) as f64) * (1.0 - p).ln();
        *slot = ln.exp();
    }
    pmf
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Decompresses a gzipped fixture into memory.
pub fn load_fixture(name: &str) -> Vec<u8> {
    let file =
        std::fs::File::open(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"));
    let mut out = Vec::new();
    flate2::read::GzDecoder::new(file)
        .read_to_end(&mut out)
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"));
    out
}

/// Noisy-XOR task: bits 0 and 1 are informative, the rest uniform noise;
/// the label is their XOR, flipped with `noise` probability (training
/// labels only — pass 0.0 for clean evaluation sets).
pub fn noisy_xor_dataset(
    rows: usize,
    num_features: usize,
    noise: f64,
    rng: &mut RngState,
) -> BinaryDataset {
    let mut d = BinaryDataset::new(num_features, 2).unwrap();
    for _ in 0..rows {
        let bits: Vec<bool> = (0..num_features).map(|_| rng.next_u64() & 1 == 1).collect();
        let mut label = (bits[0] ^ bits[1]) as u32;
        if noise > 0.0 && rng.next_f64() < noise {
            label ^= 1;
        }
        d.push_row(BitVec::from_bools(&bits), label).unwrap();
    }
    d
}

#[cfg(test)]
mod self_tests {
    use super::*;

    // Frozen against standard chi-square tables.
    #[test]
    fn chi2_sf_matches_reference_quantiles() {
        assert!((chi2_sf(3.841, 1) - 0.05).abs() < 5e-4);
        assert!((chi2_sf(14.067, 7) - 0.05).abs() < 5e-4);
        assert!((chi2_sf(16.919, 9) - 0.05).abs() < 5e-4);
        assert!((chi2_sf(29.588, 10) - 0.001).abs() < 5e-5);
        assert!((chi2_sf(2.558, 10) - 0.99).abs() < 5e-4);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let pmf = binomial_pmf(16, 0.1);
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "total = {total}");
        // pmf(0) = 0.9^16
        assert!((pmf[0] - 0.9f64.powi(16)).abs() < 1e-9);
    }
}
