//! Distributional checks that need the chi-square oracle: the rejection
//! sampler's regime, the regime switch boundary, and the mask popcount
//! law at a large mask length.

mod common;

use common::{binomial_pmf, one_sample_chi2_pvalue};
use wtm::sampling::{binomial_draw, binomial_uniform_mask};
use wtm::RngState;

const SAMPLES: usize = 60_000;

fn popcount_histogram(u: usize, p: f64, seed: u64) -> Vec<u64> {
    let mut rng = RngState::new(seed);
    let mut hist = vec![0u64; u + 1];
    for _ in 0..SAMPLES {
        hist[binomial_draw(&mut rng, u as u64, p).unwrap() as usize] += 1;
    }
    hist
}

#[test]
fn rejection_regime_matches_exact_pmf() {
    // u * p = 50: squarely in the transformed-rejection branch.
    let hist = popcount_histogram(200, 0.25, 901);
    let p_val = one_sample_chi2_pvalue(&hist, &binomial_pmf(200, 0.25));
    assert!(p_val > 0.001, "p-value {p_val:.6}");
}

#[test]
fn both_sides_of_the_regime_switch_match_exact_pmf() {
    // u * p = 29.4 walks the inverse CDF; 30.6 rejects.
    for (u, p, seed) in [(98usize, 0.3f64, 902u64), (102, 0.3, 903)] {
        let hist = popcount_histogram(u, p, seed);
        let p_val = one_sample_chi2_pvalue(&hist, &binomial_pmf(u, p));
        assert!(p_val > 0.001, "(u={u}, p={p}): p-value {p_val:.6}");
    }
}

#[test]
fn mask_popcount_matches_exact_pmf_at_training_scale() {
    // the feedback working point: length 1568, p 0.1
    let mut rng = RngState::new(904);
    let mut hist = vec![0u64; 1569];
    for _ in 0..SAMPLES {
        hist[binomial_uniform_mask(&mut rng, 1568, 0.1)
            .unwrap()
            .count_ones()] += 1;
    }
    let p_val = one_sample_chi2_pvalue(&hist, &binomial_pmf(1568, 0.1));
    assert!(p_val > 0.001, "p-value {p_val:.6}");
}

#[test]
fn high_probability_masks_match_exact_pmf() {
    // p > 0.5 exercises the collision-heavy placement loop end to end
    let mut rng = RngState::new(905);
    let mut hist = vec![0u64; 25];
    for _ in 0..SAMPLES {
        hist[binomial_uniform_mask(&mut rng, 24, 0.8)
            .unwrap()
            .count_ones()] += 1;
    }
    let p_val = one_sample_chi2_pvalue(&hist, &binomial_pmf(24, 0.8));
    assert!(p_val > 0.001, "p-value {p_val:.6}");
}
