//! Property tests for the structural invariants: automaton state bounds,
//! clause monotonicity, format round-trips, weight algebra.

mod common;

use proptest::prelude::*;

use wtm::automata::{self, Action, Clause, EvalMode};
use wtm::data::{self, BinaryDataset};
use wtm::feedback::FeedbackKind;
use wtm::machine::{update_weight, BinaryWtm, MulticlassWtm, WtmParams};
use wtm::{BitVec, RngState};

proptest! {
    // Any reward/penalty sequence keeps the state inside [1, 2N].
    #[test]
    fn automaton_state_bounds(
        half_range in 1u32..50,
        start_offset in 0u32..100,
        moves in prop::collection::vec(any::<bool>(), 0..200),
    ) {
        let mut state = 1 + start_offset % (2 * half_range);
        for reward in moves {
            state = if reward {
                automata::apply_reward(state, half_range)
            } else {
                automata::apply_penalty(state, half_range)
            };
            prop_assert!(state >= 1 && state <= 2 * half_range);
        }
    }

    // Reward and penalty invert each other away from the saturating
    // extremes and the centre crossing.
    #[test]
    fn reward_penalty_inverse_in_the_interior(half_range in 2u32..60) {
        let n = half_range;
        for state in 1..=2 * n {
            let p = automata::apply_penalty(state, n);
            // penalty then reward returns, unless the penalty crossed the
            // centre (the reward then moves away on the other side)
            if state != n && state != n + 1 {
                prop_assert_eq!(automata::apply_reward(p, n), state);
            }
            let r = automata::apply_reward(state, n);
            // reward then penalty returns, unless reward saturated
            if state != 1 && state != 2 * n {
                prop_assert_eq!(automata::apply_penalty(r, n), state);
            }
        }
    }

    // Penalties reach the action boundary within N steps from anywhere;
    // rewards reach an extreme within N steps.
    #[test]
    fn transitions_reach_boundaries_within_n(half_range in 1u32..60, start_offset in 0u32..120) {
        let n = half_range;
        let start = 1 + start_offset % (2 * n);
        let initial_action = automata::action(start, n);

        let mut state = start;
        let mut flipped = false;
        for _ in 0..n {
            state = automata::apply_penalty(state, n);
            if automata::action(state, n) != initial_action {
                flipped = true;
                break;
            }
        }
        prop_assert!(flipped, "no flip from {start} with N = {n}");

        let mut state = start;
        for _ in 0..n {
            state = automata::apply_reward(state, n);
        }
        prop_assert!(state == 1 || state == 2 * n);
    }

    // Including a superset of literals can only shrink the set of inputs
    // a clause fires on.
    #[test]
    fn clause_monotonicity(
        o in 1usize..12,
        seed in any::<u64>(),
    ) {
        let mut rng = RngState::new(seed);
        let n = 5u32;
        let base: Vec<u32> = (0..2 * o).map(|_| 1 + (rng.next_u64() % 10) as u32).collect();
        // superset: force some extra includes
        let mut superset = base.clone();
        for s in superset.iter_mut() {
            if rng.next_u64().is_multiple_of(3) {
                *s = 2 * n;
            }
        }
        for (s, b) in superset.iter_mut().zip(&base) {
            if automata::action(*b, n) == Action::Include {
                *s = *b;
            }
        }
        let smaller = Clause::from_states(base, 1.0, n).unwrap();
        let larger = Clause::from_states(superset, 1.0, n).unwrap();

        for _ in 0..32 {
            let bits: Vec<bool> = (0..o).map(|_| rng.next_u64() & 1 == 1).collect();
            let x = BitVec::from_bools(&bits);
            // Learn mode is the plain conjunction, where monotonicity is
            // unconditional.
            let small_learn = smaller.output(&x, EvalMode::Learn) as u8;
            let large_learn = larger.output(&x, EvalMode::Learn) as u8;
            prop_assert!(large_learn <= small_learn);
            // Classify zeroes out the empty clause, so compare only when
            // the smaller clause is nonempty.
            if smaller.num_included() > 0 {
                let small_out = smaller.output(&x, EvalMode::Classify) as u8;
                let large_out = larger.output(&x, EvalMode::Classify) as u8;
                prop_assert!(large_out <= small_out);
            }
        }
    }

    // Classify output is a function of the included literals only:
    // perturbing excluded states inside the exclude range changes nothing.
    #[test]
    fn classify_ignores_excluded_state_detail(
        o in 1usize..10,
        seed in any::<u64>(),
    ) {
        let mut rng = RngState::new(seed);
        let n = 8u32;
        let states: Vec<u32> = (0..2 * o).map(|_| 1 + (rng.next_u64() % 16) as u32).collect();
        let mut perturbed = states.clone();
        for s in perturbed.iter_mut() {
            if automata::action(*s, n) == Action::Exclude {
                *s = 1 + (rng.next_u64() % u64::from(n)) as u32;
            }
        }
        let a = Clause::from_states(states, 1.0, n).unwrap();
        let b = Clause::from_states(perturbed, 1.0, n).unwrap();
        for _ in 0..32 {
            let bits: Vec<bool> = (0..o).map(|_| rng.next_u64() & 1 == 1).collect();
            let x = BitVec::from_bools(&bits);
            prop_assert_eq!(a.output(&x, EvalMode::Classify), b.output(&x, EvalMode::Classify));
        }
    }

    // Dataset round-trip through the container is the identity.
    #[test]
    fn wtmd_roundtrip_identity(
        o in 1usize..40,
        rows in 0usize..30,
        n_classes in 1u32..6,
        seed in any::<u64>(),
    ) {
        let mut rng = RngState::new(seed);
        let mut d = BinaryDataset::new(o, n_classes).unwrap();
        for _ in 0..rows {
            let bits: Vec<bool> = (0..o).map(|_| rng.next_u64() & 1 == 1).collect();
            d.push_row(BitVec::from_bools(&bits), (rng.next_u64() % u64::from(n_classes)) as u32)
                .unwrap();
        }
        let mut buf = Vec::new();
        data::save_wtmd(&d, &mut buf).unwrap();
        prop_assert_eq!(data::load_wtmd(&buf[..]).unwrap(), d);
    }

    // Raising the binarization threshold never turns a 0 into a 1.
    #[test]
    fn binarization_monotone_in_threshold(
        pixels in prop::collection::vec(any::<u8>(), 1..64),
        t1 in any::<u8>(),
        t2 in any::<u8>(),
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let loose = data::binarize_grayscale(&pixels, lo);
        let strict = data::binarize_grayscale(&pixels, hi);
        for k in 0..pixels.len() {
            prop_assert!(!(strict.get(k) && !loose.get(k)));
        }
    }

    // No board cell may set bits in both occupancy planes.
    #[test]
    fn connect4_planes_disjoint(cells_raw in prop::collection::vec(0u8..3, 42)) {
        let cells: Vec<data::Cell> = cells_raw
            .iter()
            .map(|&c| match c {
                0 => data::Cell::Empty,
                1 => data::Cell::PlayerOne,
                _ => data::Cell::PlayerTwo,
            })
            .collect();
        let bits = data::encode_connect4(&cells).unwrap();
        for i in 0..42 {
            prop_assert!(!(bits.get(i) && bits.get(42 + i)));
        }
        let occupied = cells_raw.iter().filter(|&&c| c != 0).count();
        prop_assert_eq!(bits.count_ones(), occupied);
    }

    // k Type I updates and m Type II updates land on (1+gamma)^(k-m).
    #[test]
    fn weight_updates_are_log_linear(
        gamma in 0.001f64..0.5,
        ups in 0usize..60,
        downs in 0usize..60,
    ) {
        let mut w = 1.0f64;
        for _ in 0..ups {
            w = update_weight(w, FeedbackKind::TypeI, gamma);
        }
        for _ in 0..downs {
            w = update_weight(w, FeedbackKind::TypeII, gamma);
        }
        let expect = (1.0 + gamma).powi(ups as i32 - downs as i32);
        prop_assert!((w - expect).abs() <= 1e-9 * expect.max(1.0));
        prop_assert!(w > 0.0);
    }

    // Scaling every weight in every machine by one positive constant
    // leaves the argmax prediction unchanged. Powers of two make the
    // scaling exact in floating point, so the check needs no tolerance.
    #[test]
    fn argmax_invariant_under_global_weight_scale(
        seed in any::<u64>(),
        scale_exp in -2i32..3,
    ) {
        let scale = 2.0f64.powi(scale_exp);
        let params = WtmParams {
            num_features: 6,
            clauses_pos: 3,
            clauses_neg: 3,
            target: 5,
            p_s: 0.2,
            gamma: 0.1,
            half_range: 6,
        };
        let mut rng = RngState::new(seed);
        let machines: Vec<BinaryWtm> = (0..3)
            .map(|_| {
                let pos = (0..3)
                    .map(|_| random_clause(6, 6, &mut rng))
                    .collect::<Vec<_>>();
                let neg = (0..3)
                    .map(|_| random_clause(6, 6, &mut rng))
                    .collect::<Vec<_>>();
                BinaryWtm::from_banks(params, pos, neg).unwrap()
            })
            .collect();
        let original = MulticlassWtm::from_machines(machines).unwrap();

        let scaled_machines: Vec<BinaryWtm> = original
            .machines()
            .iter()
            .map(|m| {
                let scale_bank = |clauses: &[Clause]| {
                    clauses
                        .iter()
                        .map(|c| {
                            let mut c = c.clone();
                            c.set_weight(c.weight() * scale);
                            c
                        })
                        .collect::<Vec<_>>()
                };
                BinaryWtm::from_banks(
                    params,
                    scale_bank(m.positive_clauses()),
                    scale_bank(m.negative_clauses()),
                )
                .unwrap()
            })
            .collect();
        let scaled = MulticlassWtm::from_machines(scaled_machines).unwrap();

        let mut probe_rng = RngState::new(seed ^ 0x5555);
        for _ in 0..24 {
            let bits: Vec<bool> = (0..6).map(|_| probe_rng.next_u64() & 1 == 1).collect();
            let x = BitVec::from_bools(&bits);
            prop_assert_eq!(original.predict(&x).unwrap(), scaled.predict(&x).unwrap());
        }
    }
}

fn random_clause(o: usize, half_range: u32, rng: &mut RngState) -> Clause {
    let states: Vec<u32> = (0..2 * o)
        .map(|_| 1 + (rng.next_u64() % u64::from(2 * half_range)) as u32)
        .collect();
    let weight = 0.25 + rng.next_f64() * 4.0;
    Clause::from_states(states, weight, half_range).unwrap()
}
