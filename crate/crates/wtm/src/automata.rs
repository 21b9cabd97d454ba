//! Two-action automata and the conjunctive clauses they control.
//!
//! An automaton has states `1..=2N` for a half-range `N`. States up to `N`
//! choose [`Action::Exclude`], the rest [`Action::Include`]. A penalty
//! moves the state one step toward the centre (and can flip the action);
//! a reward moves it one step toward the nearer extreme, saturating at
//! `1` and `2N`.
//!
//! A clause over `o` features owns `2o` automata: index `j < o` guards the
//! positive literal `x_{j+1}`, index `j >= o` the negation of
//! `x_{j-o+1}`. The clause fires when every included literal evaluates
//! true. Include decisions are mirrored into packed bit masks so the
//! evaluation loop runs on words; the masks are updated in place whenever
//! a transition crosses the action boundary.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::rng::RngState;

/// The two automaton actions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Action {
    Exclude,
    Include,
}

/// Clause evaluation mode. A clause with no included literals outputs 1
/// while learning, so that feedback can populate it, but 0 while
/// classifying, so that it casts no vote.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EvalMode {
    Learn,
    Classify,
}

/// Action chosen by a state in `[1, 2 * half_range]`.
#[inline]
pub fn action(state: u32, half_range: u32) -> Action {
    if state <= half_range {
        Action::Exclude
    } else {
        Action::Include
    }
}

/// One step toward the centre; flips the action at the boundary.
#[inline]
pub fn apply_penalty(state: u32, half_range: u32) -> u32 {
    if state <= half_range {
        state + 1
    } else {
        state - 1
    }
}

/// One step away from the centre, saturating at the extremes.
#[inline]
pub fn apply_reward(state: u32, half_range: u32) -> u32 {
    if state <= half_range {
        if state > 1 {
            state - 1
        } else {
            state
        }
    } else if state < 2 * half_range {
        state + 1
    } else {
        state
    }
}

/// A weighted conjunctive clause: a team of `2o` automaton states plus a
/// positive real weight.
#[derive(Clone, PartialEq, Debug)]
pub struct Clause {
    states: Vec<u32>,
    weight: f64,
    half_range: u32,
    include_pos: BitVec,
    include_neg: BitVec,
    num_included: u32,
}

impl Clause {
    /// Fresh clause with every automaton drawn uniformly from the two
    /// centre states `{N, N+1}`, i.e. a random action one step from
    /// flipping, and weight 1.0.
    pub fn new(num_features: usize, half_range: u32, rng: &mut RngState) -> Clause {
        let states = (0..2 * num_features)
            .map(|_| half_range + (rng.next_u64() & 1) as u32)
            .collect();
        Clause::from_states(states, 1.0, half_range).expect("centre states are always valid")
    }

    /// Rebuilds a clause from raw automaton states, validating bounds.
    pub fn from_states(states: Vec<u32>, weight: f64, half_range: u32) -> Result<Clause> {
        if half_range < 1 {
            return Err(Error::Argument("half_range must be at least 1".into()));
        }
        if states.is_empty() || !states.len().is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "clause needs an even, nonzero automaton count, got {}",
                states.len()
            )));
        }
        if let Some(&bad) = states.iter().find(|&&s| s < 1 || s > 2 * half_range) {
            return Err(Error::Argument(format!(
                "automaton state {bad} outside [1, {}]",
                2 * half_range
            )));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Argument(format!(
                "clause weight must be positive and finite, got {weight}"
            )));
        }
        let o = states.len() / 2;
        let mut include_pos = BitVec::zeros(o);
        let mut include_neg = BitVec::zeros(o);
        let mut num_included = 0;
        for (k, &s) in states.iter().enumerate() {
            if action(s, half_range) == Action::Include {
                num_included += 1;
                if k < o {
                    include_pos.set(k, true);
                } else {
                    include_neg.set(k - o, true);
                }
            }
        }
        Ok(Clause {
            states,
            weight,
            half_range,
            include_pos,
            include_neg,
            num_included,
        })
    }

    #[inline]
    pub fn num_features(&self) -> usize {
        self.states.len() / 2
    }

    #[inline]
    pub fn num_automata(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn half_range(&self) -> u32 {
        self.half_range
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Replaces the weight; must stay positive and finite.
    pub fn set_weight(&mut self, weight: f64) {
        assert!(
            weight > 0.0 && weight.is_finite(),
            "clause weight must stay positive, got {weight}"
        );
        self.weight = weight;
    }

    #[inline]
    pub fn action_at(&self, k: usize) -> Action {
        action(self.states[k], self.half_range)
    }

    pub fn num_included(&self) -> usize {
        self.num_included as usize
    }

    /// Value of literal `k` on input `x`: `x_j` for `k = j < o`, `!x_j`
    /// for `k = o + j`.
    #[inline]
    pub fn literal_value(x: &BitVec, k: usize) -> bool {
        if k < x.len() {
            x.get(k)
        } else {
            !x.get(k - x.len())
        }
    }

    /// Conjunction of all included literals over `x`.
    pub fn output(&self, x: &BitVec, mode: EvalMode) -> bool {
        assert_eq!(
            x.len(),
            self.num_features(),
            "input width {} does not match clause width {}",
            x.len(),
            self.num_features()
        );
        if self.num_included == 0 {
            return mode == EvalMode::Learn;
        }
        for ((&inc, &neg), &xw) in self
            .include_pos
            .words()
            .iter()
            .zip(self.include_neg.words())
            .zip(x.words())
        {
            // A required bit missing or a forbidden bit present kills the
            // conjunction. Padding bits are zero in all three vectors.
            if inc & !xw != 0 || neg & xw != 0 {
                return false;
            }
        }
        true
    }

    /// Sorted indices of automata currently choosing Include.
    pub fn included_literals(&self) -> Vec<usize> {
        let o = self.num_features();
        self.include_pos
            .ones()
            .chain(self.include_neg.ones().map(|j| o + j))
            .collect()
    }

    /// Rewards automaton `k`, keeping the include masks in sync. A reward
    /// never crosses the action boundary.
    #[inline]
    pub fn reward_at(&mut self, k: usize) {
        self.states[k] = apply_reward(self.states[k], self.half_range);
    }

    /// Penalizes automaton `k`, updating the include masks if the action
    /// flipped.
    #[inline]
    pub fn penalize_at(&mut self, k: usize) {
        let before = self.states[k];
        let after = apply_penalty(before, self.half_range);
        self.states[k] = after;
        if before == self.half_range {
            // exclude -> include
            self.set_included(k, true);
            self.num_included += 1;
        } else if before == self.half_range + 1 {
            // include -> exclude
            self.set_included(k, false);
            self.num_included -= 1;
        }
    }

    fn set_included(&mut self, k: usize, value: bool) {
        let o = self.num_features();
        if k < o {
            self.include_pos.set(k, value);
        } else {
            self.include_neg.set(k - o, value);
        }
    }
}
