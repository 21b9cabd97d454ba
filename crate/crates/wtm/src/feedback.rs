//! Type I and Type II feedback on a single clause.
//!
//! Feedback drives each of the clause's `2o` automata from the clause
//! output `v` (evaluated once, in Learn mode, before any state changes)
//! and the automaton's literal value on the current input:
//!
//! Type I
//! - `v = 1`, literal `1`: Include is rewarded, Exclude is penalized,
//!   unconditionally.
//! - every other reachable combination: the automaton acts only when its
//!   bit is set in the per-event mask, and then Include is penalized and
//!   Exclude is rewarded.
//! - `v = 1`, literal `0`, Include cannot occur (an included false
//!   literal forces `v = 0`); debug builds assert this.
//!
//! Type II is deterministic and consumes no randomness: a firing clause
//! penalizes every excluded automaton whose literal is `0`; a
//! non-firing clause is left untouched.

use crate::automata::{Action, Clause, EvalMode};
use crate::bits::BitVec;
use crate::error::Result;
use crate::rng::RngState;
use crate::sampling::{FeedbackMask, MaskSampler};

/// The two feedback types a clause can receive.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FeedbackKind {
    TypeI,
    TypeII,
}

/// Applies Type I feedback, drawing one mask of length `2o` for the
/// stochastic cells from the given sampler.
pub fn apply_type_i(
    clause: &mut Clause,
    x: &BitVec,
    p_s: f64,
    rng: &mut RngState,
    sampler: MaskSampler,
) -> Result<()> {
    let mask = sampler.draw(rng, clause.num_automata(), p_s)?;
    let fired = clause.output(x, EvalMode::Learn);
    type_i_with_output(clause, x, fired, &mask);
    Ok(())
}

/// Type I with an externally supplied mask; the clause output is still
/// evaluated here, before any state changes.
pub fn apply_type_i_with_mask(clause: &mut Clause, x: &BitVec, mask: &FeedbackMask) {
    let fired = clause.output(x, EvalMode::Learn);
    type_i_with_output(clause, x, fired, mask);
}

pub(crate) fn type_i_with_output(
    clause: &mut Clause,
    x: &BitVec,
    fired: bool,
    mask: &FeedbackMask,
) {
    debug_assert_eq!(mask.len(), clause.num_automata());
    if fired {
        let o = clause.num_features();
        for j in 0..o {
            // For every feature exactly one of the pair (x_j, !x_j) is
            // true; the true literal takes the deterministic cell, the
            // false one the masked cell.
            let (true_k, false_k) = if x.get(j) { (j, o + j) } else { (o + j, j) };
            match clause.action_at(true_k) {
                Action::Include => clause.reward_at(true_k),
                Action::Exclude => clause.penalize_at(true_k),
            }
            if mask.get(false_k) {
                match clause.action_at(false_k) {
                    Action::Exclude => clause.reward_at(false_k),
                    Action::Include => {
                        debug_assert!(
                            false,
                            "included literal {false_k} is false while the clause fired"
                        );
                    }
                }
            }
        }
    } else {
        for k in mask.ones() {
            match clause.action_at(k) {
                Action::Include => clause.penalize_at(k),
                Action::Exclude => clause.reward_at(k),
            }
        }
    }
}

/// Applies Type II feedback. Deterministic; a no-op unless the clause
/// fires in Learn mode.
pub fn apply_type_ii(clause: &mut Clause, x: &BitVec) {
    let fired = clause.output(x, EvalMode::Learn);
    type_ii_with_output(clause, x, fired);
}

pub(crate) fn type_ii_with_output(clause: &mut Clause, x: &BitVec, fired: bool) {
    if !fired {
        return;
    }
    let o = clause.num_features();
    for j in 0..o {
        // the false literal of the pair is the only Type II candidate
        let k = if x.get(j) { o + j } else { j };
        match clause.action_at(k) {
            Action::Exclude => clause.penalize_at(k),
            Action::Include => {
                debug_assert!(
                    false,
                    "included literal {k} is false while the clause fired"
                );
            }
        }
    }
}
