//! Binary and multiclass weighted clause machines.
//!
//! A [`BinaryWtm`] holds a bank of positive and a bank of negative
//! clauses. Its vote on an input is the weighted sum of firing positive
//! clauses minus the weighted sum of firing negative clauses; the sign of
//! that sum is the predicted class. Training clamps the learn-mode sum to
//! `[-T, T]` and gives each clause feedback with a probability that
//! shrinks linearly as the sum approaches the target, reaching zero when
//! the target is met.
//!
//! With learning rate `gamma = 0` every weight stays at exactly 1.0 and
//! the machine reduces to the unweighted voting scheme. With `gamma > 0`
//! a clause that fires is scaled by `1 + gamma` when it receives Type I
//! feedback and divided by `1 + gamma` on Type II, so a clause's weight
//! is always an exact power of `1 + gamma`.
//!
//! [`MulticlassWtm`] stacks one binary machine per class and predicts the
//! argmax of the class sums; ties go to the lowest class index.

use std::time::Instant;

use crate::automata::{Clause, EvalMode};
use crate::bits::BitVec;
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::feedback::{type_i_with_output, type_ii_with_output, FeedbackKind};
use crate::rng::RngState;
use crate::sampling::{uniform_int, FeedbackMask, MaskSampler};

/// Reusable buffers for the per-example update; the epoch loop keeps one
/// instead of allocating per call.
struct FitScratch {
    outputs: Vec<bool>,
    mask: FeedbackMask,
}

impl FitScratch {
    fn for_params(params: &WtmParams) -> FitScratch {
        FitScratch {
            outputs: Vec::with_capacity(params.clauses_pos + params.clauses_neg),
            mask: FeedbackMask::filled(2 * params.num_features, false),
        }
    }
}

/// Hyperparameters shared by every clause bank of a machine.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct WtmParams {
    /// Feature count `o`; clauses hold `2o` automata.
    pub num_features: usize,
    /// Positive-polarity clause count.
    pub clauses_pos: usize,
    /// Negative-polarity clause count.
    pub clauses_neg: usize,
    /// Summation target `T`.
    pub target: u32,
    /// Per-automaton probability of the stochastic Type I cells.
    pub p_s: f64,
    /// Weight learning rate; 0 freezes all weights at 1.0.
    pub gamma: f64,
    /// Automaton states per action.
    pub half_range: u32,
}

impl WtmParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_features == 0 {
            return Err(Error::Argument("num_features must be at least 1".into()));
        }
        if self.clauses_pos == 0 || self.clauses_neg == 0 {
            return Err(Error::Argument(
                "each polarity needs at least one clause".into(),
            ));
        }
        if self.target == 0 {
            return Err(Error::Argument("target T must be at least 1".into()));
        }
        if !(self.p_s > 0.0 && self.p_s < 1.0) {
            return Err(Error::Argument(format!(
                "p_s must lie strictly inside (0, 1), got {}",
                self.p_s
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        if self.half_range == 0 {
            return Err(Error::Argument("half_range must be at least 1".into()));
        }
        Ok(())
    }
}

/// Clamp of the vote sum to `[-T, T]`.
pub fn clamp_sum(sum: f64, target: u32) -> f64 {
    sum.clamp(-f64::from(target), f64::from(target))
}

/// Per-clause feedback probability from the clamped sum: feedback pushes
/// the sum toward `+T` for class 1 and `-T` for class 0, and stops
/// entirely once the target is met or surpassed.
pub fn feedback_probability(y: bool, clamped: f64, target: u32) -> f64 {
    let t = f64::from(target);
    debug_assert!((-t..=t).contains(&clamped));
    if y {
        (t - clamped) / (2.0 * t)
    } else {
        (t + clamped) / (2.0 * t)
    }
}

/// Weight update for a clause that fired while receiving feedback:
/// Type I multiplies by `1 + gamma`, Type II divides by it.
pub fn update_weight(weight: f64, kind: FeedbackKind, gamma: f64) -> f64 {
    match kind {
        FeedbackKind::TypeI => weight * (1.0 + gamma),
        FeedbackKind::TypeII => weight / (1.0 + gamma),
    }
}

/// A two-class discriminator: positive and negative clause banks plus
/// hyperparameters.
#[derive(Clone, PartialEq, Debug)]
pub struct BinaryWtm {
    params: WtmParams,
    positive: Vec<Clause>,
    negative: Vec<Clause>,
}

impl BinaryWtm {
    /// Fresh machine with randomly initialized automata and every weight
    /// at 1.0.
    pub fn new(params: WtmParams, rng: &mut RngState) -> Result<BinaryWtm> {
        params.validate()?;
        let make_bank = |count: usize, rng: &mut RngState| {
            (0..count)
                .map(|_| Clause::new(params.num_features, params.half_range, rng))
                .collect::<Vec<_>>()
        };
        let positive = make_bank(params.clauses_pos, rng);
        let negative = make_bank(params.clauses_neg, rng);
        Ok(BinaryWtm {
            params,
            positive,
            negative,
        })
    }

    /// Reassembles a machine from explicit clause banks (model loading,
    /// tests).
    pub fn from_banks(
        params: WtmParams,
        positive: Vec<Clause>,
        negative: Vec<Clause>,
    ) -> Result<BinaryWtm> {
        params.validate()?;
        if positive.len() != params.clauses_pos || negative.len() != params.clauses_neg {
            return Err(Error::Argument(format!(
                "bank sizes {}/{} do not match params {}/{}",
                positive.len(),
                negative.len(),
                params.clauses_pos,
                params.clauses_neg
            )));
        }
        for clause in positive.iter().chain(&negative) {
            if clause.num_features() != params.num_features {
                return Err(Error::Argument(format!(
                    "clause width {} does not match num_features {}",
                    clause.num_features(),
                    params.num_features
                )));
            }
            if clause.half_range() != params.half_range {
                return Err(Error::Argument(
                    "clause half_range does not match params".into(),
                ));
            }
        }
        Ok(BinaryWtm {
            params,
            positive,
            negative,
        })
    }

    pub fn params(&self) -> &WtmParams {
        &self.params
    }

    pub fn positive_clauses(&self) -> &[Clause] {
        &self.positive
    }

    pub fn negative_clauses(&self) -> &[Clause] {
        &self.negative
    }

    fn check_width(&self, x: &BitVec) -> Result<()> {
        if x.len() != self.params.num_features {
            return Err(Error::Argument(format!(
                "input width {} does not match machine width {}",
                x.len(),
                self.params.num_features
            )));
        }
        Ok(())
    }

    /// Weighted difference of clause outputs. With all weights at 1.0
    /// this equals the integer signed vote count.
    pub fn weighted_sum(&self, x: &BitVec, mode: EvalMode) -> Result<f64> {
        self.check_width(x)?;
        let mut sum = 0.0;
        for clause in &self.positive {
            if clause.output(x, mode) {
                sum += clause.weight();
            }
        }
        for clause in &self.negative {
            if clause.output(x, mode) {
                sum -= clause.weight();
            }
        }
        Ok(sum)
    }

    /// Class decision: true (class 1) iff the classify-mode sum is
    /// non-negative.
    pub fn predict(&self, x: &BitVec) -> Result<bool> {
        Ok(self.weighted_sum(x, EvalMode::Classify)? >= 0.0)
    }

    /// One online update toward target class `y`.
    ///
    /// Every clause is independently selected with the feedback
    /// probability; a selected clause receives Type I when its polarity
    /// supports `y` and Type II otherwise, and, if it fired (learn mode,
    /// evaluated before any automaton changes), its weight is updated for
    /// the same feedback kind. When the clamped sum already meets the
    /// target the call returns without consuming any draws.
    pub fn fit_example(
        &mut self,
        x: &BitVec,
        y: bool,
        rng: &mut RngState,
        sampler: MaskSampler,
    ) -> Result<()> {
        let mut scratch = FitScratch::for_params(&self.params);
        self.fit_with(x, y, rng, sampler, &mut scratch)
    }

    fn fit_with(
        &mut self,
        x: &BitVec,
        y: bool,
        rng: &mut RngState,
        sampler: MaskSampler,
        scratch: &mut FitScratch,
    ) -> Result<()> {
        self.check_width(x)?;
        scratch.outputs.clear();
        let mut sum = 0.0;
        for clause in &self.positive {
            let fired = clause.output(x, EvalMode::Learn);
            scratch.outputs.push(fired);
            if fired {
                sum += clause.weight();
            }
        }
        for clause in &self.negative {
            let fired = clause.output(x, EvalMode::Learn);
            scratch.outputs.push(fired);
            if fired {
                sum -= clause.weight();
            }
        }
        let clamped = clamp_sum(sum, self.params.target);
        let p = feedback_probability(y, clamped, self.params.target);
        if p == 0.0 {
            return Ok(());
        }
        let (pos_kind, neg_kind) = if y {
            (FeedbackKind::TypeI, FeedbackKind::TypeII)
        } else {
            (FeedbackKind::TypeII, FeedbackKind::TypeI)
        };
        let params = self.params;
        let (fired_pos, fired_neg) = scratch.outputs.split_at(self.positive.len());
        for (clause, &fired) in self.positive.iter_mut().zip(fired_pos) {
            feed_clause(
                clause,
                x,
                fired,
                pos_kind,
                p,
                &params,
                rng,
                sampler,
                &mut scratch.mask,
            )?;
        }
        for (clause, &fired) in self.negative.iter_mut().zip(fired_neg) {
            feed_clause(
                clause,
                x,
                fired,
                neg_kind,
                p,
                &params,
                rng,
                sampler,
                &mut scratch.mask,
            )?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn feed_clause(
    clause: &mut Clause,
    x: &BitVec,
    fired: bool,
    kind: FeedbackKind,
    p: f64,
    params: &WtmParams,
    rng: &mut RngState,
    sampler: MaskSampler,
    mask: &mut FeedbackMask,
) -> Result<()> {
    if rng.next_f64() >= p {
        return Ok(());
    }
    if fired {
        clause.set_weight(update_weight(clause.weight(), kind, params.gamma));
    }
    match kind {
        FeedbackKind::TypeI => {
            sampler.draw_into(rng, params.p_s, mask)?;
            type_i_with_output(clause, x, fired, mask);
        }
        FeedbackKind::TypeII => type_ii_with_output(clause, x, fired),
    }
    Ok(())
}

/// How the multiclass trainer picks machines to push toward class 0 for
/// each example.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum NegativeSampling {
    /// One uniformly chosen class other than the target (the default).
    #[default]
    UniformOne,
    /// Every class other than the target.
    AllOthers,
}

/// Knobs for [`MulticlassWtm::train_epochs`].
#[derive(Clone, Copy, Debug)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Reshuffle the example order each epoch.
    pub shuffle: bool,
    pub sampler: MaskSampler,
    pub negative_sampling: NegativeSampling,
    /// Class-parallel training across this many workers. Values above 1
    /// change the random streams (and therefore the trained model) but
    /// remain deterministic for a fixed (seed, workers) pair.
    pub workers: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 100,
            shuffle: false,
            sampler: MaskSampler::BinomialUniform,
            negative_sampling: NegativeSampling::UniformOne,
            workers: 1,
        }
    }
}

/// Per-epoch training record. Accuracies are filled in only when an
/// evaluation set is supplied.
#[derive(Clone, Copy, Debug)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_accuracy: Option<f64>,
    pub eval_accuracy: Option<f64>,
    pub seconds: f64,
}

/// Weight summary for one class, over both clause banks.
#[derive(Clone, Copy, Debug)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// max / min
    pub ratio: f64,
}

/// One binary machine per class, combined by argmax of the class sums.
#[derive(Clone, PartialEq, Debug)]
pub struct MulticlassWtm {
    machines: Vec<BinaryWtm>,
}

// Stream tags for deriving per-epoch auxiliary rngs in parallel mode;
// worker streams start above the shared negative-choice stream.
const STREAM_NEGATIVE: u64 = 1;
const STREAM_WORKER_BASE: u64 = 16;

impl MulticlassWtm {
    pub fn new(num_classes: usize, params: WtmParams, rng: &mut RngState) -> Result<MulticlassWtm> {
        if num_classes < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let machines = (0..num_classes)
            .map(|_| BinaryWtm::new(params, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(MulticlassWtm { machines })
    }

    pub fn from_machines(machines: Vec<BinaryWtm>) -> Result<MulticlassWtm> {
        if machines.len() < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 classes, got {}",
                machines.len()
            )));
        }
        let first = *machines[0].params();
        if machines.iter().any(|m| *m.params() != first) {
            return Err(Error::Argument(
                "all class machines must share identical params".into(),
            ));
        }
        Ok(MulticlassWtm { machines })
    }

    pub fn num_classes(&self) -> usize {
        self.machines.len()
    }

    pub fn params(&self) -> &WtmParams {
        self.machines[0].params()
    }

    pub fn machines(&self) -> &[BinaryWtm] {
        &self.machines
    }

    pub fn machine(&self, class: usize) -> &BinaryWtm {
        &self.machines[class]
    }

    /// Classify-mode weighted sum of every class machine.
    pub fn class_sums(&self, x: &BitVec) -> Result<Vec<f64>> {
        self.machines
            .iter()
            .map(|m| m.weighted_sum(x, EvalMode::Classify))
            .collect()
    }

    /// Argmax of the class sums; ties break to the lowest class index.
    pub fn predict(&self, x: &BitVec) -> Result<usize> {
        let mut best = 0usize;
        let mut best_sum = self.machines[0].weighted_sum(x, EvalMode::Classify)?;
        for (i, machine) in self.machines.iter().enumerate().skip(1) {
            let sum = machine.weighted_sum(x, EvalMode::Classify)?;
            if sum > best_sum {
                best = i;
                best_sum = sum;
            }
        }
        Ok(best)
    }

    /// Trains the target class toward 1 and the sampled negative class
    /// (or all others) toward 0.
    pub fn fit_example(
        &mut self,
        x: &BitVec,
        y: usize,
        rng: &mut RngState,
        sampler: MaskSampler,
        negative_sampling: NegativeSampling,
    ) -> Result<()> {
        let mut scratch = FitScratch::for_params(self.params());
        self.fit_with(x, y, rng, sampler, negative_sampling, &mut scratch)
    }

    fn fit_with(
        &mut self,
        x: &BitVec,
        y: usize,
        rng: &mut RngState,
        sampler: MaskSampler,
        negative_sampling: NegativeSampling,
        scratch: &mut FitScratch,
    ) -> Result<()> {
        let n = self.machines.len();
        if y >= n {
            return Err(Error::Argument(format!(
                "label {y} out of range for {n} classes"
            )));
        }
        self.machines[y].fit_with(x, true, rng, sampler, scratch)?;
        match negative_sampling {
            NegativeSampling::UniformOne => {
                let other = pick_other_class(rng, n, y);
                self.machines[other].fit_with(x, false, rng, sampler, scratch)?;
            }
            NegativeSampling::AllOthers => {
                for i in 0..n {
                    if i != y {
                        self.machines[i].fit_with(x, false, rng, sampler, scratch)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Fraction of rows whose argmax prediction matches the label.
    pub fn accuracy(&self, data: &BinaryDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Argument("cannot score an empty dataset".into()));
        }
        let mut correct = 0usize;
        for (x, label) in data.iter() {
            if self.predict(x)? == label as usize {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    /// Epoch loop over the dataset. Deterministic for a fixed seed, data
    /// order and option set. Calls `on_epoch` after each epoch and
    /// returns the collected metrics.
    pub fn train_epochs(
        &mut self,
        train: &BinaryDataset,
        rng: &mut RngState,
        options: &TrainOptions,
        eval: Option<&BinaryDataset>,
        mut on_epoch: impl FnMut(&EpochMetrics),
    ) -> Result<Vec<EpochMetrics>> {
        self.check_dataset(train)?;
        if let Some(eval) = eval {
            self.check_dataset(eval)?;
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut metrics = Vec::with_capacity(options.epochs);
        let mut scratch = FitScratch::for_params(self.params());
        for epoch in 0..options.epochs {
            let start = Instant::now();
            if options.shuffle {
                shuffle(&mut order, rng);
            }
            if options.workers > 1 {
                self.run_epoch_parallel(train, &order, rng, options, epoch)?;
            } else {
                for &i in &order {
                    self.fit_with(
                        train.features(i),
                        train.label(i) as usize,
                        rng,
                        options.sampler,
                        options.negative_sampling,
                        &mut scratch,
                    )?;
                }
            }
            let seconds = start.elapsed().as_secs_f64();
            let record = EpochMetrics {
                epoch,
                train_accuracy: eval.map(|_| self.accuracy(train)).transpose()?,
                eval_accuracy: eval.map(|e| self.accuracy(e)).transpose()?,
                seconds,
            };
            on_epoch(&record);
            metrics.push(record);
        }
        Ok(metrics)
    }

    /// Class-parallel epoch: machines are chunked across workers, every
    /// worker walks the full example stream and updates only the class
    /// machines it owns. The negative-class choice is replayed from a
    /// shared derived stream so all workers agree on it.
    fn run_epoch_parallel(
        &mut self,
        train: &BinaryDataset,
        order: &[usize],
        rng: &mut RngState,
        options: &TrainOptions,
        epoch: usize,
    ) -> Result<()> {
        let n = self.machines.len();
        let workers = options.workers.min(n);
        let chunk_size = n.div_ceil(workers);
        let epoch_tag = (epoch as u64) << 32;
        let shared_params = *self.params();
        let results: Vec<Result<()>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (w, chunk) in self.machines.chunks_mut(chunk_size).enumerate() {
                let mut worker_rng = rng.derive(STREAM_WORKER_BASE + epoch_tag + w as u64);
                let mut negative_rng = rng.derive(STREAM_NEGATIVE + epoch_tag);
                let first_class = w * chunk_size;
                let params = shared_params;
                handles.push(scope.spawn(move || -> Result<()> {
                    let mut scratch = FitScratch::for_params(&params);
                    for &i in order {
                        let x = train.features(i);
                        let y = train.label(i) as usize;
                        let negative = match options.negative_sampling {
                            NegativeSampling::UniformOne => {
                                Some(pick_other_class(&mut negative_rng, n, y))
                            }
                            NegativeSampling::AllOthers => None,
                        };
                        for (offset, machine) in chunk.iter_mut().enumerate() {
                            let class = first_class + offset;
                            if class == y {
                                machine.fit_with(
                                    x,
                                    true,
                                    &mut worker_rng,
                                    options.sampler,
                                    &mut scratch,
                                )?;
                            } else if negative.is_none_or(|neg| neg == class) {
                                machine.fit_with(
                                    x,
                                    false,
                                    &mut worker_rng,
                                    options.sampler,
                                    &mut scratch,
                                )?;
                            }
                        }
                    }
                    Ok(())
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        // Keep the sequential rng moving so epochs stay coupled to the
        // master stream even in parallel mode.
        rng.next_u64();
        results.into_iter().collect()
    }

    fn check_dataset(&self, data: &BinaryDataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::Argument("cannot train on an empty dataset".into()));
        }
        if data.num_features() != self.params().num_features {
            return Err(Error::Config(format!(
                "dataset width {} does not match machine width {}",
                data.num_features(),
                self.params().num_features
            )));
        }
        if data.num_classes() as usize > self.machines.len() {
            return Err(Error::Config(format!(
                "dataset declares {} classes but the machine has {}",
                data.num_classes(),
                self.machines.len()
            )));
        }
        Ok(())
    }

    /// Min / max / mean / max-min ratio of the clause weights of every
    /// class, both polarities pooled.
    pub fn weight_statistics(&self) -> Vec<WeightStats> {
        self.machines
            .iter()
            .map(|machine| {
                let weights = machine
                    .positive_clauses()
                    .iter()
                    .chain(machine.negative_clauses())
                    .map(Clause::weight);
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut total = 0.0;
                let mut count = 0usize;
                for w in weights {
                    min = min.min(w);
                    max = max.max(w);
                    total += w;
                    count += 1;
                }
                WeightStats {
                    min,
                    max,
                    mean: total / count as f64,
                    ratio: max / min,
                }
            })
            .collect()
    }
}

fn pick_other_class(rng: &mut RngState, num_classes: usize, y: usize) -> usize {
    let draw = uniform_int(rng, 0, num_classes as u64 - 2).expect("non-empty range") as usize;
    if draw >= y {
        draw + 1
    } else {
        draw
    }
}

/// Fisher-Yates shuffle driven by the training rng.
fn shuffle(order: &mut [usize], rng: &mut RngState) {
    for i in (1..order.len()).rev() {
        let j = crate::sampling::bounded(rng, i as u64 + 1) as usize;
        order.swap(i, j);
    }
}
