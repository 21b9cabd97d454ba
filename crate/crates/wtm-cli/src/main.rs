//! Command-line surface: dataset conversion, training, evaluation,
//! prediction, model inspection and the sampling benchmark.
//!
//! Exit codes: 0 success, 2 usage errors (from argument parsing), 3
//! parse errors in data or model files, 4 configuration mismatches,
//! 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use wtm::data::{self, BinaryDataset, DatasetFormat};
use wtm::machine::{MulticlassWtm, NegativeSampling, TrainOptions, WtmParams};
use wtm::model;
use wtm::sampling::{bernoulli_mask, binomial_uniform_mask, MaskSampler};
use wtm::{Clause, Error, RngState};

#[derive(Parser)]
#[command(
    name = "wtm",
    about = "Train, inspect and benchmark clause-based classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a dataset into the native WTMD container.
    Convert(ConvertArgs),
    /// Train a multiclass machine and write a model file.
    Train(TrainArgs),
    /// Evaluate a model on a dataset: accuracy and confusion counts.
    Eval(EvalArgs),
    /// Print one predicted class index per dataset row.
    Predict(EvalArgs),
    /// Show weight statistics, weight histogram and clause dumps.
    Inspect(InspectArgs),
    /// Compare the two feedback-mask generators.
    BenchSampling(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// IDX image/label pair, binarized at --threshold.
    Idx,
    /// Comma-separated 6x7 board rows with win/loss/draw labels.
    Connect4,
    /// Lines of `label 0101...`.
    Text,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input file; for idx this is the image file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: InputFormat,
    /// Label file (idx only).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Grayscale binarization threshold (idx only).
    #[arg(long, default_value_t = data::DEFAULT_BINARIZE_THRESHOLD)]
    threshold: u8,
    /// Output WTMD path.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    Binomial,
    Bernoulli,
}

impl From<SamplerArg> for MaskSampler {
    fn from(value: SamplerArg) -> MaskSampler {
        match value {
            SamplerArg::Binomial => MaskSampler::BinomialUniform,
            SamplerArg::Bernoulli => MaskSampler::Bernoulli,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training set (WTMD).
    #[arg(long)]
    train: PathBuf,
    /// Optional evaluation set (WTMD); enables per-epoch accuracy.
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Output model path.
    #[arg(long)]
    output: PathBuf,
    /// Clauses per class, split evenly between the polarities.
    #[arg(long, default_value_t = 100)]
    clauses: usize,
    /// Automaton states per action.
    #[arg(long = "states", default_value_t = 100)]
    states: u32,
    /// Summation target T.
    #[arg(long = "threshold", default_value_t = 15)]
    threshold: u32,
    /// Stochastic feedback probability.
    #[arg(long, default_value_t = 0.1)]
    ps: f64,
    /// Weight learning rate; 0 disables weighting.
    #[arg(long, default_value_t = 0.002)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Random seed; falls back to $WTM_SEED, then to OS entropy.
    #[arg(long, env = "WTM_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Binomial)]
    sampler: SamplerArg,
    /// Reshuffle the training order every epoch.
    #[arg(long)]
    shuffle: bool,
    /// Class-parallel workers; more than 1 changes the random streams.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Push every non-target class down on each example instead of one.
    #[arg(long)]
    all_negatives: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dump the clauses of this class.
    #[arg(long)]
    class: Option<usize>,
    /// Restrict the dump to one clause index within the class.
    #[arg(long, requires = "class")]
    clause: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Mask length (automata per clause).
    #[arg(long, default_value_t = 1568)]
    u: usize,
    #[arg(long, default_value_t = 0.1)]
    ps: f64,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(args) => cmd_convert(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::BenchSampling(args) => cmd_bench_sampling(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Distinct exit codes per error category; clap already uses 2 for usage.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) => 3,
        Some(Error::Config(_)) | Some(Error::Argument(_)) => 4,
        _ => 1,
    }
}

fn load_wtmd(path: &PathBuf) -> anyhow::Result<BinaryDataset> {
    data::load_dataset(path, DatasetFormat::Wtmd)
        .with_context(|| format!("reading {}", path.display()))
}

fn cmd_convert(args: ConvertArgs) -> anyhow::Result<()> {
    let dataset = match args.format {
        InputFormat::Idx => {
            let labels = args.labels.ok_or_else(|| {
                Error::Config("idx input needs --labels alongside --input".into())
            })?;
            data::load_idx_files(&args.input, &labels, args.threshold)
                .with_context(|| format!("reading {}", args.input.display()))?
        }
        InputFormat::Connect4 => data::load_connect4_file(&args.input)
            .with_context(|| format!("reading {}", args.input.display()))?,
        InputFormat::Text => data::load_dataset(&args.input, DatasetFormat::Text)
            .with_context(|| format!("reading {}", args.input.display()))?,
    };
    data::save_dataset(&dataset, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "wrote {}: {} rows, {} features, {} classes",
        args.output.display(),
        dataset.len(),
        dataset.num_features(),
        dataset.num_classes()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let train = load_wtmd(&args.train)?;
    let eval = args.eval.as_ref().map(load_wtmd).transpose()?;
    if let Some(eval) = &eval {
        if eval.num_features() != train.num_features() {
            return Err(Error::Config(format!(
                "train set has {} features but eval set has {}",
                train.num_features(),
                eval.num_features()
            ))
            .into());
        }
        if eval.num_classes() > train.num_classes() {
            return Err(Error::Config(format!(
                "eval set declares {} classes but train set only {}",
                eval.num_classes(),
                train.num_classes()
            ))
            .into());
        }
    }
    let seed = args.seed.unwrap_or_else(|| {
        let generated = entropy_seed();
        println!("seed\t{generated}");
        generated
    });

    let params = WtmParams {
        num_features: train.num_features(),
        clauses_pos: args.clauses / 2,
        clauses_neg: args.clauses.div_ceil(2),
        target: args.threshold,
        p_s: args.ps,
        gamma: args.gamma,
        half_range: args.states,
    };
    let num_classes = train.num_classes().max(2) as usize;
    let mut rng = RngState::new(seed);
    let mut machine = MulticlassWtm::new(num_classes, params, &mut rng)?;
    let options = TrainOptions {
        epochs: args.epochs,
        shuffle: args.shuffle,
        sampler: args.sampler.into(),
        negative_sampling: if args.all_negatives {
            NegativeSampling::AllOthers
        } else {
            NegativeSampling::UniformOne
        },
        workers: args.workers.max(1),
    };
    machine.train_epochs(&train, &mut rng, &options, eval.as_ref(), |m| {
        let fmt = |a: Option<f64>| a.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{}\t{}\t{}\t{:.2}",
            m.epoch,
            fmt(m.train_accuracy),
            fmt(m.eval_accuracy),
            m.seconds
        );
    })?;

    let checksum = model::save_model_file(&machine, seed, model::now_timestamp(), &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!(
        "model\t{}\tchecksum\t{checksum:#010x}",
        args.output.display()
    );
    Ok(())
}

fn entropy_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher, RandomState};
    RandomState::new().build_hasher().finish()
}

fn check_model_data(machine: &MulticlassWtm, dataset: &BinaryDataset) -> anyhow::Result<()> {
    if machine.params().num_features != dataset.num_features() {
        return Err(Error::Config(format!(
            "model expects {} features but the dataset has {}",
            machine.params().num_features,
            dataset.num_features()
        ))
        .into());
    }
    if dataset.num_classes() as usize > machine.num_classes() {
        return Err(Error::Config(format!(
            "dataset declares {} classes but the model has {}",
            dataset.num_classes(),
            machine.num_classes()
        ))
        .into());
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let stored = model::load_model_file(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let dataset = load_wtmd(&args.data)?;
    check_model_data(&stored.machine, &dataset)?;

    let n = stored.machine.num_classes();
    let mut confusion = vec![vec![0u64; n]; n];
    let mut correct = 0u64;
    for (x, label) in dataset.iter() {
        let predicted = stored.machine.predict(x)?;
        confusion[label as usize][predicted] += 1;
        if predicted == label as usize {
            correct += 1;
        }
    }
    println!(
        "accuracy\t{:.4}\t({correct}/{} rows)",
        correct as f64 / dataset.len() as f64,
        dataset.len()
    );
    println!("confusion matrix (rows = actual, columns = predicted):");
    print!("      ");
    for j in 0..n {
        print!("{j:>8}");
    }
    println!();
    for (i, row) in confusion.iter().enumerate() {
        print!("{i:>6}");
        for &count in row {
            print!("{count:>8}");
        }
        println!();
    }
    Ok(())
}

fn cmd_predict(args: EvalArgs) -> anyhow::Result<()> {
    let stored = model::load_model_file(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let dataset = load_wtmd(&args.data)?;
    check_model_data(&stored.machine, &dataset)?;
    let mut out = String::new();
    for (x, _) in dataset.iter() {
        out.push_str(&stored.machine.predict(x)?.to_string());
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

/// Renders a clause as a conjunction of its included literals.
fn render_clause(clause: &Clause) -> String {
    let o = clause.num_features();
    let literals: Vec<String> = clause
        .included_literals()
        .into_iter()
        .map(|k| {
            if k < o {
                format!("x{}", k + 1)
            } else {
                format!("¬x{}", k - o + 1)
            }
        })
        .collect();
    if literals.is_empty() {
        "(empty)".to_string()
    } else {
        literals.join(" ∧ ")
    }
}

fn cmd_inspect(args: InspectArgs) -> anyhow::Result<()> {
    let stored = model::load_model_file(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let machine = &stored.machine;
    let params = machine.params();
    println!(
        "model: {} classes, {} features, {}+{} clauses/class, N={}, T={}, p_s={}, gamma={}, seed={}, checksum={:#010x}",
        machine.num_classes(),
        params.num_features,
        params.clauses_pos,
        params.clauses_neg,
        params.half_range,
        params.target,
        params.p_s,
        params.gamma,
        stored.seed,
        stored.checksum
    );

    if let Some(class) = args.class {
        if class >= machine.num_classes() {
            return Err(Error::Config(format!(
                "class {class} out of range ({} classes)",
                machine.num_classes()
            ))
            .into());
        }
        let m = machine.machine(class);
        // clause indices run over the positive bank, then the negative
        let total = m.positive_clauses().len() + m.negative_clauses().len();
        if let Some(only) = args.clause {
            if only >= total {
                return Err(Error::Config(format!(
                    "clause {only} out of range ({total} clauses in class {class})"
                ))
                .into());
            }
        }
        let split = m.positive_clauses().len();
        for (i, c) in m
            .positive_clauses()
            .iter()
            .chain(m.negative_clauses())
            .enumerate()
        {
            if let Some(only) = args.clause {
                if only != i {
                    continue;
                }
            }
            let polarity = if i < split { '+' } else { '-' };
            println!(
                "class {class} {polarity}{i:<4} w={:<10.4} {}",
                c.weight(),
                render_clause(c)
            );
        }
        return Ok(());
    }

    println!("class      min        max       mean    max/min");
    for (i, stats) in machine.weight_statistics().iter().enumerate() {
        println!(
            "{i:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            stats.min, stats.max, stats.mean, stats.ratio
        );
    }

    // pooled log-binned weight histogram
    let weights: Vec<f64> = machine
        .machines()
        .iter()
        .flat_map(|m| {
            m.positive_clauses()
                .iter()
                .chain(m.negative_clauses())
                .map(Clause::weight)
        })
        .collect();
    let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "weight histogram ({} weights in [{lo:.4}, {hi:.4}]):",
        weights.len()
    );
    if lo == hi {
        println!("  all weights equal {lo:.4}");
        return Ok(());
    }
    const BINS: usize = 16;
    let log_lo = lo.ln();
    let step = (hi.ln() - log_lo) / BINS as f64;
    let mut counts = [0usize; BINS];
    for &w in &weights {
        let bin = (((w.ln() - log_lo) / step) as usize).min(BINS - 1);
        counts[bin] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    for (b, &count) in counts.iter().enumerate() {
        let left = (log_lo + b as f64 * step).exp();
        let right = (log_lo + (b + 1) as f64 * step).exp();
        let bar = "#".repeat(count * 50 / peak);
        println!("  [{left:>8.4}, {right:>8.4})  {count:>6} {bar}");
    }
    Ok(())
}

fn cmd_bench_sampling(args: BenchArgs) -> anyhow::Result<()> {
    if args.u == 0 {
        return Err(Error::Argument("mask length must be at least 1".into()).into());
    }
    if !(0.0..=1.0).contains(&args.ps) {
        return Err(Error::Argument(format!("probability {} outside [0, 1]", args.ps)).into());
    }
    let iterations = args.iterations.max(1);
    let mut fast_rng = RngState::new(args.seed);
    let mut ref_rng = RngState::new(args.seed ^ 0x5DEECE66D);

    // warmup
    for _ in 0..iterations.min(200) {
        std::hint::black_box(binomial_uniform_mask(&mut fast_rng, args.u, args.ps)?);
        std::hint::black_box(bernoulli_mask(&mut ref_rng, args.u, args.ps)?);
    }

    let rounds = 20usize;
    let per_round = iterations.div_ceil(rounds);
    let fast_draws0 = fast_rng.draw_count();
    let ref_draws0 = ref_rng.draw_count();
    let mut fast_time = 0.0;
    let mut ref_time = 0.0;
    for _ in 0..rounds {
        let t = Instant::now();
        for _ in 0..per_round {
            std::hint::black_box(binomial_uniform_mask(&mut fast_rng, args.u, args.ps)?);
        }
        fast_time += t.elapsed().as_secs_f64();
        let t = Instant::now();
        for _ in 0..per_round {
            std::hint::black_box(bernoulli_mask(&mut ref_rng, args.u, args.ps)?);
        }
        ref_time += t.elapsed().as_secs_f64();
    }
    let calls = (rounds * per_round) as f64;
    let fast_draws = (fast_rng.draw_count() - fast_draws0) as f64 / calls;
    let ref_draws = (ref_rng.draw_count() - ref_draws0) as f64 / calls;
    println!("sampler            draws/call      us/call");
    println!(
        "binomial-uniform {fast_draws:>12.1} {:>12.3}",
        fast_time / calls * 1e6
    );
    println!(
        "bernoulli        {ref_draws:>12.1} {:>12.3}",
        ref_time / calls * 1e6
    );
    println!(
        "ratio            {:>12.1} {:>12.1}",
        ref_draws / fast_draws,
        ref_time / fast_time
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::render_clause;
    use wtm::Clause;

    #[test]
    fn clause_renders_as_a_conjunction() {
        // includes x1, x3 and the negation of x2 over three features
        let mut states = vec![1u32; 6];
        states[0] = 20;
        states[2] = 20;
        states[4] = 20;
        let clause = Clause::from_states(states, 1.0, 10).unwrap();
        assert_eq!(render_clause(&clause), "x1 ∧ x3 ∧ ¬x2");

        let empty = Clause::from_states(vec![1; 6], 1.0, 10).unwrap();
        assert_eq!(render_clause(&empty), "(empty)");
    }
}
