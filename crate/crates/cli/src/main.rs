//! `muse`: train, evaluate and inspect multi-sense embeddings.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use muse::corpus::{make_pseudoword_corpus, tokenize, MergePair, Vocabulary};
use muse::evaluation::{evaluate_scws, evaluate_synonyms, knn_senses, read_scws, read_synonyms, Metric};
use muse::params::{ModelParams, SenseRef, Tensor};
use muse::selection::{decode_sequence, Strategy, StrategyKind};
use muse::trainer::{collinear_diagnostic_setup, run_appendix_a_diagnostic, DiagnosticConfig, TrainStats};
use muse::{BatchReduction, Error, Learner, RewardDirection, RewardKind, Trainer, TrainingConfig};

#[derive(Parser)]
#[command(name = "muse", version, about = "Modularized multi-sense word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a whitespace-tokenized corpus.
    Train(TrainArgs),
    /// Contextual similarity (MaxSimC / AvgSimC) on an SCWS-format file.
    EvalScws(EvalScwsArgs),
    /// Synonym selection accuracy.
    EvalSynonym(EvalSynonymArgs),
    /// Nearest senses of one sense.
    Knn(KnnArgs),
    /// Greedy sense labels for every token of a text.
    Decode(DecodeArgs),
    /// Merge word pairs into pseudowords and write position labels.
    MakePseudowordCorpus(PseudowordArgs),
    /// Single-context selector trajectory with frozen rewards.
    DiagnoseAppendixA(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Policy,
    Qlearning,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    Egreedy,
    Boltzmann,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewardArg {
    Approx,
    Bernoulli,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    TargetToColloc,
    CollocToTarget,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReductionArg {
    Mean,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Collocation,
}

#[derive(Clone, Copy, ValueEnum)]
enum TensorArg {
    P,
    U,
    V,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    senses: usize,
    /// Context radius m.
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    #[arg(long, default_value_t = 25)]
    negatives: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 2048)]
    batch_size: usize,
    #[arg(long, value_enum, default_value = "qlearning")]
    learner: LearnerArg,
    /// Policy gradient samples its own policy and accepts only boltzmann.
    #[arg(long, value_enum, default_value = "boltzmann")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "bernoulli")]
    reward: RewardArg,
    #[arg(long, value_enum, default_value = "target-to-colloc")]
    reward_direction: DirectionArg,
    #[arg(long, value_enum, default_value = "sum")]
    batch_reduction: ReductionArg,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    subsample: f64,
    #[arg(long)]
    no_subsample: bool,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Sentences with fewer raw tokens are skipped; 0 keeps all.
    #[arg(long, default_value_t = 10)]
    min_sentence_len: usize,
    #[arg(long)]
    lowercase: bool,
    /// One sample per context offset instead of one sampled offset.
    #[arg(long)]
    all_offsets: bool,
    #[arg(long, default_value_t = 0.75)]
    unigram_power: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Lock-free multi-threaded updates; results depend on scheduling.
    #[arg(long)]
    relaxed: bool,
    /// Progress line every N samples; 0 disables.
    #[arg(long, default_value_t = 1_000_000)]
    progress_every: u64,
    /// Also write a text export, as TENSOR=PATH (TENSOR is P, U or V).
    #[arg(long = "export-text", value_name = "TENSOR=PATH")]
    export_text: Vec<String>,
}

impl TrainArgs {
    fn config(&self) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            senses: self.senses,
            window: self.window,
            lr0: self.lr,
            negatives: self.negatives,
            epsilon: self.epsilon,
            batch_size: self.batch_size,
            learner: match self.learner {
                LearnerArg::Policy => Learner::PolicyGradient,
                LearnerArg::Qlearning => Learner::QLearning,
            },
            strategy: match self.strategy {
                StrategyArg::Greedy => StrategyKind::Greedy,
                StrategyArg::Egreedy => StrategyKind::EpsilonGreedy,
                StrategyArg::Boltzmann => StrategyKind::Boltzmann,
            },
            reward: match self.reward {
                RewardArg::Approx => RewardKind::ApproxLogLik,
                RewardArg::Bernoulli => RewardKind::BernoulliLik,
            },
            reward_direction: match self.reward_direction {
                DirectionArg::TargetToColloc => RewardDirection::TargetToColloc,
                DirectionArg::CollocToTarget => RewardDirection::CollocToTarget,
            },
            batch_reduction: match self.batch_reduction {
                ReductionArg::Mean => BatchReduction::Mean,
                ReductionArg::Sum => BatchReduction::Sum,
            },
            epochs: self.epochs,
            subsample: (!self.no_subsample).then_some(self.subsample),
            min_count: self.min_count,
            min_sentence_len: self.min_sentence_len,
            lowercase: self.lowercase,
            all_offsets: self.all_offsets,
            unigram_power: self.unigram_power,
            seed: self.seed,
            threads: self.threads,
            strict: !self.relaxed,
        }
    }
}

#[derive(Args)]
struct EvalScwsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scws: PathBuf,
    /// Context radius; defaults to the training window.
    #[arg(long)]
    radius: Option<usize>,
    /// Also print a JSON line.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalSynonymArgs {
    #[arg(long)]
    model: PathBuf,
    /// One or more question files (`question | a b c d | letter`).
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 0)]
    sense: u32,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value = "collocation")]
    metric: MetricArg,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text to label; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    radius: Option<usize>,
}

#[derive(Args)]
struct PseudowordArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `first,second` or `first,second,pseudoword`; repeatable.
    #[arg(long = "merge", value_name = "A,B[,NAME]")]
    merges: Vec<String>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, value_enum, default_value = "policy")]
    learner: LearnerArg,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 3)]
    senses: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Number of context words.
    #[arg(long, default_value_t = 4)]
    context: usize,
    #[arg(long, default_value_t = 0.002)]
    lr: f64,
    /// Frozen reward per sense, comma-separated. Defaults to -1 for every
    /// sense (policy gradient) or 0.9 for sense 0 and 0.2 otherwise (Q-learning).
    #[arg(long)]
    rewards: Option<String>,
    /// Starting logit scale of sense k is `a_k`, comma-separated.
    #[arg(long)]
    initial_q: Option<String>,
    /// Norm of the summed context vector.
    #[arg(long, default_value_t = 3.0)]
    context_norm: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) => 1,
        _ => 2,
    }
}

fn echo_config(config: &TrainingConfig) {
    eprintln!("config: {}", config.to_json());
}

fn run(command: Command) -> muse::Result<()> {
    match command {
        Command::Train(args) => train(args),
        Command::EvalScws(args) => {
            let (params, vocab, config) = ModelParams::load(&args.model)?;
            echo_config(&config);
            let items = read_scws(&args.scws)?;
            let report = evaluate_scws(&items, &params, &vocab, args.radius.unwrap_or(config.window));
            println!("{}", report.summary_line());
            if args.json {
                println!("{}", report.json_line());
            }
            Ok(())
        }
        Command::EvalSynonym(args) => {
            let (params, vocab, config) = ModelParams::load(&args.model)?;
            echo_config(&config);
            for path in &args.data {
                let questions = read_synonyms(path)?;
                let name = path.file_stem().map_or("synonyms".into(), |s| s.to_string_lossy().into_owned());
                let report = evaluate_synonyms(&name, &questions, &params, &vocab);
                println!("{}", report.summary_line());
                if args.json {
                    println!("{}", report.json_line());
                }
            }
            Ok(())
        }
        Command::Knn(args) => {
            let (params, vocab, config) = ModelParams::load(&args.model)?;
            echo_config(&config);
            let word = vocab
                .id(&args.word)
                .ok_or_else(|| Error::Usage(format!("{:?} is not in the vocabulary", args.word)))?;
            if args.sense as usize >= params.senses() {
                return Err(Error::Usage(format!("sense {} out of range (n = {})", args.sense, params.senses())));
            }
            if args.k == 0 {
                return Err(Error::Usage("--k must be at least 1".into()));
            }
            let metric = match args.metric {
                MetricArg::Cosine => Metric::Cosine,
                MetricArg::Collocation => Metric::Collocation,
            };
            let query = SenseRef::new(word, args.sense, params.senses());
            println!("{}", query.label(&vocab));
            for (rank, nb) in knn_senses(query, &params, args.k, metric).iter().enumerate() {
                println!("{}\t{}\t{:.6}", rank + 1, nb.sense.label(&vocab), nb.score);
            }
            Ok(())
        }
        Command::Decode(args) => decode(args),
        Command::MakePseudowordCorpus(args) => {
            echo_config(&TrainingConfig::default());
            let merges = args.merges.iter().map(|m| parse_merge(m)).collect::<muse::Result<Vec<_>>>()?;
            let report = make_pseudoword_corpus(&args.corpus, &merges, &args.out)?;
            for m in &merges {
                let count = |w: &str| report.rewritten.get(w).copied().unwrap_or(0);
                println!(
                    "{}\t{}={}\t{}={}",
                    m.pseudoword,
                    m.first,
                    count(&m.first),
                    m.second,
                    count(&m.second)
                );
            }
            eprintln!(
                "rewrote {} of {} tokens; labels in {}",
                report.total_rewritten(),
                report.total_tokens,
                report.labels_path.display()
            );
            Ok(())
        }
        Command::DiagnoseAppendixA(args) => diagnose(args),
    }
}

fn parse_merge(spec: &str) -> muse::Result<MergePair> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => Ok(MergePair::new(a, b, &format!("{a}{b}"))),
        [a, b, name] => Ok(MergePair::new(a, b, name)),
        _ => Err(Error::Usage(format!("--merge expects A,B or A,B,NAME, got {spec:?}"))),
    }
}

fn parse_list(s: &str) -> muse::Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad number {x:?} in {s:?}"))))
        .collect()
}

fn train(args: TrainArgs) -> muse::Result<()> {
    let exports = args
        .export_text
        .iter()
        .map(|spec| {
            let (t, path) = spec
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--export-text expects TENSOR=PATH, got {spec:?}")))?;
            Ok((t.parse::<Tensor>()?, PathBuf::from(path)))
        })
        .collect::<muse::Result<Vec<_>>>()?;
    let config = args.config().validate()?;
    echo_config(&config);
    let vocab = Vocabulary::build(&args.corpus, config.min_count, &config.corpus_options())?;
    eprintln!(
        "vocabulary: {} words, {} tokens ({} below min_count)",
        vocab.len(),
        vocab.total_tokens(),
        vocab.dropped_tokens()
    );
    let mut trainer = Trainer::new(&vocab, config.clone())?;
    let mut params = trainer.init_params();
    let mut total = TrainStats::default();
    for epoch in 0..config.epochs {
        let before = total.clone();
        let mut progress = |s: &TrainStats, _: &ModelParams| {
            let mut line = before.clone();
            line.merge(s);
            eprintln!("{}", line.progress_line());
            ControlFlow::Continue(())
        };
        let hook = (args.progress_every > 0).then_some((args.progress_every, &mut progress as _));
        let stats = trainer.train_epoch(&args.corpus, &mut params, hook)?;
        total.merge(&stats);
        eprintln!("epoch {} done: {}", epoch + 1, total.progress_line());
    }
    params.save(&vocab, &config, &args.out)?;
    for (tensor, path) in exports {
        params.export_text(&vocab, tensor, &path)?;
    }
    println!("{}", total.progress_line());
    Ok(())
}

fn decode(args: DecodeArgs) -> muse::Result<()> {
    let (params, vocab, config) = ModelParams::load(&args.model)?;
    echo_config(&config);
    let radius = args.radius.unwrap_or(config.window);
    let input: Box<dyn BufRead> = match &args.input {
        Some(path) => Box::new(BufReader::new(File::open(path)?)),
        None => Box::new(BufReader::new(io::stdin())),
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for line in input.lines() {
        let line = line?;
        let tokens: Vec<String> = tokenize(&line, config.lowercase).map(|t| t.into_owned()).collect();
        let ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
        let mut senses = decode_sequence(&ids, &params, radius).into_iter();
        let labels: Vec<String> = tokens
            .iter()
            .map(|t| match vocab.id(t) {
                Some(_) => senses.next().expect("one sense per known token").label(&vocab),
                None => t.clone(),
            })
            .collect();
        writeln!(out, "{}", labels.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> muse::Result<()> {
    let learner = match args.learner {
        LearnerArg::Policy => Learner::PolicyGradient,
        LearnerArg::Qlearning => Learner::QLearning,
    };
    let n = args.senses;
    if n == 0 {
        return Err(Error::Usage("--senses must be at least 1".into()));
    }
    let rewards = match &args.rewards {
        Some(s) => parse_list(s)?,
        None => match learner {
            Learner::PolicyGradient => vec![-1.0; n],
            Learner::QLearning => (0..n).map(|k| if k == 0 { 0.9 } else { 0.2 }).collect(),
        },
    };
    let a = match &args.initial_q {
        Some(s) => parse_list(s)?,
        None => match learner {
            Learner::PolicyGradient if n > 1 => (0..n).map(|k| 1.0 - 1.3 * k as f64 / (n - 1) as f64).collect(),
            _ => vec![0.0; n],
        },
    };
    if a.len() != n {
        return Err(Error::Usage(format!("--initial-q needs {n} values")));
    }
    let strategy = match args.strategy {
        StrategyArg::Greedy => Strategy::GREEDY,
        StrategyArg::Egreedy => Strategy::epsilon_greedy(args.epsilon),
        StrategyArg::Boltzmann => Strategy::boltzmann(),
    };
    echo_config(&TrainingConfig {
        dim: args.dim,
        senses: n,
        lr0: args.lr,
        learner,
        strategy: strategy.kind,
        epsilon: args.epsilon,
        seed: args.seed,
        ..TrainingConfig::default()
    });
    let (mut params, window) = collinear_diagnostic_setup(args.dim, args.context, &a, args.context_norm, args.seed)?;
    let cfg = DiagnosticConfig {
        learner,
        strategy,
        window,
        rewards,
        lr: args.lr,
        seed: args.seed,
    };
    let trace = run_appendix_a_diagnostic(&mut params, &cfg, args.steps)?;
    let maxes = trace.max_probs();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (t, (k, p)) in trace.selected.iter().zip(trace.selected_probs()).enumerate() {
        writeln!(out, "step={t} selected={k} prob={p:.6} max={:.6}", maxes[t])?;
    }
    let non_increasing = maxes.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    writeln!(
        out,
        "{}",
        serde_json::json!({
            "initial_max": maxes.first(),
            "final_max": maxes.last(),
            "non_increasing": non_increasing,
            "final_policy": trace.policies.last(),
            "greedy_changes": trace.greedy_senses().windows(2).filter(|w| w[0] != w[1]).count(),
        })
    )?;
    out.flush()?;
    Ok(())
}
