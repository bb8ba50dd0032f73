//! Pseudoword sense-induction benchmark on the bundled Wikipedia sample.

use std::cell::Cell;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use muse::corpus::{make_pseudoword_corpus, read_labels, MergePair, Vocabulary};
use muse::evaluation::{evaluate_pseudowords, PseudowordReport};
use muse::selection::StrategyKind;
use muse::trainer::TrainStats;
use muse::{ModelParams, RewardKind, Trainer, TrainingConfig};

pub const ACCURACY_THRESHOLD: f64 = 0.80;
pub const REQUIRED_PSEUDOWORDS: usize = 2;

pub fn corpus_gz() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wiki-sample.txt.gz")
}

pub fn merges() -> Vec<MergePair> {
    vec![
        MergePair::new("apollo", "court", "apollocourt"),
        MergePair::new("einstein", "music", "einsteinmusic"),
        MergePair::new("alaska", "autism", "alaskaautism"),
    ]
}

pub struct Benchmark {
    _dir: tempfile::TempDir,
    pub train: PathBuf,
    pub heldout: PathBuf,
    pub labels: Vec<(u64, String)>,
    pub merges: Vec<MergePair>,
    pub vocab: Vocabulary,
    pub corpus_bytes: u64,
}

pub struct RunResult {
    pub report: PseudowordReport,
    /// Training wall time, evaluation excluded.
    pub train_time: Duration,
    /// Training time at the first checkpoint meeting the threshold.
    pub time_to_threshold: Option<Duration>,
    pub stats: TrainStats,
}

pub fn meets_threshold(report: &PseudowordReport) -> bool {
    report.count_at_least(ACCURACY_THRESHOLD) >= REQUIRED_PSEUDOWORDS
}

impl Benchmark {
    /// Every tenth line is held out; pseudowords are merged in both halves.
    pub fn prepare() -> Benchmark {
        let dir = tempfile::tempdir().unwrap();
        let raw_train = dir.path().join("train.raw");
        let raw_held = dir.path().join("heldout.raw");
        let gz = BufReader::new(flate2::read::GzDecoder::new(File::open(corpus_gz()).unwrap()));
        let mut tr = BufWriter::new(File::create(&raw_train).unwrap());
        let mut he = BufWriter::new(File::create(&raw_held).unwrap());
        let mut corpus_bytes = 0;
        for (i, line) in gz.lines().enumerate() {
            let line = line.unwrap();
            corpus_bytes += line.len() as u64 + 1;
            let out = if i % 10 == 9 { &mut he } else { &mut tr };
            writeln!(out, "{line}").unwrap();
        }
        drop((tr, he));
        let merges = merges();
        let train = dir.path().join("train.txt");
        let heldout = dir.path().join("heldout.txt");
        make_pseudoword_corpus(&raw_train, &merges, &train).unwrap();
        let held_report = make_pseudoword_corpus(&raw_held, &merges, &heldout).unwrap();
        let labels = read_labels(&held_report.labels_path).unwrap();
        let base = Self::base_config();
        let vocab = Vocabulary::build(&train, base.min_count, &base.corpus_options()).unwrap();
        Benchmark {
            _dir: dir,
            train,
            heldout,
            labels,
            merges,
            vocab,
            corpus_bytes,
        }
    }

    /// Published defaults scaled to d = 50 and five epochs.
    pub fn base_config() -> TrainingConfig {
        TrainingConfig {
            dim: 50,
            epochs: 5,
            ..TrainingConfig::default()
        }
    }

    pub fn config(strategy: StrategyKind, reward: RewardKind, seed: u64) -> TrainingConfig {
        TrainingConfig {
            strategy,
            reward,
            seed,
            ..Self::base_config()
        }
    }

    pub fn evaluate(&self, params: &ModelParams, radius: usize) -> PseudowordReport {
        evaluate_pseudowords(&self.heldout, &self.labels, &self.merges, params, &self.vocab, radius, false).unwrap()
    }

    /// Trains from scratch; with `checkpoint_every`, evaluates between
    /// batches and records when the threshold is first met.
    pub fn run(&self, config: TrainingConfig, checkpoint_every: Option<u64>) -> RunResult {
        let radius = config.window;
        let mut trainer = Trainer::new(&self.vocab, config).unwrap();
        let mut params = trainer.init_params();
        let start = Instant::now();
        let eval_time = Cell::new(Duration::ZERO);
        let reached: Cell<Option<Duration>> = Cell::new(None);
        let mut hook = |_: &TrainStats, p: &ModelParams| {
            if reached.get().is_none() {
                let t0 = Instant::now();
                let train_time = t0 - start - eval_time.get();
                if meets_threshold(&self.evaluate(p, radius)) {
                    reached.set(Some(train_time));
                }
                eval_time.set(eval_time.get() + t0.elapsed());
            }
            ControlFlow::Continue(())
        };
        let stats = match checkpoint_every {
            Some(every) => trainer.train(&self.train, &mut params, Some((every, &mut hook))).unwrap(),
            None => trainer.train(&self.train, &mut params, None).unwrap(),
        };
        let train_time = start.elapsed() - eval_time.get();
        let report = self.evaluate(&params, radius);
        if checkpoint_every.is_some() && reached.get().is_none() && meets_threshold(&report) {
            reached.set(Some(train_time));
        }
        RunResult {
            report,
            train_time,
            time_to_threshold: reached.get(),
            stats,
        }
    }
}
