use std::path::Path;

use muse::corpus::synthetic::{anchor_word, topic_corpus, TopicCorpusSpec};
use muse::corpus::{make_pseudoword_corpus, read_labels, MergePair, Vocabulary};
use muse::evaluation::evaluate_pseudowords;
use muse::params::read_text_embeddings;
use muse::{ModelParams, Tensor, Trainer, TrainingConfig};

fn config() -> TrainingConfig {
    TrainingConfig {
        dim: 10,
        senses: 2,
        negatives: 3,
        batch_size: 64,
        subsample: Some(1e-3),
        min_count: 1,
        min_sentence_len: 0,
        seed: 4,
        ..TrainingConfig::default()
    }
}

fn write_corpus(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("corpus.txt");
    let spec = TopicCorpusSpec {
        sentences: 300,
        ..TopicCorpusSpec::default()
    };
    std::fs::write(&path, topic_corpus(&spec)).unwrap();
    path
}

fn train(corpus: &Path, config: &TrainingConfig) -> (Vocabulary, ModelParams) {
    let vocab = Vocabulary::build(corpus, config.min_count, &config.corpus_options()).unwrap();
    let mut t = Trainer::new(&vocab, config.clone()).unwrap();
    let mut p = t.init_params();
    t.train(corpus, &mut p, None).unwrap();
    (vocab, p)
}

#[test]
fn strict_training_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let cfg = config();
    let (vocab, a) = train(&corpus, &cfg);
    let (_, b) = train(&corpus, &cfg);
    assert_eq!(a.checksum(), b.checksum());
    assert!(a.all_finite());

    let path = dir.path().join("m.muse");
    a.save(&vocab, &cfg, &path).unwrap();
    let (loaded, v2, c2) = ModelParams::load(&path).unwrap();
    assert_eq!(loaded.checksum(), a.checksum());
    assert_eq!(v2.words(), vocab.words());
    assert_eq!(c2, cfg);

    let text = dir.path().join("u.txt");
    a.export_text(&vocab, Tensor::U, &text).unwrap();
    let rows = read_text_embeddings(&text).unwrap();
    assert_eq!(rows.len(), vocab.len() * 2);
    assert_eq!(rows[1].0, format!("{}#1", vocab.word(0)));
    assert_eq!(rows[1].1, a.u_row(1));
}

#[test]
fn different_seeds_give_different_models() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let (_, a) = train(&corpus, &config());
    let (_, b) = train(&corpus, &TrainingConfig { seed: 5, ..config() });
    assert_ne!(a.checksum(), b.checksum());
}

#[test]
fn relaxed_training_finishes_with_finite_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let (_, p) = train(&corpus, &TrainingConfig { threads: 3, strict: false, ..config() });
    assert!(p.all_finite());
}

#[test]
fn pseudoword_corpus_evaluates_every_occurrence() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let merged = dir.path().join("merged.txt");
    let merges = vec![MergePair::new(&anchor_word(0), &anchor_word(1), "anchorpair")];
    let report = make_pseudoword_corpus(&corpus, &merges, &merged).unwrap();
    let labels = read_labels(&report.labels_path).unwrap();
    assert_eq!(labels.len() as u64, report.total_rewritten());

    let cfg = config();
    let (vocab, p) = train(&merged, &cfg);
    assert!(vocab.id(&anchor_word(0)).is_none());
    let eval = evaluate_pseudowords(&merged, &labels, &merges, &p, &vocab, cfg.window, false).unwrap();
    let acc = eval.get("anchorpair").unwrap();
    assert_eq!(acc.occurrences, labels.len() as u64);
    assert!((0.5..=1.0).contains(&acc.accuracy));
}
