//! Topic-mixture text generator for small, fully controlled corpora.
//!
//! Every sentence draws one topic and mixes Zipf-distributed shared filler
//! words (`f0`, `f1`, ...) with Zipf-distributed topic words (`t2w0`, ...).
//! Each topic also owns one anchor word (`anchor2`) that appears about once
//! per sentence; merging two anchors gives a pseudoword with known senses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct TopicCorpusSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub filler_words: usize,
    pub sentences: usize,
    pub sentence_len: usize,
    /// Probability that a token is a filler word.
    pub filler_rate: f64,
    pub seed: u64,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        TopicCorpusSpec {
            topics: 4,
            words_per_topic: 40,
            filler_words: 30,
            sentences: 2000,
            sentence_len: 12,
            filler_rate: 0.4,
            seed: 1,
        }
    }
}

pub fn anchor_word(topic: usize) -> String {
    format!("anchor{topic}")
}

fn zipf_cdf(n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n).map(|r| 1.0 / r as f64).collect();
    let z: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / z;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Generates the corpus, one sentence per line (each ends with `\n`).
pub fn topic_corpus(spec: &TopicCorpusSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let topic_cdf = zipf_cdf(spec.words_per_topic.max(1));
    let filler_cdf = zipf_cdf(spec.filler_words.max(1));
    let mut out = String::new();
    for _ in 0..spec.sentences {
        let topic = rng.random_range(0..spec.topics.max(1));
        let anchor_at = rng.random_range(0..spec.sentence_len.max(1));
        for i in 0..spec.sentence_len {
            if i > 0 {
                out.push(' ');
            }
            if i == anchor_at {
                out.push_str(&anchor_word(topic));
            } else if spec.filler_words > 0 && rng.random::<f64>() < spec.filler_rate {
                out.push_str(&format!("f{}", draw(&filler_cdf, &mut rng)));
            } else {
                out.push_str(&format!("t{topic}w{}", draw(&topic_cdf, &mut rng)));
            }
        }
        out.push('\n');
    }
    out
}
