use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize;
use crate::error::{Error, Result};

/// Preprocessing shared by vocabulary construction and sample streaming.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusOptions {
    /// Lines with fewer raw tokens are skipped; 0 disables the filter.
    pub min_sentence_len: usize,
    pub lowercase: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            min_sentence_len: 10,
            lowercase: false,
        }
    }
}

impl CorpusOptions {
    pub(crate) fn accepts(&self, raw_tokens: usize) -> bool {
        raw_tokens >= self.min_sentence_len.max(1)
    }
}

/// Word inventory, ordered by descending frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    word_to_id: HashMap<String, u32>,
    total_tokens: u64,
    dropped_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Counts every token of a whitespace-tokenized, one-sentence-per-line corpus.
    pub fn build(path: &Path, min_count: u64, opts: &CorpusOptions) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        Self::from_reader(reader, min_count, opts)
    }

    pub fn from_reader<R: BufRead>(reader: R, min_count: u64, opts: &CorpusOptions) -> Result<Self> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            let tokens: Vec<_> = tokenize(&line, opts.lowercase).collect();
            if !opts.accepts(tokens.len()) {
                continue;
            }
            for tok in tokens {
                if let Some(c) = counts.get_mut(tok.as_ref()) {
                    *c += 1;
                } else {
                    counts.insert(tok.into_owned(), 1);
                }
            }
        }
        Self::from_counts(counts, min_count)
    }

    /// Builds from raw counts, dropping words below `min_count`.
    pub fn from_counts<I>(counts: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut kept = Vec::new();
        let mut dropped_tokens = 0;
        for (word, count) in counts {
            if count >= min_count && count > 0 {
                kept.push((word, count));
            } else {
                dropped_tokens += count;
            }
        }
        if kept.is_empty() {
            return Err(Error::config(format!(
                "vocabulary is empty with min_count={min_count}"
            )));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if kept.len() > u32::MAX as usize {
            return Err(Error::config("vocabulary exceeds u32 ids"));
        }

        let mut vocab = Vocabulary {
            words: Vec::with_capacity(kept.len()),
            counts: Vec::with_capacity(kept.len()),
            word_to_id: HashMap::with_capacity(kept.len()),
            total_tokens: 0,
            dropped_tokens,
            min_count,
        };
        for (id, (word, count)) in kept.into_iter().enumerate() {
            vocab.word_to_id.insert(word.clone(), id as u32);
            vocab.words.push(word);
            vocab.counts.push(count);
            vocab.total_tokens += count;
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of counts over retained words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Token mass of words cut by `min_count`. Not persisted in model files.
    pub fn dropped_tokens(&self) -> u64 {
        self.dropped_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn frequency(&self, id: u32) -> f64 {
        self.count(id) as f64 / self.total_tokens as f64
    }

    /// Subsampling keep-probability of a retained word; `threshold = None` disables subsampling.
    pub fn keep_probability(&self, id: u32, threshold: Option<f64>) -> f64 {
        match threshold {
            Some(t) => keep_probability(self.frequency(id), t),
            None => 1.0,
        }
    }

    /// Writes `word<TAB>count` lines; the id is the line number.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{word}\t{count}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a vocabulary file; line order is preserved as id order.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut pairs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| {
                Error::format(format!("vocabulary line {}: expected word<TAB>count", lineno + 1))
            })?;
            let count: u64 = count.trim().parse().map_err(|_| {
                Error::format(format!("vocabulary line {}: bad count {count:?}", lineno + 1))
            })?;
            pairs.push((word.to_owned(), count));
        }
        Self::from_ordered(pairs, 0)
    }

    /// Builds from `(word, count)` pairs whose order is already the id order.
    pub fn from_ordered(pairs: Vec<(String, u64)>, min_count: u64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::config("vocabulary is empty"));
        }
        let mut vocab = Vocabulary {
            words: Vec::with_capacity(pairs.len()),
            counts: Vec::with_capacity(pairs.len()),
            word_to_id: HashMap::with_capacity(pairs.len()),
            total_tokens: 0,
            dropped_tokens: 0,
            min_count,
        };
        for (id, (word, count)) in pairs.into_iter().enumerate() {
            if vocab.word_to_id.insert(word.clone(), id as u32).is_some() {
                return Err(Error::format(format!("duplicate vocabulary word {word:?}")));
            }
            vocab.words.push(word);
            vocab.counts.push(count);
            vocab.total_tokens += count;
        }
        Ok(vocab)
    }
}

/// word2vec's keep probability `(√(f/t) + 1)·(t/f)`, clipped to 1.
pub fn keep_probability(freq: f64, threshold: f64) -> f64 {
    if !threshold.is_finite() || freq <= 0.0 {
        return 1.0;
    }
    let ratio = threshold / freq;
    (((1.0 / ratio).sqrt() + 1.0) * ratio).min(1.0)
}
