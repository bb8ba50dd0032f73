use std::fs::File;
use std::io::{BufRead, BufReader, Seek, SeekFrom};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{tokenize, CorpusOptions, Vocabulary};
use crate::error::Result;

/// Local context of one token: up to `radius` surviving tokens on each side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextWindow {
    pub target: u32,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub radius: usize,
}

impl ContextWindow {
    /// Window around `pos`, truncated at the sequence boundaries.
    pub fn around(seq: &[u32], pos: usize, radius: usize) -> Self {
        let lo = pos.saturating_sub(radius);
        let hi = (pos + radius + 1).min(seq.len());
        ContextWindow {
            target: seq[pos],
            left: seq[lo..pos].to_vec(),
            right: seq[pos + 1..hi].to_vec(),
            radius,
        }
    }

    /// Context word ids, target excluded.
    pub fn context(&self) -> impl Iterator<Item = u32> + '_ {
        self.left.iter().chain(&self.right).copied()
    }

    pub fn context_len(&self) -> usize {
        self.left.len() + self.right.len()
    }
}

/// A target token paired with one collocated token from its window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollocationSample {
    pub target_window: ContextWindow,
    pub colloc_window: ContextWindow,
    /// `t' - t`, never zero, at most the window radius in magnitude.
    pub offset: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamOptions {
    pub window: usize,
    /// Subsampling threshold; `None` keeps every token.
    pub subsample: Option<f64>,
    /// Emit one sample per valid offset instead of one sampled offset.
    pub all_offsets: bool,
    pub corpus: CorpusOptions,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            window: 5,
            subsample: Some(1e-4),
            all_offsets: false,
            corpus: CorpusOptions::default(),
        }
    }
}

/// Builds the samples of one already-filtered id sequence.
pub fn sentence_samples<R: Rng + ?Sized>(
    seq: &[u32],
    window: usize,
    all_offsets: bool,
    rng: &mut R,
) -> Vec<CollocationSample> {
    let mut out = Vec::new();
    if seq.len() < 2 || window == 0 {
        return out;
    }
    for t in 0..seq.len() {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(seq.len() - 1);
        let valid = hi - lo; // positions in [lo, hi] minus t itself
        if valid == 0 {
            continue;
        }
        let mut emit = |t2: usize| {
            out.push(CollocationSample {
                target_window: ContextWindow::around(seq, t, window),
                colloc_window: ContextWindow::around(seq, t2, window),
                offset: t2 as i32 - t as i32,
            });
        };
        if all_offsets {
            (lo..=hi).filter(|&t2| t2 != t).for_each(&mut emit);
        } else {
            let mut t2 = lo + rng.random_range(0..valid);
            if t2 >= t {
                t2 += 1;
            }
            emit(t2);
        }
    }
    out
}

/// Single-pass, seeded stream of collocation samples over a line range of a corpus.
pub struct SampleStream<'v, R> {
    reader: R,
    vocab: &'v Vocabulary,
    opts: StreamOptions,
    rng: ChaCha8Rng,
    keep: Vec<f64>,
    pending: std::vec::IntoIter<CollocationSample>,
    line: String,
    pos: u64,
    end: u64,
    tokens_kept: u64,
}

impl<'v> SampleStream<'v, BufReader<File>> {
    pub fn open(path: &Path, vocab: &'v Vocabulary, opts: StreamOptions, seed: u64) -> Result<Self> {
        Self::open_range(path, vocab, opts, seed, 0, u64::MAX)
    }

    /// Streams the lines whose first byte lies in `[start, end)`.
    pub fn open_range(
        path: &Path,
        vocab: &'v Vocabulary,
        opts: StreamOptions,
        seed: u64,
        start: u64,
        end: u64,
    ) -> Result<Self> {
        let mut file = File::open(path)?;
        let mut pos = 0;
        if start > 0 {
            file.seek(SeekFrom::Start(start - 1))?;
            let mut reader = BufReader::new(file);
            let mut skipped = Vec::new();
            let n = reader.read_until(b'\n', &mut skipped)?;
            pos = start - 1 + n as u64;
            return Ok(Self::with_position(reader, vocab, opts, seed, pos, end));
        }
        Ok(Self::with_position(BufReader::new(file), vocab, opts, seed, pos, end))
    }
}

impl<'v, R: BufRead> SampleStream<'v, R> {
    pub fn from_reader(reader: R, vocab: &'v Vocabulary, opts: StreamOptions, seed: u64) -> Self {
        Self::with_position(reader, vocab, opts, seed, 0, u64::MAX)
    }

    fn with_position(
        reader: R,
        vocab: &'v Vocabulary,
        opts: StreamOptions,
        seed: u64,
        pos: u64,
        end: u64,
    ) -> Self {
        let keep = (0..vocab.len() as u32)
            .map(|id| vocab.keep_probability(id, opts.subsample))
            .collect();
        SampleStream {
            reader,
            vocab,
            opts,
            rng: ChaCha8Rng::seed_from_u64(seed),
            keep,
            pending: Vec::new().into_iter(),
            line: String::new(),
            pos,
            end,
            tokens_kept: 0,
        }
    }

    /// Surviving tokens seen so far.
    pub fn tokens_kept(&self) -> u64 {
        self.tokens_kept
    }

    /// Next surviving id sequence, or `None` at the end of the range.
    pub fn next_sentence(&mut self) -> Result<Option<Vec<u32>>> {
        loop {
            if self.pos >= self.end {
                return Ok(None);
            }
            self.line.clear();
            let n = self.reader.read_line(&mut self.line)?;
            if n == 0 {
                return Ok(None);
            }
            self.pos += n as u64;
            let raw: Vec<_> = tokenize(&self.line, self.opts.corpus.lowercase).collect();
            if !self.opts.corpus.accepts(raw.len()) {
                continue;
            }
            let mut seq = Vec::with_capacity(raw.len());
            for tok in &raw {
                if let Some(id) = self.vocab.id(tok) {
                    let keep = self.keep[id as usize];
                    if keep >= 1.0 || self.rng.random::<f64>() < keep {
                        seq.push(id);
                    }
                }
            }
            self.tokens_kept += seq.len() as u64;
            return Ok(Some(seq));
        }
    }

    /// Next sample; I/O errors end the stream with an error.
    pub fn next_sample(&mut self) -> Result<Option<CollocationSample>> {
        loop {
            if let Some(s) = self.pending.next() {
                return Ok(Some(s));
            }
            match self.next_sentence()? {
                Some(seq) => {
                    let samples =
                        sentence_samples(&seq, self.opts.window, self.opts.all_offsets, &mut self.rng);
                    self.pending = samples.into_iter();
                }
                None => return Ok(None),
            }
        }
    }

    /// Fills `buf` with up to `n` samples; returns how many were added.
    pub fn fill(&mut self, buf: &mut Vec<CollocationSample>, n: usize) -> Result<usize> {
        let before = buf.len();
        while buf.len() - before < n {
            match self.next_sample()? {
                Some(s) => buf.push(s),
                None => break,
            }
        }
        Ok(buf.len() - before)
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab
    }
}

impl<R: BufRead> Iterator for SampleStream<'_, R> {
    type Item = Result<CollocationSample>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sample().transpose()
    }
}
