//! Pseudoword corpora: two real words merged into one ambiguous token, with
//! the original identity of every rewritten occurrence kept in a sidecar file.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergePair {
    pub first: String,
    pub second: String,
    pub pseudoword: String,
}

impl MergePair {
    pub fn new(first: &str, second: &str, pseudoword: &str) -> Self {
        MergePair {
            first: first.to_owned(),
            second: second.to_owned(),
            pseudoword: pseudoword.to_owned(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MergeReport {
    /// Rewritten occurrences per original word.
    pub rewritten: HashMap<String, u64>,
    pub labels_path: PathBuf,
    pub total_tokens: u64,
}

impl MergeReport {
    pub fn total_rewritten(&self) -> u64 {
        self.rewritten.values().sum()
    }
}

/// Sidecar path used for the labels of `out_path`.
pub fn labels_path_for(out_path: &Path) -> PathBuf {
    let mut name = out_path.as_os_str().to_owned();
    name.push(".labels");
    PathBuf::from(name)
}

/// Rewrites every occurrence of each pair's words to its pseudoword.
///
/// Labels go to `<out_path>.labels` as `position<TAB>original_word`, where
/// `position` is the 0-based index of the token among all whitespace
/// tokens of the file.
pub fn make_pseudoword_corpus(
    corpus_path: &Path,
    merges: &[MergePair],
    out_path: &Path,
) -> Result<MergeReport> {
    let mut rewrite: HashMap<&str, &str> = HashMap::new();
    let mut pseudowords = HashSet::new();
    for m in merges {
        if m.first == m.second {
            return Err(Error::config(format!("merge pair repeats {:?}", m.first)));
        }
        for w in [&m.first, &m.second] {
            if rewrite.insert(w, &m.pseudoword).is_some() {
                return Err(Error::config(format!("{w:?} appears in more than one merge pair")));
            }
        }
        if !pseudowords.insert(m.pseudoword.as_str()) {
            return Err(Error::config(format!("pseudoword {:?} used twice", m.pseudoword)));
        }
    }
    if let Some(w) = pseudowords.iter().find(|p| rewrite.contains_key(*p)) {
        return Err(Error::config(format!("pseudoword {w:?} is also a merged word")));
    }

    let labels_path = labels_path_for(out_path);
    if merges.is_empty() {
        std::fs::copy(corpus_path, out_path)?;
        File::create(&labels_path)?;
        let total_tokens = count_tokens(corpus_path)?;
        return Ok(MergeReport {
            labels_path,
            total_tokens,
            ..MergeReport::default()
        });
    }

    // collisions are checked before anything is written
    {
        let reader = BufReader::new(File::open(corpus_path)?);
        for line in reader.lines() {
            let line = line?;
            if let Some(tok) = line.split_whitespace().find(|t| pseudowords.contains(t)) {
                return Err(Error::config(format!("pseudoword {tok:?} already occurs in the corpus")));
            }
        }
    }

    let mut reader = BufReader::new(File::open(corpus_path)?);
    let mut out = BufWriter::new(File::create(out_path)?);
    let mut labels = BufWriter::new(File::create(&labels_path)?);
    let mut report = MergeReport {
        labels_path: labels_path.clone(),
        ..MergeReport::default()
    };
    let mut position: u64 = 0;
    let mut line = String::new();
    let mut rewritten_line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        rewritten_line.clear();
        let mut last = 0;
        for (start, tok) in token_spans(&line) {
            if let Some(pseudo) = rewrite.get(tok) {
                rewritten_line.push_str(&line[last..start]);
                rewritten_line.push_str(pseudo);
                last = start + tok.len();
                writeln!(labels, "{position}\t{tok}")?;
                *report.rewritten.entry(tok.to_owned()).or_default() += 1;
            }
            position += 1;
        }
        rewritten_line.push_str(&line[last..]);
        out.write_all(rewritten_line.as_bytes())?;
    }
    out.flush()?;
    labels.flush()?;
    report.total_tokens = position;
    Ok(report)
}

/// Reads a label sidecar into `(position, original_word)` pairs.
pub fn read_labels(path: &Path) -> Result<Vec<(u64, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (pos, word) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(format!("label line {}: expected position<TAB>word", i + 1)))?;
        let pos = pos
            .parse()
            .map_err(|_| Error::format(format!("label line {}: bad position {pos:?}", i + 1)))?;
        out.push((pos, word.to_owned()));
    }
    Ok(out)
}

fn count_tokens(path: &Path) -> Result<u64> {
    let reader = BufReader::new(File::open(path)?);
    let mut n = 0;
    for line in reader.lines() {
        n += line?.split_whitespace().count() as u64;
    }
    Ok(n)
}

/// Byte offset and text of every whitespace-separated token.
fn token_spans(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - line.as_ptr() as usize, tok))
}
