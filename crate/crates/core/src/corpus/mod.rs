//! Corpus streaming, vocabulary construction and sampling tables.

mod pseudoword;
mod stream;
pub mod synthetic;
mod table;
mod vocab;

pub use pseudoword::{labels_path_for, make_pseudoword_corpus, read_labels, MergePair, MergeReport};
pub use stream::{
    sentence_samples, CollocationSample, ContextWindow, SampleStream, StreamOptions,
};
pub use table::UnigramTable;
pub use vocab::{keep_probability, CorpusOptions, Vocabulary};

use std::borrow::Cow;

/// Whitespace tokenization, optionally lowercased.
pub fn tokenize(line: &str, lowercase: bool) -> impl Iterator<Item = Cow<'_, str>> {
    line.split_whitespace().map(move |tok| {
        if lowercase && tok.chars().any(char::is_uppercase) {
            Cow::Owned(tok.to_lowercase())
        } else {
            Cow::Borrowed(tok)
        }
    })
}
