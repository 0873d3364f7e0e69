//! Text preprocessing shared by document indexing and query processing.
//!
//! The pipeline is: split on every non-alphanumeric character, lowercase,
//! drop stopwords, Porter-stem. The same [`Analyzer`] instance must be used
//! for both sides of retrieval.

mod porter;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use porter::stem;

/// Bundled default English stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Turns free text into index terms.
pub trait Analyzer {
    fn analyze(&self, text: &str) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stopwords: BTreeSet<String>,
    #[serde(default)]
    pub split_compound_identifiers: bool,
    #[serde(default = "one")]
    pub min_token_length: usize,
}

fn one() -> usize {
    1
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
            split_compound_identifiers: false,
            min_token_length: 1,
        }
    }
}

impl PipelineConfig {
    pub fn with_stopwords(mut self, stopwords: BTreeSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }
}

/// Parses a stopword file: one word per line, `#` comment lines, blank lines
/// skipped, case-insensitive.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

pub fn tokenize(text: &str, config: &PipelineConfig) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        if config.split_compound_identifiers {
            for part in split_camel_case(raw) {
                push_token(&mut out, part, config);
            }
        } else {
            push_token(&mut out, raw, config);
        }
    }
    out
}

fn push_token(out: &mut Vec<String>, raw: &str, config: &PipelineConfig) {
    if raw.chars().count() >= config.min_token_length.max(1) {
        out.push(raw.to_lowercase());
    }
}

/// Splits at every lowercase-to-uppercase transition.
fn split_camel_case(word: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut prev_lower = false;
    for (i, c) in word.char_indices() {
        if prev_lower && c.is_uppercase() {
            parts.push(&word[start..i]);
            start = i;
        }
        prev_lower = c.is_lowercase();
    }
    parts.push(&word[start..]);
    parts
}

pub fn remove_stopwords(tokens: Vec<String>, config: &PipelineConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !config.stopwords.contains(t))
        .collect()
}

pub fn preprocess(text: &str, config: &PipelineConfig) -> Vec<String> {
    remove_stopwords(tokenize(text, config), config)
        .iter()
        .map(|t| stem(t))
        .collect()
}

impl Analyzer for PipelineConfig {
    fn analyze(&self, text: &str) -> Vec<String> {
        preprocess(text, self)
    }
}

impl<A: Analyzer + ?Sized> Analyzer for &A {
    fn analyze(&self, text: &str) -> Vec<String> {
        (**self).analyze(text)
    }
}

/// Convenience for tests and callers holding plain word lists.
pub fn stopword_set<I, S>(words: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    words.into_iter().map(|w| w.as_ref().to_lowercase()).collect()
}
