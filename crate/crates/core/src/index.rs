//! Vector space retrieval over a corpus.
//!
//! Weights are `tf(t, d) * ln(N / df(t))` with raw term counts, and
//! documents are ranked by cosine similarity with the query vector built the
//! same way.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::Artifact;
use crate::corpus::{Corpus, CorpusConfig};
use crate::text::{Analyzer, PipelineConfig};

/// Scores are reported on this grid so that mathematically equal scores
/// computed along different float paths compare equal and fall through to
/// the artifact-id tie-break.
const SCORE_RESOLUTION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexWarning {
    /// No document has a positive norm; nothing can ever be retrieved.
    DegenerateIndex,
    /// This many documents have a zero norm and are never retrieved.
    UnretrievableDocuments(usize),
}

/// Settings an index was built with, stored alongside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub corpus: CorpusConfig,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedDocument {
    pub artifact: Artifact,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub term: String,
    pub df: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    config: IndexConfig,
    documents: Vec<IndexedDocument>,
    /// Sorted by term; a term's id is its position.
    vocabulary: Vec<VocabEntry>,
    /// Indexed by term id, each sorted by doc id.
    postings: Vec<Vec<Posting>>,
    idf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub artifact_id: String,
    pub score: f64,
}

/// Search results: scores non-increasing, ties by artifact id ascending,
/// only positive scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.artifact_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts and truncates raw `(id, score)` pairs into a ranked list.
    pub fn from_scores(mut scored: Vec<(String, f64)>, top_k: Option<usize>) -> Self {
        scored.retain(|(_, s)| *s > 0.0);
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
        if let Some(k) = top_k {
            scored.truncate(k);
        }
        Self {
            entries: scored
                .into_iter()
                .map(|(artifact_id, score)| RankedEntry { artifact_id, score })
                .collect(),
        }
    }
}

fn idf(n: usize, df: u32) -> f64 {
    libm::log(n as f64 / df as f64)
}

fn quantize(score: f64) -> f64 {
    (libm::round(score * SCORE_RESOLUTION) / SCORE_RESOLUTION).clamp(0.0, 1.0)
}

/// Builds an index using `pipeline` as the analyzer.
pub fn index_corpus(corpus: &Corpus, pipeline: &PipelineConfig) -> Result<Index, IndexError> {
    index_corpus_with(corpus, pipeline.clone(), pipeline)
}

/// Builds an index, analyzing document text with `analyzer` and recording
/// `pipeline` as the configuration queries must use.
pub fn index_corpus_with<A: Analyzer + ?Sized>(
    corpus: &Corpus,
    pipeline: PipelineConfig,
    analyzer: &A,
) -> Result<Index, IndexError> {
    if corpus.documents.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let mut term_docs: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    for (doc, d) in corpus.documents.iter().enumerate() {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in analyzer.analyze(&d.raw_text) {
            *counts.entry(t).or_default() += 1;
        }
        for (term, tf) in counts {
            term_docs.entry(term).or_default().push(Posting { doc: doc as u32, tf });
        }
    }
    let n = corpus.documents.len();
    let mut vocabulary = Vec::with_capacity(term_docs.len());
    let mut postings = Vec::with_capacity(term_docs.len());
    let mut sq = alloc::vec![0.0f64; n];
    for (term, plist) in term_docs {
        let w_idf = idf(n, plist.len() as u32);
        for p in &plist {
            let w = p.tf as f64 * w_idf;
            sq[p.doc as usize] += w * w;
        }
        vocabulary.push(VocabEntry { term, df: plist.len() as u32 });
        postings.push(plist);
    }
    let documents = corpus
        .documents
        .iter()
        .zip(sq)
        .map(|(d, s)| IndexedDocument {
            artifact: d.artifact.clone(),
            norm: libm::sqrt(s),
        })
        .collect();
    Index::from_parts(
        IndexConfig {
            corpus: corpus.config.clone(),
            pipeline,
        },
        documents,
        vocabulary,
        postings,
    )
}

impl Index {
    /// Reassembles an index from stored parts, checking its invariants.
    pub fn from_parts(
        config: IndexConfig,
        documents: Vec<IndexedDocument>,
        vocabulary: Vec<VocabEntry>,
        postings: Vec<Vec<Posting>>,
    ) -> Result<Self, IndexError> {
        let n = documents.len();
        if n == 0 {
            return Err(IndexError::EmptyCorpus);
        }
        if vocabulary.len() != postings.len() {
            return Err(IndexError::Corrupt(String::from("vocabulary and postings differ in length")));
        }
        for w in vocabulary.windows(2) {
            if w[0].term >= w[1].term {
                return Err(IndexError::Corrupt(String::from("vocabulary not strictly sorted")));
            }
        }
        for (v, plist) in vocabulary.iter().zip(&postings) {
            if v.df == 0 || v.df as usize > n || v.df as usize != plist.len() {
                return Err(IndexError::Corrupt(alloc::format!("bad document frequency for `{}`", v.term)));
            }
            if plist.iter().any(|p| p.doc as usize >= n || p.tf == 0) || plist.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return Err(IndexError::Corrupt(alloc::format!("bad postings for `{}`", v.term)));
            }
        }
        if documents.iter().any(|d| !d.norm.is_finite() || d.norm < 0.0) {
            return Err(IndexError::Corrupt(String::from("bad document norm")));
        }
        let idf = vocabulary.iter().map(|v| idf(n, v.df)).collect();
        Ok(Self {
            config,
            documents,
            vocabulary,
            postings,
            idf,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn documents(&self) -> &[IndexedDocument] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &[VocabEntry] {
        &self.vocabulary
    }

    pub fn postings(&self) -> &[Vec<Posting>] {
        &self.postings
    }

    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.term.as_str().cmp(term)).ok()
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.term_id(term).map(|i| self.vocabulary[i].df)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_id(term).map(|i| self.idf[i])
    }

    pub fn warnings(&self) -> Vec<IndexWarning> {
        let zero = self.documents.iter().filter(|d| d.norm == 0.0).count();
        let mut w = Vec::new();
        if zero == self.documents.len() {
            w.push(IndexWarning::DegenerateIndex);
        } else if zero > 0 {
            w.push(IndexWarning::UnretrievableDocuments(zero));
        }
        w
    }

    /// Searches with the index's own pipeline configuration.
    pub fn search(&self, query: &str, top_k: Option<usize>) -> RankedList {
        let pipeline = self.config.pipeline.clone();
        self.search_with(query, top_k, &pipeline)
    }

    /// Cosine-ranked retrieval; `top_k = None` returns every match.
    pub fn search_with<A: Analyzer + ?Sized>(&self, query: &str, top_k: Option<usize>, analyzer: &A) -> RankedList {
        let mut q: BTreeMap<usize, u32> = BTreeMap::new();
        for t in analyzer.analyze(query) {
            if let Some(id) = self.term_id(&t) {
                *q.entry(id).or_default() += 1;
            }
        }
        let q_norm = libm::sqrt(
            q.iter()
                .map(|(&id, &tf)| {
                    let w = tf as f64 * self.idf[id];
                    w * w
                })
                .sum::<f64>(),
        );
        if q_norm == 0.0 {
            return RankedList::default();
        }
        let mut dots: BTreeMap<u32, f64> = BTreeMap::new();
        for (&id, &qtf) in &q {
            let wq = qtf as f64 * self.idf[id];
            if wq == 0.0 {
                continue;
            }
            for p in &self.postings[id] {
                *dots.entry(p.doc).or_default() += wq * (p.tf as f64 * self.idf[id]);
            }
        }
        let scored = dots
            .into_iter()
            .filter_map(|(doc, dot)| {
                let d = &self.documents[doc as usize];
                (d.norm > 0.0).then(|| (d.artifact.id.clone(), quantize(dot / (q_norm * d.norm))))
            })
            .collect();
        RankedList::from_scores(scored, top_k)
    }
}
