//! Annotating artifacts with changeset descriptions.
//!
//! Version-control access is abstracted behind [`History`]; everything here
//! is pure given its answers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{Artifact, Granularity};
use crate::text::Analyzer;

/// Opaque commit identifier, compared by exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChangesetId(String);

impl ChangesetId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChangesetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ChangesetId {
    fn from(s: &str) -> Self {
        Self(String::from(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Changeset {
    pub id: ChangesetId,
    pub timestamp: i64,
    pub author: String,
    pub description: String,
}

/// Which changesets annotate a line: only its latest, or its whole history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    Recent,
    All,
}

impl fmt::Display for RangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RangeMode::Recent => "recent",
            RangeMode::All => "all",
        })
    }
}

impl FromStr for RangeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "recent" => Ok(RangeMode::Recent),
            "all" => Ok(RangeMode::All),
            other => Err(format!("unknown changeset range `{other}` (expected recent or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub granularity: Granularity,
    pub range_mode: RangeMode,
    pub revision: ChangesetId,
    pub threshold: Option<ChangesetId>,
    pub file_filter: Vec<String>,
}

pub const DEFAULT_FILE_FILTER: &str = "**/*.java";

/// Read access to line-level history at a fixed revision.
pub trait History {
    type Error;

    /// Changeset that last modified each line, in line order.
    fn blame_lines(&self, path: &str) -> Result<Vec<ChangesetId>, Self::Error>;

    /// Every changeset that ever modified the 1-based inclusive range.
    fn line_range_history(&self, path: &str, start: u32, end: u32) -> Result<BTreeSet<ChangesetId>, Self::Error>;
}

/// The deduplicated changesets describing `artifact`, optionally restricted
/// to `allowed` (the proper ancestors of a threshold changeset).
pub fn annotate_artifact<H: History + ?Sized>(
    artifact: &Artifact,
    mode: RangeMode,
    allowed: Option<&BTreeSet<ChangesetId>>,
    history: &H,
) -> Result<BTreeSet<ChangesetId>, H::Error> {
    let mut ids = BTreeSet::new();
    match mode {
        RangeMode::Recent => {
            let blame = history.blame_lines(&artifact.path)?;
            for span in &artifact.owned {
                for line in span.lines() {
                    if let Some(id) = blame.get(line as usize - 1) {
                        ids.insert(id.clone());
                    }
                }
            }
        }
        RangeMode::All => {
            for span in &artifact.owned {
                ids.extend(history.line_range_history(&artifact.path, span.start, span.end)?);
            }
        }
    }
    if let Some(allowed) = allowed {
        ids.retain(|id| allowed.contains(id));
    }
    Ok(ids)
}

/// Changesets in history order (newest first) with id lookup.
#[derive(Debug, Clone, Default)]
pub struct ChangesetLog {
    changesets: Vec<Changeset>,
    position: BTreeMap<ChangesetId, usize>,
}

impl ChangesetLog {
    pub fn new(changesets: Vec<Changeset>) -> Self {
        let position = changesets
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        Self { changesets, position }
    }

    pub fn get(&self, id: &ChangesetId) -> Option<&Changeset> {
        self.position.get(id).map(|&i| &self.changesets[i])
    }

    pub fn position(&self, id: &ChangesetId) -> Option<usize> {
        self.position.get(id).copied()
    }

    pub fn changesets(&self) -> &[Changeset] {
        &self.changesets
    }

    pub fn len(&self) -> usize {
        self.changesets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changesets.is_empty()
    }

    /// Orders ids newest first; unknown ids go last, by id.
    pub fn order(&self, ids: &BTreeSet<ChangesetId>) -> Vec<ChangesetId> {
        let mut v: Vec<&ChangesetId> = ids.iter().collect();
        v.sort_by_key(|id| (self.position(id).unwrap_or(usize::MAX), *id));
        v.into_iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub artifact: Artifact,
    /// Deduplicated, newest first.
    pub changeset_ids: Vec<ChangesetId>,
    pub raw_text: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub empty_documents: usize,
    pub unparseable_files: usize,
}

/// Size of the partitioned snapshot, independent of which artifacts made it
/// into the corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub file_count: usize,
    pub method_count: usize,
    pub total_loc: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub config: CorpusConfig,
    pub documents: Vec<Document>,
    pub skipped: Skipped,
    pub sources: SourceSummary,
}

impl Corpus {
    /// Fills every document's `terms`.
    pub fn preprocess<A: Analyzer + ?Sized>(&mut self, analyzer: &A) {
        for d in &mut self.documents {
            d.terms = analyzer.analyze(&d.raw_text);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Builds documents from annotated artifacts, keeping partition order and
/// dropping artifacts with no changesets or only empty descriptions.
pub fn assemble_corpus(
    config: CorpusConfig,
    annotated: Vec<(Artifact, BTreeSet<ChangesetId>)>,
    log: &ChangesetLog,
    unparseable_files: usize,
    sources: SourceSummary,
) -> Corpus {
    let mut skipped = Skipped {
        empty_documents: 0,
        unparseable_files,
    };
    let mut documents = Vec::with_capacity(annotated.len());
    for (artifact, ids) in annotated {
        let ordered = log.order(&ids);
        let descriptions: Vec<&str> = ordered
            .iter()
            .filter_map(|id| log.get(id))
            .map(|c| c.description.as_str())
            .collect();
        if ordered.is_empty() || descriptions.iter().all(|d| d.trim().is_empty()) {
            skipped.empty_documents += 1;
            continue;
        }
        documents.push(Document {
            artifact,
            changeset_ids: ordered,
            raw_text: descriptions.join("\n"),
            terms: Vec::new(),
        });
    }
    Corpus {
        config,
        documents,
        skipped,
        sources,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub file_count: usize,
    pub method_count: usize,
    /// Rounded to two decimals.
    pub avg_distinct_changesets_per_artifact: f64,
    pub total_loc: u64,
    pub document_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("corpus has no documents")]
    EmptyCorpus,
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats, StatsError> {
    let n = corpus.documents.len();
    if n == 0 {
        return Err(StatsError::EmptyCorpus);
    }
    let total: usize = corpus.documents.iter().map(|d| d.changeset_ids.len()).sum();
    let avg = total as f64 / n as f64;
    Ok(CorpusStats {
        file_count: corpus.sources.file_count,
        method_count: corpus.sources.method_count,
        avg_distinct_changesets_per_artifact: libm::round(avg * 100.0) / 100.0,
        total_loc: corpus.sources.total_loc,
        document_count: n,
    })
}
