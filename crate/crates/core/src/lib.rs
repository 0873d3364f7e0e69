//! Core of a feature-location engine that describes source artifacts by the
//! commit messages of the changesets that touched them.
//!
//! Everything in this crate is pure and `no_std` (with `alloc`): text
//! preprocessing, Java method extraction, corpus assembly over an abstract
//! [`corpus::History`], TF-IDF retrieval and ranking metrics. Repository
//! access, file formats and the command line live in the `acir` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod artifact;
pub mod corpus;
pub mod index;
pub mod java;
pub mod metrics;
pub mod text;

pub use artifact::{Artifact, Granularity, LineSpan};
pub use corpus::{Changeset, ChangesetId, Corpus, CorpusConfig, Document, History, RangeMode};
pub use index::{Index, IndexConfig, RankedEntry, RankedList};
pub use metrics::Effectiveness;
pub use text::{Analyzer, PipelineConfig};
