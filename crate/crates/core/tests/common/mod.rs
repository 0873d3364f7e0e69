#![allow(dead_code)]


use std::collections::BTreeSet;

use acir_core::corpus::{assemble_corpus, ChangesetLog, SourceSummary};
use acir_core::{Analyzer, Artifact, Changeset, ChangesetId, Corpus, CorpusConfig, Granularity, RangeMode};
use proptest::prelude::*;

/// Analyzer that takes whitespace-separated words verbatim.
pub struct Words;

impl Analyzer for Words {
    fn analyze(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(String::from).collect()
    }
}

/// One FILE document per `(id, text)`, each described by a single changeset.
pub fn corpus_of(docs: &[(String, String)]) -> Corpus {
    let log = ChangesetLog::new(
        docs.iter()
            .map(|(id, text)| Changeset {
                id: ChangesetId::new(format!("c-{id}")),
                timestamp: 0,
                author: String::new(),
                description: text.clone(),
            })
            .collect(),
    );
    let annotated = docs
        .iter()
        .map(|(id, _)| {
            let ids: BTreeSet<ChangesetId> = [ChangesetId::new(format!("c-{id}"))].into_iter().collect();
            (Artifact::file(id, 1), ids)
        })
        .collect();
    let config = CorpusConfig {
        granularity: Granularity::File,
        range_mode: RangeMode::Recent,
        revision: ChangesetId::from("fixture"),
        threshold: None,
        file_filter: vec![],
    };
    assemble_corpus(config, annotated, &log, 0, SourceSummary::default())
}

/// Up to 20 documents over a vocabulary of up to 50 terms, plus a query.
pub fn corpus_strategy() -> impl Strategy<Value = (Vec<(String, Vec<String>)>, Vec<String>)> {
    (1usize..=50).prop_flat_map(|vocab| {
        let term = (0..vocab).prop_map(|i| format!("t{i}"));
        let doc = prop::collection::vec(term.clone(), 1..12);
        let docs = prop::collection::vec(doc, 1..=20);
        let query = prop::collection::vec(term, 0..6);
        (docs, query).prop_map(|(docs, query)| {
            let mut named: Vec<(String, Vec<String>)> = docs
                .into_iter()
                .enumerate()
                .map(|(i, d)| (format!("d{i:02}"), d))
                .collect();
            // duplicate a document now and then so exact ties occur
            if named.len() > 2 {
                let copy = named[0].1.clone();
                named[1].1 = copy;
            }
            (named, query)
        })
    })
}
