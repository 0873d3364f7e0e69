//! Corpus construction against a live repository.

use std::collections::BTreeSet;

use acir_core::corpus::{annotate_artifact, assemble_corpus, ChangesetLog};
use acir_core::{Artifact, ChangesetId, Corpus, CorpusConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::git::GitRepository;
use crate::partition::{partition, FileFilter};

/// Proper ancestors of the configured threshold, after checking that the
/// threshold is an ancestor-or-equal of the pinned revision.
pub fn allowed_changesets(repo: &GitRepository, config: &CorpusConfig) -> Result<Option<BTreeSet<ChangesetId>>> {
    let Some(t) = &config.threshold else { return Ok(None) };
    let t = repo.resolve(t.as_str())?;
    if !repo.is_ancestor(&t, repo.pinned_revision())? {
        return Err(Error::ThresholdNotAncestor {
            threshold: t.to_string(),
            revision: repo.pinned_revision().to_string(),
        });
    }
    repo.strict_ancestors(t.as_str()).map(Some)
}

pub fn annotate(repo: &GitRepository, artifact: &Artifact, config: &CorpusConfig) -> Result<BTreeSet<ChangesetId>> {
    let allowed = allowed_changesets(repo, config)?;
    annotate_artifact(artifact, config.range_mode, allowed.as_ref(), repo)
}

/// Partitions the pinned snapshot and annotates every artifact in parallel.
/// `config.revision` must name the repository's pinned revision.
pub fn build_corpus(repo: &GitRepository, config: &CorpusConfig) -> Result<Corpus> {
    let pinned = repo.resolve(config.revision.as_str())?;
    if &pinned != repo.pinned_revision() {
        return Err(Error::UnknownRevision(format!(
            "{} (repository is pinned at {})",
            config.revision,
            repo.pinned_revision()
        )));
    }
    let filter = FileFilter::new(&config.file_filter)?;
    let parts = partition(repo, config.granularity, &filter)?;
    let allowed = allowed_changesets(repo, config)?;
    let annotated = parts
        .artifacts
        .into_par_iter()
        .map(|a| {
            let ids = annotate_artifact(&a, config.range_mode, allowed.as_ref(), repo)?;
            Ok((a, ids))
        })
        .collect::<Result<Vec<_>>>()?;
    let log = ChangesetLog::new(repo.list_changesets()?);
    let mut normalized = config.clone();
    normalized.revision = pinned;
    if let Some(t) = &config.threshold {
        normalized.threshold = Some(repo.resolve(t.as_str())?);
    }
    Ok(assemble_corpus(normalized, annotated, &log, parts.unparseable.len(), parts.sources))
}
