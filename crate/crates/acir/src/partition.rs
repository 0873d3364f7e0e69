//! Splitting the pinned snapshot into retrievable artifacts.

use acir_core::artifact::{line_count, partition_source};
use acir_core::corpus::SourceSummary;
use acir_core::java::ParseError;
use acir_core::{Artifact, Granularity};
use globset::{GlobBuilder, GlobSet, GlobSetBuilder};
use log::warn;

use crate::error::{Error, Result};
use crate::git::GitRepository;

/// Path filter built from `*`, `**` and `?` globs; `*` stops at `/`.
#[derive(Debug, Clone)]
pub struct FileFilter {
    set: GlobSet,
}

impl FileFilter {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::FileFilter("no patterns given".into()));
        }
        let mut b = GlobSetBuilder::new();
        for p in patterns {
            let glob = GlobBuilder::new(p.as_ref())
                .literal_separator(true)
                .build()
                .map_err(|e| Error::FileFilter(e.to_string()))?;
            b.add(glob);
        }
        Ok(Self {
            set: b.build().map_err(|e| Error::FileFilter(e.to_string()))?,
        })
    }

    pub fn matches(&self, path: &str) -> bool {
        self.set.is_match(path)
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    /// Ordered by path, then start line.
    pub artifacts: Vec<Artifact>,
    pub unparseable: Vec<(String, ParseError)>,
    pub sources: SourceSummary,
}

impl Partition {
    /// Method artifacts grouped by file, in source order.
    pub fn methods_in<'a>(&'a self, path: &'a str) -> impl Iterator<Item = &'a Artifact> + 'a {
        self.artifacts
            .iter()
            .filter(move |a| a.granularity == Granularity::Method && a.path == path)
    }
}

/// Reads every file matching `filter` at the pinned revision and splits it.
///
/// Files the method extractor cannot parse are reported in `unparseable`;
/// they contribute no METHOD artifacts but still count as files at FILE
/// granularity.
pub fn partition(repo: &GitRepository, granularity: Granularity, filter: &FileFilter) -> Result<Partition> {
    let mut paths: Vec<String> = repo.list_files()?.into_iter().filter(|p| filter.matches(p)).collect();
    paths.sort();
    let contents = repo.read_files(&paths)?;
    let mut artifacts = Vec::new();
    let mut unparseable = Vec::new();
    let mut sources = SourceSummary::default();
    for (path, text) in paths.iter().zip(contents) {
        let Some(text) = text else { continue };
        sources.file_count += 1;
        sources.total_loc += u64::from(line_count(&text));
        let methods = match partition_source(path, &text, Granularity::Method) {
            Ok(m) => m,
            Err(e) => {
                warn!("skipping {path}: {e}");
                unparseable.push((path.clone(), e));
                if granularity == Granularity::File {
                    artifacts.extend(partition_source(path, &text, Granularity::File).unwrap_or_default());
                }
                continue;
            }
        };
        sources.method_count += methods.len();
        match granularity {
            Granularity::Method => artifacts.extend(methods),
            Granularity::File => artifacts.extend(partition_source(path, &text, Granularity::File).unwrap_or_default()),
        }
    }
    Ok(Partition {
        artifacts,
        unparseable,
        sources,
    })
}
