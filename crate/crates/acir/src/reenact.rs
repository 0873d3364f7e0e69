//! Reenactment of resolved change requests: link issues to fix commits,
//! derive gold artifacts, and score retrieval with history cut off at each
//! fix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use acir_core::index::index_corpus;
use acir_core::metrics::{self, Summary};
use acir_core::{Artifact, Changeset, ChangesetId, CorpusConfig, Effectiveness, Granularity, Index, PipelineConfig, RangeMode, RankedList};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::build_corpus;
use crate::diff::LineFate;
use crate::error::{Error, Result};
use crate::git::GitRepository;
use crate::partition::{partition, FileFilter, Partition};
use crate::store;

/// A place in the pinned snapshot a fix touched. With only `path` it names
/// the whole file; `method`/`arity` name methods; `line` names the innermost
/// method owning that line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldLocation {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

impl GoldLocation {
    pub fn file(path: &str) -> Self {
        Self { path: path.to_string(), method: None, arity: None, line: None }
    }

    pub fn line(path: &str, line: u32) -> Self {
        Self { line: Some(line), ..Self::file(path) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub query: String,
    /// The fix changeset; only its proper ancestors are indexed.
    pub threshold: ChangesetId,
    pub gold: Vec<GoldLocation>,
}

pub fn parse_cases(text: &str) -> Result<Vec<EvalCase>> {
    let cases: Vec<EvalCase> = serde_json::from_str(text).map_err(|e| Error::InvalidCases(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for c in &cases {
        if c.gold.is_empty() {
            return Err(Error::InvalidCases(format!("case `{}` has no gold locations", c.case_id)));
        }
        if !seen.insert(c.case_id.as_str()) {
            return Err(Error::InvalidCases(format!("duplicate case id `{}`", c.case_id)));
        }
    }
    Ok(cases)
}

pub fn load_cases(path: &Path) -> Result<Vec<EvalCase>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_cases(&text)
}

pub fn save_cases(path: &Path, cases: &[EvalCase]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cases)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn issue_pattern(issue_id: &str) -> Regex {
    let id = regex::escape(issue_id.trim_start_matches('#'));
    Regex::new(&format!(r"(?i)(?:^|[^\w.])#?{id}(?:$|[^\w])")).expect("escaped issue pattern")
}

/// Changesets whose description mentions `issue_id` as a standalone token
/// (`123`, `bug 123`, `issue 123`, `#123`), in the given (newest first)
/// order.
pub fn link_issue_to_changesets(changesets: &[Changeset], issue_id: &str) -> Vec<ChangesetId> {
    if issue_id.trim_start_matches('#').is_empty() {
        return Vec::new();
    }
    let re = issue_pattern(issue_id);
    changesets
        .iter()
        .filter(|c| re.is_match(&c.description))
        .map(|c| c.id.clone())
        .collect()
}

/// Locations at the pinned revision touched by the fixes, plus the number
/// of touched files that no longer exist there.
pub fn fix_locations(repo: &GitRepository, fixes: &[ChangesetId]) -> Result<(BTreeSet<GoldLocation>, usize)> {
    let pinned = repo.pinned_revision().clone();
    let mut out = BTreeSet::new();
    let mut unmappable = 0;
    for fix in fixes {
        let fix = repo.resolve(fix.as_str())?;
        let mut touched: BTreeMap<String, BTreeSet<Option<u32>>> = BTreeMap::new();
        for f in repo.commit_diff(&fix)? {
            let Some(path) = f.new_path.clone() else {
                unmappable += 1;
                continue;
            };
            let entry = touched.entry(path).or_default();
            if f.hunks.is_empty() {
                entry.insert(None);
            }
            for h in &f.hunks {
                if h.new_len == 0 {
                    entry.insert(None);
                }
                entry.extend((h.new_start..h.new_start + h.new_len).map(Some));
            }
        }
        let forward = if fix == pinned { Vec::new() } else { repo.diff_between(&fix, &pinned)? };
        for (path, lines) in touched {
            let Some(fd) = forward.iter().find(|d| d.old_path.as_deref() == Some(path.as_str())) else {
                out.extend(lines.into_iter().map(|l| match l {
                    Some(l) => GoldLocation::line(&path, l),
                    None => GoldLocation::file(&path),
                }));
                continue;
            };
            let Some(now) = fd.new_path.as_deref() else {
                unmappable += 1;
                continue;
            };
            for l in lines {
                out.insert(match l.map(|l| fd.map_line(l)) {
                    Some(LineFate::Moved(n)) | Some(LineFate::Replaced(n)) => GoldLocation::line(now, n),
                    Some(LineFate::Deleted) | None => GoldLocation::file(now),
                });
            }
        }
    }
    Ok((out, unmappable))
}

/// Artifact ids named by `locations`, and how many locations named nothing.
pub fn map_gold(artifacts: &[Artifact], granularity: Granularity, locations: &[GoldLocation]) -> (BTreeSet<String>, usize) {
    let mut ids = BTreeSet::new();
    let mut missed = 0;
    for loc in locations {
        let in_file = artifacts.iter().filter(|a| a.path == loc.path && a.granularity == granularity);
        let hits: Vec<&Artifact> = match granularity {
            Granularity::File => in_file.collect(),
            Granularity::Method => {
                if let Some(line) = loc.line {
                    in_file.filter(|a| a.owns_line(line)).collect()
                } else if let Some(name) = &loc.method {
                    in_file
                        .filter(|a| {
                            a.method_name()
                                .is_some_and(|(n, arity)| n == name && loc.arity.is_none_or(|want| want == arity))
                        })
                        .collect()
                } else {
                    Vec::new()
                }
            }
        };
        if hits.is_empty() {
            missed += 1;
        }
        ids.extend(hits.into_iter().map(|a| a.id.clone()));
    }
    (ids, missed)
}

/// Gold artifacts at the pinned revision for a set of fix changesets.
pub fn derive_gold(repo: &GitRepository, fixes: &[ChangesetId], granularity: Granularity, file_filter: &[String]) -> Result<(BTreeSet<String>, usize)> {
    let (locations, gone) = fix_locations(repo, fixes)?;
    let parts = partition(repo, granularity, &FileFilter::new(file_filter)?)?;
    let locations: Vec<GoldLocation> = locations.into_iter().collect();
    let (ids, missed) = map_gold(&parts.artifacts, granularity, &locations);
    Ok((ids, gone + missed))
}

/// Builds an evaluation case from an issue's linked fixes: the oldest fix is
/// the threshold, every fix contributes gold locations.
pub fn author_case(repo: &GitRepository, changesets: &[Changeset], issue_id: &str, query: &str) -> Result<Option<EvalCase>> {
    let fixes = link_issue_to_changesets(changesets, issue_id);
    let Some(oldest) = fixes.last().cloned() else { return Ok(None) };
    let (gold, _) = fix_locations(repo, &fixes)?;
    if gold.is_empty() {
        return Ok(None);
    }
    Ok(Some(EvalCase {
        case_id: issue_id.to_string(),
        query: query.to_string(),
        threshold: oldest,
        gold: gold.into_iter().collect(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Evaluated,
    /// No gold location maps to an artifact; excluded from the means.
    Unmappable,
    /// The index could not be built; excluded from the means.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub case_id: String,
    pub status: CaseStatus,
    pub effectiveness: Effectiveness,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
    pub retrieved_count: usize,
    pub gold_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<Effectiveness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub revision: ChangesetId,
    pub granularity: Granularity,
    pub range_mode: RangeMode,
    pub file_filter: Vec<String>,
    pub pipeline: PipelineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort_intent: Option<Granularity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ReportConfig,
    pub cases: Vec<QueryResult>,
    /// `None` when no case could be evaluated.
    pub mrr: Option<f64>,
    pub map: Option<f64>,
    pub effectiveness_summary: Option<Summary>,
    pub not_found_count: usize,
    pub unmappable_case_count: usize,
    pub failed_case_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort_summary: Option<Summary>,
}

#[derive(Debug, Clone, Default)]
pub struct ReenactOptions {
    /// Directory for per-threshold index files reused across runs.
    pub index_cache: Option<PathBuf>,
    /// Granularity the simulated user is looking for, when it may differ
    /// from the result granularity.
    pub effort_intent: Option<Granularity>,
}

type CacheKey = (ChangesetId, Granularity, RangeMode);
type CacheSlot = Arc<OnceLock<std::result::Result<Arc<Index>, BuildFailure>>>;

#[derive(Debug, Clone)]
enum BuildFailure {
    /// Nothing precedes the threshold; every query retrieves nothing.
    EmptyCorpus,
    Other(String),
}

impl From<Error> for BuildFailure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyCorpus => BuildFailure::EmptyCorpus,
            e => BuildFailure::Other(e.to_string()),
        }
    }
}

/// Indexes keyed by (threshold, granularity, range). Construction for one key
/// happens once; later lookups share the built index.
struct IndexCache<'a> {
    repo: &'a GitRepository,
    base: &'a CorpusConfig,
    pipeline: &'a PipelineConfig,
    dir: Option<&'a Path>,
    slots: Mutex<HashMap<CacheKey, CacheSlot>>,
}

impl IndexCache<'_> {
    fn get(&self, threshold: &ChangesetId) -> std::result::Result<Arc<Index>, BuildFailure> {
        let key = (threshold.clone(), self.base.granularity, self.base.range_mode);
        let slot = Arc::clone(self.slots.lock().expect("index cache").entry(key).or_default());
        slot.get_or_init(|| self.build(threshold).map(Arc::new).map_err(BuildFailure::from))
            .clone()
    }

    fn build(&self, threshold: &ChangesetId) -> Result<Index> {
        let config = CorpusConfig {
            threshold: Some(threshold.clone()),
            ..self.base.clone()
        };
        let file = self.dir.map(|d| {
            d.join(format!(
                "{}-{}-{}.json",
                threshold.as_str(),
                config.granularity,
                config.range_mode
            ))
        });
        if let Some(file) = &file {
            if let Ok(idx) = store::load_index(file) {
                if idx.config().corpus == config && &idx.config().pipeline == self.pipeline {
                    return Ok(idx);
                }
            }
        }
        let corpus = build_corpus(self.repo, &config)?;
        let idx = index_corpus(&corpus, self.pipeline)?;
        if let Some(file) = &file {
            store::save_index(&idx, file)?;
        }
        Ok(idx)
    }
}

struct Partitions {
    result: Partition,
    file: Option<Partition>,
    method: Option<Partition>,
}

/// Replays every case: index history strictly before its threshold, query
/// with its text, and score the ranking against its gold artifacts.
pub fn run_reenactment(
    cases: &[EvalCase],
    config: &CorpusConfig,
    pipeline: &PipelineConfig,
    repo: &GitRepository,
    options: &ReenactOptions,
) -> Result<MetricsReport> {
    if cases.is_empty() {
        return Err(Error::EmptyCaseSet);
    }
    let mut base = config.clone();
    base.revision = repo.resolve(config.revision.as_str())?;
    base.threshold = None;
    if let Some(dir) = &options.index_cache {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let filter = FileFilter::new(&base.file_filter)?;
    let result_parts = partition(repo, base.granularity, &filter)?;
    let other = |g: Granularity| -> Result<Option<Partition>> {
        match options.effort_intent {
            Some(i) if i == g && g != base.granularity => Ok(Some(partition(repo, g, &filter)?)),
            _ => Ok(None),
        }
    };
    let parts = Partitions {
        file: other(Granularity::File)?,
        method: other(Granularity::Method)?,
        result: result_parts,
    };
    let cache = IndexCache {
        repo,
        base: &base,
        pipeline,
        dir: options.index_cache.as_deref(),
        slots: Mutex::new(HashMap::new()),
    };
    let results: Vec<QueryResult> = cases
        .par_iter()
        .map(|case| evaluate_case(case, &base, &parts, &cache, options.effort_intent))
        .collect();
    Ok(summarize(
        ReportConfig {
            revision: base.revision.clone(),
            granularity: base.granularity,
            range_mode: base.range_mode,
            file_filter: base.file_filter.clone(),
            pipeline: pipeline.clone(),
            effort_intent: options.effort_intent,
        },
        results,
    ))
}

fn evaluate_case(
    case: &EvalCase,
    base: &CorpusConfig,
    parts: &Partitions,
    cache: &IndexCache<'_>,
    intent: Option<Granularity>,
) -> QueryResult {
    let (gold, _) = map_gold(&parts.result.artifacts, base.granularity, &case.gold);
    let mut r = QueryResult {
        case_id: case.case_id.clone(),
        status: CaseStatus::Evaluated,
        effectiveness: Effectiveness::NotFound,
        reciprocal_rank: 0.0,
        average_precision: 0.0,
        retrieved_count: 0,
        gold_count: gold.len(),
        effort: None,
        error: None,
    };
    if gold.is_empty() {
        r.status = CaseStatus::Unmappable;
        return r;
    }
    let index = cache
        .repo
        .resolve(case.threshold.as_str())
        .map_err(BuildFailure::from)
        .and_then(|t| cache.get(&t));
    let ranked = match index {
        Ok(index) => index.search(&case.query, None),
        Err(BuildFailure::EmptyCorpus) => RankedList::default(),
        Err(BuildFailure::Other(e)) => {
            r.status = CaseStatus::Failed;
            r.error = Some(e);
            return r;
        }
    };
    r.effectiveness = metrics::effectiveness(&ranked, &gold);
    r.reciprocal_rank = r.effectiveness.reciprocal();
    r.average_precision = metrics::average_precision(&ranked, &gold);
    r.retrieved_count = ranked.len();
    r.effort = intent.and_then(|i| effort(i, base.granularity, &ranked, r.effectiveness, case, parts));
    r
}

fn effort(
    intent: Granularity,
    result: Granularity,
    ranked: &RankedList,
    effectiveness: Effectiveness,
    case: &EvalCase,
    parts: &Partitions,
) -> Option<Effectiveness> {
    match (intent, result) {
        (i, r) if i == r => Some(effectiveness),
        (Granularity::File, Granularity::Method) => {
            let files = parts.file.as_ref()?;
            let (gold_files, _) = map_gold(&files.artifacts, Granularity::File, &case.gold);
            if gold_files.is_empty() {
                return None;
            }
            let path_of: HashMap<&str, &str> = parts
                .result
                .artifacts
                .iter()
                .map(|a| (a.id.as_str(), a.path.as_str()))
                .collect();
            Some(metrics::effort_case_one(ranked, &gold_files, |id| path_of.get(id).copied()))
        }
        _ => {
            let methods = parts.method.as_ref()?;
            let (gold_methods, _) = map_gold(&methods.artifacts, Granularity::Method, &case.gold);
            let mut per_file: BTreeMap<String, u32> = BTreeMap::new();
            for a in &methods.artifacts {
                *per_file.entry(a.path.clone()).or_default() += 1;
            }
            gold_methods
                .iter()
                .filter_map(|id| {
                    let a = methods.artifacts.iter().find(|a| &a.id == id)?;
                    let pos = methods.methods_in(&a.path).position(|m| m.id == a.id)? as u32 + 1;
                    Some(metrics::effort_case_two(ranked, &a.path, &per_file, pos))
                })
                .min()
        }
    }
}

fn summarize(config: ReportConfig, cases: Vec<QueryResult>) -> MetricsReport {
    let evaluated: Vec<&QueryResult> = cases.iter().filter(|c| c.status == CaseStatus::Evaluated).collect();
    let ranks: Vec<Effectiveness> = evaluated.iter().map(|c| c.effectiveness).collect();
    let aps: Vec<f64> = evaluated.iter().map(|c| c.average_precision).collect();
    let efforts: Vec<Effectiveness> = evaluated.iter().filter_map(|c| c.effort).collect();
    MetricsReport {
        mrr: metrics::mrr(&ranks).ok(),
        map: metrics::mean(&aps).ok(),
        effectiveness_summary: Summary::of_effectiveness(&ranks),
        not_found_count: ranks.iter().filter(|r| **r == Effectiveness::NotFound).count(),
        unmappable_case_count: cases.iter().filter(|c| c.status == CaseStatus::Unmappable).count(),
        failed_case_count: cases.iter().filter(|c| c.status == CaseStatus::Failed).count(),
        effort_summary: config.effort_intent.and_then(|_| Summary::of_effectiveness(&efforts)),
        config,
        cases,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `case_id, effectiveness, rr, ap`, tab separated, with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("case_id\teffectiveness\trr\tap\n");
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.6}\t{:.6}",
                c.case_id, c.effectiveness, c.reciprocal_rank, c.average_precision
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} cases ({} granularity, {} changesets)",
            self.cases.len(),
            self.config.granularity,
            self.config.range_mode
        );
        for c in &self.cases {
            let status = match c.status {
                CaseStatus::Evaluated => String::new(),
                CaseStatus::Unmappable => "  [unmappable]".into(),
                CaseStatus::Failed => format!("  [failed: {}]", c.error.as_deref().unwrap_or("")),
            };
            let effort = c.effort.map(|e| format!("  effort={e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "  {}: effectiveness={} rr={:.6} ap={:.6}{effort}{status}",
                c.case_id, c.effectiveness, c.reciprocal_rank, c.average_precision
            );
        }
        let _ = writeln!(s, "MRR {}", fmt(self.mrr));
        let _ = writeln!(s, "MAP {}", fmt(self.map));
        if let Some(e) = &self.effectiveness_summary {
            let _ = writeln!(
                s,
                "effectiveness min {} q1 {} median {} q3 {} max {} mean {:.2}",
                e.min, e.q1, e.median, e.q3, e.max, e.mean
            );
        }
        if let Some(e) = &self.effort_summary {
            let _ = writeln!(
                s,
                "effort min {} q1 {} median {} q3 {} max {} mean {:.2}",
                e.min, e.q1, e.median, e.q3, e.max, e.mean
            );
        }
        let _ = writeln!(
            s,
            "not found {}, unmappable {}, failed {}",
            self.not_found_count, self.unmappable_case_count, self.failed_case_count
        );
        s
    }
}
