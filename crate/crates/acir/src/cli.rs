//! Command-line entry point.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use acir_core::corpus::{corpus_stats, DEFAULT_FILE_FILTER};
use acir_core::index::{index_corpus, IndexWarning};
use acir_core::text::parse_stopwords;
use acir_core::{ChangesetId, CorpusConfig, Granularity, PipelineConfig, RangeMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::corpus::build_corpus;
use crate::error::{Error, Result};
use crate::git::GitRepository;
use crate::reenact::{author_case, link_issue_to_changesets, load_cases, run_reenactment, save_cases, ReenactOptions};
use crate::store::{load_index, save_index};

#[derive(Debug, Parser)]
#[command(name = "acir", version, about = "Locate features in source code by the commit messages that touched it")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index file from a repository snapshot.
    Index(IndexArgs),
    /// Search an index file.
    Query(QueryArgs),
    /// Corpus statistics for a repository snapshot.
    Stats(StatsArgs),
    /// Replay evaluation cases and report retrieval metrics.
    Eval(EvalArgs),
    /// List the changesets that mention issue ids, optionally writing cases.
    LinkIssues(LinkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Tsv,
}

#[derive(Debug, Args)]
struct RepoArgs {
    /// Path inside the Git repository.
    #[arg(long, default_value = ".")]
    repo: PathBuf,
    /// Revision to pin the snapshot at.
    #[arg(long, default_value = "HEAD")]
    rev: String,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Artifact granularity: file or method.
    #[arg(long, default_value = "method")]
    granularity: Granularity,
    /// Changesets per line: recent (blame) or all (line history).
    #[arg(long, default_value = "all")]
    range: RangeMode,
    /// Glob selecting source files; repeatable.
    #[arg(long = "filter", default_value = DEFAULT_FILE_FILTER)]
    filters: Vec<String>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Stopword file, one word per line.
    #[arg(long, env = "ACIR_STOPWORDS")]
    stopwords: Option<PathBuf>,
    /// Also split camelCase identifiers.
    #[arg(long)]
    split_identifiers: bool,
    /// Drop tokens shorter than this many characters.
    #[arg(long, default_value_t = 1)]
    min_token_length: usize,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    repo: RepoArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Only use changesets that are proper ancestors of this one.
    #[arg(long)]
    threshold: Option<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    repo: RepoArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    repo: RepoArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// JSON case file.
    #[arg(long)]
    cases: PathBuf,
    /// Write the report here (JSON, or TSV with `--format tsv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep per-threshold index files here between runs.
    #[arg(long)]
    index_cache: Option<PathBuf>,
    /// Granularity the user is searching for; adds an effort column.
    #[arg(long)]
    effort_intent: Option<Granularity>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[command(flatten)]
    repo: RepoArgs,
    /// Issue id; repeatable.
    #[arg(long = "issue", required = true)]
    issues: Vec<String>,
    /// Write an evaluation case for the issue to this file.
    #[arg(long)]
    cases_out: Option<PathBuf>,
    /// Issue title, used as query text with `--cases-out`.
    #[arg(long)]
    title: Option<String>,
    /// Issue body, appended to the title with `--cases-out`.
    #[arg(long)]
    body: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the tool; returns the process exit code (0 ok, 1 domain error,
/// 2 usage error).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Index(a) => cmd_index(a, out, err),
        Command::Query(a) => cmd_query(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::LinkIssues(a) => cmd_link(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn io_out(e: std::io::Error) -> Failure {
    Failure::Domain(Error::io("writing output", e))
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut p = PipelineConfig::default();
    if let Some(path) = &a.stopwords {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        p.stopwords = parse_stopwords(&text);
    }
    p.split_compound_identifiers = a.split_identifiers;
    p.min_token_length = a.min_token_length;
    Ok(p)
}

fn corpus_config(repo: &GitRepository, c: &CorpusArgs, threshold: Option<&str>) -> Result<CorpusConfig> {
    Ok(CorpusConfig {
        granularity: c.granularity,
        range_mode: c.range,
        revision: repo.pinned_revision().clone(),
        threshold: threshold.map(|t| repo.resolve(t)).transpose()?,
        file_filter: c.filters.clone(),
    })
}

fn cmd_index(a: IndexArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let repo = GitRepository::open(&a.repo.repo, &a.repo.rev)?;
    let config = corpus_config(&repo, &a.corpus, a.threshold.as_deref())?;
    let pipeline = pipeline_config(&a.pipeline)?;
    let corpus = build_corpus(&repo, &config)?;
    let index = index_corpus(&corpus, &pipeline).map_err(Error::from)?;
    for w in index.warnings() {
        let _ = match w {
            IndexWarning::DegenerateIndex => writeln!(err, "warning: no document has a positive weight; nothing is retrievable"),
            IndexWarning::UnretrievableDocuments(n) => writeln!(err, "warning: {n} documents have zero weight and are never retrieved"),
        };
    }
    save_index(&index, &a.out)?;
    let n = index.document_count();
    match a.format {
        Format::Json => {
            let v = json!({
                "documents": n,
                "empty_documents": corpus.skipped.empty_documents,
                "unparseable_files": corpus.skipped.unparseable_files,
                "vocabulary": index.vocabulary().len(),
            });
            writeln!(out, "{v}").map_err(io_out)
        }
        Format::Tsv => writeln!(out, "{n}\t{}\t{}", corpus.skipped.empty_documents, corpus.skipped.unparseable_files).map_err(io_out),
        Format::Text => writeln!(
            out,
            "indexed {n} documents ({} without descriptions, {} unparseable files skipped) -> {}",
            corpus.skipped.empty_documents,
            corpus.skipped.unparseable_files,
            a.out.display()
        )
        .map_err(io_out),
    }
}

fn cmd_query(a: QueryArgs, out: &mut dyn Write) -> CliResult {
    let index = load_index(&a.index)?;
    let ranked = index.search(&a.query, Some(a.top));
    match a.format {
        Format::Json => {
            let rows: Vec<_> = ranked
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| json!({"rank": i + 1, "artifact_id": e.artifact_id, "score": e.score}))
                .collect();
            writeln!(out, "{}", serde_json::Value::Array(rows)).map_err(io_out)
        }
        Format::Tsv | Format::Text => {
            for (i, e) in ranked.entries.iter().enumerate() {
                if a.format == Format::Tsv {
                    writeln!(out, "{}\t{}\t{:.6}", i + 1, e.artifact_id, e.score).map_err(io_out)?;
                } else {
                    writeln!(out, "{:>4}  {:.6}  {}", i + 1, e.score, e.artifact_id).map_err(io_out)?;
                }
            }
            Ok(())
        }
    }
}

fn cmd_stats(a: StatsArgs, out: &mut dyn Write) -> CliResult {
    let repo = GitRepository::open(&a.repo.repo, &a.repo.rev)?;
    let config = corpus_config(&repo, &a.corpus, a.threshold.as_deref())?;
    let corpus = build_corpus(&repo, &config)?;
    let stats = corpus_stats(&corpus).map_err(|_| Error::EmptyCorpus)?;
    match a.format {
        Format::Json => {
            let v = json!({
                "file_count": stats.file_count,
                "method_count": stats.method_count,
                "avg_distinct_changesets_per_artifact": stats.avg_distinct_changesets_per_artifact,
                "total_loc": stats.total_loc,
                "document_count": stats.document_count,
                "empty_documents": corpus.skipped.empty_documents,
                "unparseable_files": corpus.skipped.unparseable_files,
            });
            writeln!(out, "{v}").map_err(io_out)
        }
        Format::Tsv => writeln!(
            out,
            "{}\t{}\t{:.2}\t{}\t{}",
            stats.file_count, stats.method_count, stats.avg_distinct_changesets_per_artifact, stats.total_loc, stats.document_count
        )
        .map_err(io_out),
        Format::Text => writeln!(
            out,
            "files {}\nmethods {}\navg distinct changesets per artifact {:.2}\nlines of code {}\ndocuments {}\nskipped {} empty, {} unparseable",
            stats.file_count,
            stats.method_count,
            stats.avg_distinct_changesets_per_artifact,
            stats.total_loc,
            stats.document_count,
            corpus.skipped.empty_documents,
            corpus.skipped.unparseable_files
        )
        .map_err(io_out),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> CliResult {
    let repo = GitRepository::open(&a.repo.repo, &a.repo.rev)?;
    let config = corpus_config(&repo, &a.corpus, None)?;
    let pipeline = pipeline_config(&a.pipeline)?;
    let cases = load_cases(&a.cases)?;
    let options = ReenactOptions {
        index_cache: a.index_cache.clone(),
        effort_intent: a.effort_intent,
    };
    let report = run_reenactment(&cases, &config, &pipeline, &repo, &options)?;
    let rendered = match a.format {
        Format::Json => report.to_json()?,
        Format::Tsv => report.to_tsv(),
        Format::Text => report.to_text(),
    };
    match &a.out {
        Some(path) => {
            let file_text = if a.format == Format::Tsv { report.to_tsv() } else { report.to_json()? };
            write_file(path, &file_text)?;
            write!(out, "{}", report.to_text()).map_err(io_out)
        }
        None => write!(out, "{rendered}").map_err(io_out),
    }
}

fn cmd_link(a: LinkArgs, out: &mut dyn Write) -> CliResult {
    if a.cases_out.is_some() {
        if a.issues.len() != 1 {
            return Err(Failure::Usage("--cases-out takes exactly one --issue".into()));
        }
        if a.title.is_none() && a.body.is_none() {
            return Err(Failure::Usage("--cases-out needs --title and/or --body for the query text".into()));
        }
    }
    let repo = GitRepository::open(&a.repo.repo, &a.repo.rev)?;
    let log = repo.list_changesets()?;
    let links: Vec<(&String, Vec<ChangesetId>)> = a.issues.iter().map(|i| (i, link_issue_to_changesets(&log, i))).collect();
    match a.format {
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = links
                .iter()
                .map(|(i, ids)| ((*i).clone(), json!(ids)))
                .collect();
            writeln!(out, "{}", serde_json::Value::Object(map)).map_err(io_out)?;
        }
        Format::Tsv | Format::Text => {
            for (i, ids) in &links {
                let ids: Vec<&str> = ids.iter().map(ChangesetId::as_str).collect();
                if a.format == Format::Tsv {
                    writeln!(out, "{i}\t{}", ids.join(",")).map_err(io_out)?;
                } else {
                    writeln!(out, "{i}: {}", if ids.is_empty() { "(none)".to_string() } else { ids.join(" ") }).map_err(io_out)?;
                }
            }
        }
    }
    if let Some(path) = &a.cases_out {
        let query = [a.title.as_deref(), a.body.as_deref()].into_iter().flatten().collect::<Vec<_>>().join("\n");
        match author_case(&repo, &log, &a.issues[0], &query)? {
            Some(case) => save_cases(path, &[case])?,
            None => return Err(Failure::Domain(Error::InvalidCases(format!("issue {} has no linked changes", a.issues[0])))),
        }
    }
    Ok(())
}
