//! Checks shared by the integration tests and the acceptance runner. Each
//! returns a short summary on success and a description of the first
//! mismatch otherwise.

use std::collections::BTreeSet;

use acir::corpus::{annotate, build_corpus};
use acir::partition::{partition, FileFilter};
use acir::GitRepository;
use acir_core::corpus::{corpus_stats, DEFAULT_FILE_FILTER};
use acir_core::{Artifact, ChangesetId, CorpusConfig, Granularity, RangeMode};

use super::Fixture;

pub type Check = Result<String, String>;

pub fn open(fx: &Fixture) -> GitRepository {
    GitRepository::open(fx.path(), fx.head()).expect("fixture repository opens")
}

pub fn config(fx: &Fixture, g: Granularity, mode: RangeMode, threshold: Option<usize>) -> CorpusConfig {
    CorpusConfig {
        granularity: g,
        range_mode: mode,
        revision: ChangesetId::new(fx.head()),
        threshold: threshold.map(|t| ChangesetId::new(fx.sha(t))),
        file_filter: vec![DEFAULT_FILE_FILTER.to_string()],
    }
}

fn ids(set: &BTreeSet<ChangesetId>) -> BTreeSet<String> {
    set.iter().map(|c| c.to_string()).collect()
}

fn artifacts(repo: &GitRepository, g: Granularity) -> Vec<Artifact> {
    let filter = FileFilter::new(&[DEFAULT_FILE_FILTER]).unwrap();
    partition(repo, g, &filter).expect("partition").artifacts
}

/// Partitioner output agrees with the model's artifact ids and spans.
pub fn partition_matches_model(fx: &Fixture) -> Check {
    let repo = open(fx);
    for (g, method_level) in [(Granularity::File, false), (Granularity::Method, true)] {
        let got: Vec<(String, u32, u32)> = artifacts(&repo, g).iter().map(|a| (a.id.clone(), a.span.start, a.span.end)).collect();
        let want: Vec<(String, u32, u32)> = fx.model_artifacts(method_level).into_iter().map(|a| (a.id, a.start, a.end)).collect();
        if got != want {
            return Err(format!("{g} partition differs:\n got {got:?}\nwant {want:?}"));
        }
    }
    Ok(format!("{} methods", fx.model_artifacts(true).len()))
}

/// RECENT and ALL annotations equal the model for every artifact, with and
/// without each of the given thresholds.
pub fn annotations_match_model(fx: &Fixture, thresholds: &[Option<usize>]) -> Check {
    let repo = open(fx);
    let mut compared = 0;
    for (g, method_level) in [(Granularity::File, false), (Granularity::Method, true)] {
        let arts = artifacts(&repo, g);
        let model = fx.model_artifacts(method_level);
        for (a, m) in arts.iter().zip(&model) {
            for &t in thresholds {
                let allowed = t.map(|t| fx.proper_ancestors(t));
                for mode in [RangeMode::Recent, RangeMode::All] {
                    let got = ids(&annotate(&repo, a, &config(fx, g, mode, t)).map_err(|e| e.to_string())?);
                    let mut want = match mode {
                        RangeMode::Recent => fx.oracle_recent(m),
                        RangeMode::All => fx.oracle_all(m),
                    };
                    if let Some(allowed) = &allowed {
                        want.retain(|c| allowed.contains(c));
                    }
                    let want = fx.shas(&want);
                    if got != want {
                        let name = |s: &String| fx.index_of(s);
                        return Err(format!(
                            "{} {mode} threshold {t:?}: got {:?} want {:?}",
                            a.id,
                            got.iter().map(name).collect::<Vec<_>>(),
                            want.iter().map(name).collect::<Vec<_>>()
                        ));
                    }
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{compared} annotations"))
}

/// RECENT ⊆ ALL, method ⊆ enclosing file, and threshold monotonicity.
pub fn subset_invariants(fx: &Fixture, thresholds: &[usize]) -> Check {
    let repo = open(fx);
    let files = artifacts(&repo, Granularity::File);
    let methods = artifacts(&repo, Granularity::Method);
    let mut checked = 0;
    for mode in [RangeMode::Recent, RangeMode::All] {
        for t in std::iter::once(None).chain(thresholds.iter().copied().map(Some)) {
            for f in &files {
                let fset = annotate(&repo, f, &config(fx, Granularity::File, mode, t)).map_err(|e| e.to_string())?;
                for m in methods.iter().filter(|m| m.path == f.path) {
                    let mset = annotate(&repo, m, &config(fx, Granularity::Method, mode, t)).map_err(|e| e.to_string())?;
                    if !mset.is_subset(&fset) {
                        return Err(format!("{mode} {t:?}: {} not within {}", m.id, f.id));
                    }
                    checked += 1;
                }
            }
        }
    }
    for g in [Granularity::File, Granularity::Method] {
        for a in artifacts(&repo, g) {
            for t in std::iter::once(None).chain(thresholds.iter().copied().map(Some)) {
                let recent = annotate(&repo, &a, &config(fx, g, RangeMode::Recent, t)).map_err(|e| e.to_string())?;
                let all = annotate(&repo, &a, &config(fx, g, RangeMode::All, t)).map_err(|e| e.to_string())?;
                if !recent.is_subset(&all) {
                    return Err(format!("{} {t:?}: RECENT not within ALL", a.id));
                }
                checked += 1;
            }
            for &t1 in thresholds {
                for &t2 in thresholds {
                    let (a1, a2) = (fx.proper_ancestors(t1), fx.proper_ancestors(t2));
                    if !a1.is_subset(&a2) {
                        continue;
                    }
                    for mode in [RangeMode::Recent, RangeMode::All] {
                        let s1 = annotate(&repo, &a, &config(fx, g, mode, Some(t1))).map_err(|e| e.to_string())?;
                        let s2 = annotate(&repo, &a, &config(fx, g, mode, Some(t2))).map_err(|e| e.to_string())?;
                        if !s1.is_subset(&s2) {
                            return Err(format!("{} {mode}: threshold {t1} not within {t2}", a.id));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} inclusions"))
}

/// corpus_stats average against the model, for all four configurations.
pub fn stats_match_model(fx: &Fixture, threshold: Option<usize>) -> Check {
    let repo = open(fx);
    let mut report = Vec::new();
    for (g, method_level) in [(Granularity::File, false), (Granularity::Method, true)] {
        for (mode, all) in [(RangeMode::Recent, false), (RangeMode::All, true)] {
            let corpus = build_corpus(&repo, &config(fx, g, mode, threshold)).map_err(|e| e.to_string())?;
            let want = fx.oracle_average(method_level, all, threshold);
            match (corpus_stats(&corpus), want) {
                (Ok(s), Some((n, avg))) => {
                    if s.document_count != n || format!("{:.2}", s.avg_distinct_changesets_per_artifact) != format!("{avg:.2}") {
                        return Err(format!(
                            "{g}/{mode}: got {} docs avg {:.2}, want {n} docs avg {avg:.2}",
                            s.document_count, s.avg_distinct_changesets_per_artifact
                        ));
                    }
                    report.push(format!("{g}/{mode}={avg:.2}"));
                }
                (Err(_), None) => report.push(format!("{g}/{mode}=empty")),
                (got, want) => return Err(format!("{g}/{mode}: got {got:?}, want {want:?}")),
            }
        }
    }
    Ok(report.join(" "))
}
