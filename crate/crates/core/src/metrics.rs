//! Ranking metrics for reenactment-style evaluation.
//!
//! A query that retrieves no relevant artifact is [`Effectiveness::NotFound`];
//! it contributes 0 to reciprocal rank and average precision.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::index::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Effectiveness {
    /// 1-based rank.
    Found(u32),
    NotFound,
}

impl Effectiveness {
    pub fn rank(self) -> Option<u32> {
        match self {
            Effectiveness::Found(r) => Some(r),
            Effectiveness::NotFound => None,
        }
    }

    pub fn reciprocal(self) -> f64 {
        match self {
            Effectiveness::Found(r) => 1.0 / r as f64,
            Effectiveness::NotFound => 0.0,
        }
    }
}

impl fmt::Display for Effectiveness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effectiveness::Found(r) => write!(f, "{r}"),
            Effectiveness::NotFound => f.write_str("NOT_FOUND"),
        }
    }
}

impl Serialize for Effectiveness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Effectiveness::Found(r) => s.serialize_u32(*r),
            Effectiveness::NotFound => s.serialize_str("NOT_FOUND"),
        }
    }
}

impl<'de> Deserialize<'de> for Effectiveness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Rank(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Rank(r) if r > 0 => Ok(Effectiveness::Found(r)),
            Raw::Text(t) if t == "NOT_FOUND" => Ok(Effectiveness::NotFound),
            _ => Err(serde::de::Error::custom("expected a positive rank or \"NOT_FOUND\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no query results to aggregate")]
    EmptyResultSet,
}

/// Rank of the first relevant entry.
pub fn effectiveness(ranked: &RankedList, gold: &BTreeSet<String>) -> Effectiveness {
    ranked
        .ids()
        .position(|id| gold.contains(id))
        .map_or(Effectiveness::NotFound, |i| Effectiveness::Found(i as u32 + 1))
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[Effectiveness]) -> Result<f64, MetricsError> {
    if ranks.is_empty() {
        return Err(MetricsError::EmptyResultSet);
    }
    Ok(ranks.iter().map(|r| r.reciprocal()).sum::<f64>() / ranks.len() as f64)
}

/// Mean of precision@r over the ranks r of retrieved gold items, divided by
/// the total number of gold items.
pub fn average_precision(ranked: &RankedList, gold: &BTreeSet<String>) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let mut hits = 0u32;
    let mut sum = 0.0;
    for (i, id) in ranked.ids().enumerate() {
        if gold.contains(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / gold.len() as f64
}

pub fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyResultSet);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Effort when the user wants a file but results are methods: the first
/// method of a gold file is the answer, and every distinct wrong file before
/// it costs one inspection however many of its methods appear.
pub fn effort_case_one<F, S>(method_ranked: &RankedList, gold_files: &BTreeSet<String>, file_of: F) -> Effectiveness
where
    F: Fn(&str) -> Option<S>,
    S: AsRef<str> + Ord,
{
    let mut wrong: BTreeSet<S> = BTreeSet::new();
    for id in method_ranked.ids() {
        let Some(file) = file_of(id) else { continue };
        if gold_files.contains(file.as_ref()) {
            return Effectiveness::Found(wrong.len() as u32 + 1);
        }
        wrong.insert(file);
    }
    Effectiveness::NotFound
}

/// Effort when the user wants a method but results are files: every method
/// of every file ranked above the gold file, plus the gold method's 1-based
/// position within its own file.
pub fn effort_case_two(
    file_ranked: &RankedList,
    gold_file: &str,
    methods_per_file: &BTreeMap<String, u32>,
    gold_position_in_file: u32,
) -> Effectiveness {
    let mut cost = 0u32;
    for id in file_ranked.ids() {
        if id == gold_file {
            return Effectiveness::Found(cost + gold_position_in_file);
        }
        cost += methods_per_file.get(id).copied().unwrap_or(0);
    }
    Effectiveness::NotFound
}

/// Five-number summary plus mean, with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let lo = libm::floor(h) as usize;
            let hi = libm::ceil(h) as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }

    /// Summary over the found ranks only.
    pub fn of_effectiveness(ranks: &[Effectiveness]) -> Option<Self> {
        let found: Vec<f64> = ranks.iter().filter_map(|r| r.rank()).map(f64::from).collect();
        Self::of(&found)
    }
}
