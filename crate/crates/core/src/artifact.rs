//! Retrievable source units and their line ownership.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::java::{self, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    File,
    Method,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::File => "file",
            Granularity::Method => "method",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "file" => Ok(Granularity::File),
            "method" => Ok(Granularity::Method),
            other => Err(format!("unknown granularity `{other}` (expected file or method)")),
        }
    }
}

/// 1-based inclusive line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(start >= 1 && start <= end);
        Self { start, end }
    }

    pub fn contains(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn contains_span(&self, other: &LineSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lines(&self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: String,
    pub granularity: Granularity,
    pub path: String,
    /// File name, or `method/arity` for methods.
    pub name: String,
    pub span: LineSpan,
    /// Lines this artifact owns, in order. Equal to `[span]` unless nested
    /// methods were carved out.
    pub owned: Vec<LineSpan>,
}

impl Artifact {
    pub fn file(path: &str, line_count: u32) -> Self {
        let span = LineSpan::new(1, line_count);
        Self {
            id: String::from(path),
            granularity: Granularity::File,
            path: String::from(path),
            name: String::from(path.rsplit('/').next().unwrap_or(path)),
            span,
            owned: alloc::vec![span],
        }
    }

    pub fn method(path: &str, name: &str, arity: u32, span: LineSpan, owned: Vec<LineSpan>) -> Self {
        Self {
            id: method_id(path, name, arity, span.start),
            granularity: Granularity::Method,
            path: String::from(path),
            name: format!("{name}/{arity}"),
            span,
            owned,
        }
    }

    /// Method name without the arity suffix.
    pub fn method_name(&self) -> Option<(&str, u32)> {
        let (name, arity) = self.name.rsplit_once('/')?;
        Some((name, arity.parse().ok()?))
    }

    pub fn owns_line(&self, line: u32) -> bool {
        self.owned.iter().any(|s| s.contains(line))
    }

    pub fn owned_line_count(&self) -> u32 {
        self.owned.iter().map(LineSpan::len).sum()
    }
}

pub fn method_id(path: &str, name: &str, arity: u32, start_line: u32) -> String {
    format!("{path}::{name}/{arity}@{start_line}")
}

/// Number of lines as counted by line-oriented VCS tools: a trailing
/// fragment without a newline still counts.
pub fn line_count(text: &str) -> u32 {
    let newlines = text.bytes().filter(|&b| b == b'\n').count();
    let partial = usize::from(!text.is_empty() && !text.ends_with('\n'));
    (newlines + partial) as u32
}

/// Subtracts `holes` (sorted or not) from `span`.
pub fn subtract_spans(span: LineSpan, holes: &[LineSpan]) -> Vec<LineSpan> {
    let mut holes: Vec<LineSpan> = holes.to_vec();
    holes.sort();
    let mut out = Vec::new();
    let mut next = span.start;
    for h in holes {
        if h.end < next || h.start > span.end {
            continue;
        }
        if h.start > next {
            out.push(LineSpan::new(next, h.start - 1));
        }
        next = next.max(h.end + 1);
    }
    if next <= span.end {
        out.push(LineSpan::new(next, span.end));
    }
    out
}

/// Partitions one source file. `FILE` yields a single artifact covering the
/// file (none for an empty file); `METHOD` yields one artifact per extracted
/// method with nested method lines carved out of their enclosing methods.
pub fn partition_source(path: &str, text: &str, granularity: Granularity) -> Result<Vec<Artifact>, ParseError> {
    match granularity {
        Granularity::File => {
            let n = line_count(text);
            Ok(if n == 0 { Vec::new() } else { alloc::vec![Artifact::file(path, n)] })
        }
        Granularity::Method => {
            let methods = java::extract_methods(text)?;
            let mut children: Vec<Vec<LineSpan>> = alloc::vec![Vec::new(); methods.len()];
            for m in &methods {
                if let Some(p) = m.parent {
                    children[p].push(LineSpan::new(m.start_line, m.end_line));
                }
            }
            Ok(methods
                .iter()
                .zip(children)
                .map(|(m, holes)| {
                    let span = LineSpan::new(m.start_line, m.end_line);
                    let owned = subtract_spans(span, &holes);
                    Artifact::method(path, &m.name, m.parameter_count, span, owned)
                })
                .collect())
        }
    }
}
