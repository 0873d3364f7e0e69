//! Zero-context unified diff parsing and line mapping across a diff.

/// One `@@ -old_start,old_len +new_start,new_len @@` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
}

/// Changes to one file. A path is `None` on the side where the file does
/// not exist (added or deleted files).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
}

/// Where an old-side line ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineFate {
    /// Unchanged, now at this line.
    Moved(u32),
    /// Rewritten; the replacement sits at this line.
    Replaced(u32),
    /// Deleted with nothing in its place.
    Deleted,
}

impl FileDiff {
    /// Maps a 1-based old-side line to the new side.
    pub fn map_line(&self, line: u32) -> LineFate {
        let mut shift: i64 = 0;
        for h in &self.hunks {
            let old_end = h.old_start + h.old_len;
            if h.old_len > 0 && line >= h.old_start && line < old_end {
                if h.new_len == 0 {
                    return LineFate::Deleted;
                }
                let offset = (line - h.old_start).min(h.new_len - 1);
                return LineFate::Replaced(h.new_start + offset);
            }
            // pure insertions report old_start as the line before them
            let before = if h.old_len == 0 { line <= h.old_start } else { line < h.old_start };
            if before {
                break;
            }
            shift += i64::from(h.new_len) - i64::from(h.old_len);
        }
        LineFate::Moved((i64::from(line) + shift) as u32)
    }
}

pub fn parse_diff(text: &str) -> Vec<FileDiff> {
    let mut files: Vec<FileDiff> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("diff --git ") {
            let (a, b) = split_git_header(rest);
            files.push(FileDiff {
                old_path: a,
                new_path: b,
                hunks: Vec::new(),
            });
            continue;
        }
        let Some(cur) = files.last_mut() else { continue };
        if let Some(p) = line.strip_prefix("--- ") {
            cur.old_path = side_path(p, "a/");
        } else if let Some(p) = line.strip_prefix("+++ ") {
            cur.new_path = side_path(p, "b/");
        } else if let Some(p) = line.strip_prefix("rename from ") {
            cur.old_path = Some(p.to_string());
        } else if let Some(p) = line.strip_prefix("rename to ") {
            cur.new_path = Some(p.to_string());
        } else if line.starts_with("new file mode") {
            cur.old_path = None;
        } else if line.starts_with("deleted file mode") {
            cur.new_path = None;
        } else if line.starts_with("@@ ") {
            if let Some(h) = parse_hunk_header(line) {
                cur.hunks.push(h);
            }
        }
    }
    files
}

fn side_path(p: &str, prefix: &str) -> Option<String> {
    let p = p.trim_end_matches('\t');
    if p == "/dev/null" {
        None
    } else {
        Some(p.strip_prefix(prefix).unwrap_or(p).to_string())
    }
}

/// Best-effort split of `a/x b/y`; exact for paths without " b/".
fn split_git_header(rest: &str) -> (Option<String>, Option<String>) {
    match rest.find(" b/") {
        Some(i) => {
            let a = &rest[..i];
            let b = &rest[i + 1..];
            (
                Some(a.strip_prefix("a/").unwrap_or(a).to_string()),
                Some(b.strip_prefix("b/").unwrap_or(b).to_string()),
            )
        }
        None => (None, None),
    }
}

fn parse_hunk_header(line: &str) -> Option<Hunk> {
    let body = line.strip_prefix("@@ ")?;
    let end = body.find(" @@")?;
    let mut parts = body[..end].split(' ');
    let (old_start, old_len) = parse_range(parts.next()?.strip_prefix('-')?)?;
    let (new_start, new_len) = parse_range(parts.next()?.strip_prefix('+')?)?;
    Some(Hunk {
        old_start,
        old_len,
        new_start,
        new_len,
    })
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}
