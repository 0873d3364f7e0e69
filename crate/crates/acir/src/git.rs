//! Read-only access to a Git repository through the `git` command line.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};

use acir_core::artifact::line_count;
use acir_core::{Changeset, ChangesetId, History};

use crate::diff::{parse_diff, FileDiff};
use crate::error::{Error, Result};

/// A repository pinned at one commit. Safe to share between threads; every
/// query spawns its own `git` process.
#[derive(Debug)]
pub struct GitRepository {
    root: PathBuf,
    pinned: ChangesetId,
    blame_cache: Mutex<HashMap<String, Arc<Vec<ChangesetId>>>>,
    line_counts: Mutex<HashMap<String, u32>>,
}

impl GitRepository {
    pub fn open(path: impl AsRef<Path>, revision: &str) -> Result<Self> {
        let path = path.as_ref();
        let out = git_command(path)
            .args(["rev-parse", "--show-toplevel"])
            .output()
            .map_err(|e| Error::io("running git", e))?;
        if !out.status.success() {
            return Err(Error::NotARepository(path.to_path_buf()));
        }
        let root = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim_end_matches('\n'));
        let mut repo = Self {
            root,
            pinned: ChangesetId::from(""),
            blame_cache: Mutex::new(HashMap::new()),
            line_counts: Mutex::new(HashMap::new()),
        };
        repo.pinned = repo.resolve(revision)?;
        Ok(repo)
    }

    /// A new handle on the same repository pinned elsewhere.
    pub fn at(&self, revision: &str) -> Result<Self> {
        Self::open(&self.root, revision)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pinned_revision(&self) -> &ChangesetId {
        &self.pinned
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>> {
        let out = git_command(&self.root)
            .args(args)
            .output()
            .map_err(|e| Error::io("running git", e))?;
        if !out.status.success() {
            return Err(Error::RepositoryRead(format!(
                "git {}: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    fn run_text(&self, args: &[&str]) -> Result<String> {
        self.run(args).map(|b| String::from_utf8_lossy(&b).into_owned())
    }

    /// Full commit id for `rev`.
    pub fn resolve(&self, rev: &str) -> Result<ChangesetId> {
        if rev.is_empty() || rev.starts_with('-') {
            return Err(Error::UnknownRevision(rev.to_string()));
        }
        let spec = format!("{rev}^{{commit}}");
        match self.run_text(&["rev-parse", "--verify", "--quiet", &spec]) {
            Ok(s) if !s.trim().is_empty() => Ok(ChangesetId::new(s.trim())),
            _ => Err(Error::UnknownRevision(rev.to_string())),
        }
    }

    /// Every commit reachable from the pinned revision, newest first.
    pub fn list_changesets(&self) -> Result<Vec<Changeset>> {
        let out = self.run(&[
            "log",
            "--date-order",
            "-z",
            "--format=%H%x1f%ct%x1f%an%x1f%B",
            self.pinned.as_str(),
            "--",
        ])?;
        let text = String::from_utf8_lossy(&out);
        let mut changesets = Vec::new();
        for record in text.split('\0').filter(|r| !r.is_empty()) {
            let mut fields = record.splitn(4, '\x1f');
            let (Some(id), Some(ts), Some(author), Some(body)) = (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::RepositoryRead(format!("unexpected log record: {record:?}")));
            };
            changesets.push(Changeset {
                id: ChangesetId::new(id.trim_start_matches('\n')),
                timestamp: ts.parse().map_err(|_| Error::RepositoryRead(format!("bad timestamp {ts:?}")))?,
                author: author.to_string(),
                description: body.trim_end_matches('\n').to_string(),
            });
        }
        Ok(changesets)
    }

    pub fn parents(&self, id: &ChangesetId) -> Result<Vec<ChangesetId>> {
        let out = self.run_text(&["rev-list", "--parents", "-n", "1", id.as_str()])?;
        Ok(out.split_whitespace().skip(1).map(ChangesetId::new).collect())
    }

    /// Proper ancestors of `threshold`.
    pub fn strict_ancestors(&self, threshold: &str) -> Result<BTreeSet<ChangesetId>> {
        let t = self.resolve(threshold)?;
        let out = self.run_text(&["rev-list", t.as_str()])?;
        Ok(out
            .lines()
            .filter(|l| !l.is_empty() && *l != t.as_str())
            .map(ChangesetId::new)
            .collect())
    }

    /// Whether `ancestor` is `descendant` or one of its ancestors.
    pub fn is_ancestor(&self, ancestor: &ChangesetId, descendant: &ChangesetId) -> Result<bool> {
        let status = git_command(&self.root)
            .args(["merge-base", "--is-ancestor", ancestor.as_str(), descendant.as_str()])
            .status()
            .map_err(|e| Error::io("running git", e))?;
        match status.code() {
            Some(0) => Ok(true),
            Some(1) => Ok(false),
            _ => Err(Error::RepositoryRead(format!("merge-base {ancestor} {descendant} failed"))),
        }
    }

    /// Paths of all files in the pinned tree.
    pub fn list_files(&self) -> Result<Vec<String>> {
        let out = self.run(&["ls-tree", "-r", "-z", "--name-only", self.pinned.as_str()])?;
        Ok(String::from_utf8_lossy(&out)
            .split('\0')
            .filter(|p| !p.is_empty())
            .map(String::from)
            .collect())
    }

    pub fn read_file(&self, path: &str) -> Result<String> {
        let spec = format!("{}:{path}", self.pinned);
        let ok = git_command(&self.root)
            .args(["cat-file", "-e", &spec])
            .stderr(Stdio::null())
            .status()
            .map_err(|e| Error::io("running git", e))?
            .success();
        if !ok {
            return Err(self.absent(path));
        }
        Ok(String::from_utf8_lossy(&self.run(&["cat-file", "blob", &spec])?).into_owned())
    }

    /// Contents of many files at the pinned revision through one
    /// `cat-file --batch` process; `None` for paths that are not blobs.
    pub fn read_files(&self, paths: &[String]) -> Result<Vec<Option<String>>> {
        let mut child = git_command(&self.root)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::io("running git cat-file", e))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let requests: String = paths.iter().map(|p| format!("{}:{p}\n", self.pinned)).collect();
        let writer = std::thread::spawn(move || stdin.write_all(requests.as_bytes()));
        let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut out = Vec::with_capacity(paths.len());
        let mut header = String::new();
        for _ in paths {
            header.clear();
            reader.read_line(&mut header).map_err(|e| Error::io("reading cat-file output", e))?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            match parts.as_slice() {
                [_, "blob", size] => {
                    let size: usize = size
                        .parse()
                        .map_err(|_| Error::RepositoryRead(format!("bad cat-file header {header:?}")))?;
                    let mut buf = vec![0u8; size + 1];
                    reader.read_exact(&mut buf).map_err(|e| Error::io("reading cat-file output", e))?;
                    buf.pop();
                    out.push(Some(String::from_utf8_lossy(&buf).into_owned()));
                }
                [_, _, size] => {
                    let size: usize = size.parse().unwrap_or(0);
                    let mut skip = vec![0u8; size + 1];
                    reader.read_exact(&mut skip).map_err(|e| Error::io("reading cat-file output", e))?;
                    out.push(None);
                }
                _ => out.push(None),
            }
        }
        writer
            .join()
            .map_err(|_| Error::RepositoryRead("cat-file writer panicked".into()))?
            .map_err(|e| Error::io("writing to cat-file", e))?;
        child.wait().map_err(|e| Error::io("waiting for git", e))?;
        Ok(out)
    }

    /// Line count of `path` at the pinned revision.
    pub fn line_count(&self, path: &str) -> Result<u32> {
        if let Some(&n) = self.line_counts.lock().expect("line counts").get(path) {
            return Ok(n);
        }
        let n = line_count(&self.read_file(path)?);
        self.line_counts.lock().expect("line counts").insert(path.to_string(), n);
        Ok(n)
    }

    fn absent(&self, path: &str) -> Error {
        Error::FileAbsentAtRevision {
            path: path.to_string(),
            revision: self.pinned.to_string(),
        }
    }

    /// Changeset that last modified each line of `path` at the pinned
    /// revision (default blame settings, so whole-file renames are followed).
    pub fn blame_lines(&self, path: &str) -> Result<Vec<ChangesetId>> {
        if let Some(hit) = self.blame_cache.lock().expect("blame cache").get(path) {
            return Ok(hit.as_ref().clone());
        }
        self.read_file(path)?;
        let out = self.run(&["blame", "--porcelain", self.pinned.as_str(), "--", path])?;
        let blame = Arc::new(parse_blame_porcelain(&String::from_utf8_lossy(&out))?);
        self.blame_cache
            .lock()
            .expect("blame cache")
            .insert(path.to_string(), Arc::clone(&blame));
        Ok(blame.as_ref().clone())
    }

    /// Every commit that modified any line of the 1-based inclusive range,
    /// following the range back through history as `git log -L` does.
    pub fn line_range_history(&self, path: &str, start: u32, end: u32) -> Result<BTreeSet<ChangesetId>> {
        let n = self.line_count(path)?;
        if start == 0 || start > end || end > n {
            return Err(Error::InvalidRange { start, end, line_count: n });
        }
        let range = format!("-L{start},{end}:{path}");
        let out = self.run_text(&["log", &range, "--format=%H", "-s", self.pinned.as_str()])?;
        Ok(out
            .lines()
            .map(str::trim)
            .filter(|l| is_object_id(l))
            .map(ChangesetId::new)
            .collect())
    }

    /// Zero-context diff of `commit` against its first parent (against the
    /// empty tree for a root commit).
    pub fn commit_diff(&self, commit: &ChangesetId) -> Result<Vec<FileDiff>> {
        let out = self.run_text(&[
            "show",
            "--format=",
            "--no-color",
            "--no-ext-diff",
            "-U0",
            "-M",
            "--diff-merges=first-parent",
            "--src-prefix=a/",
            "--dst-prefix=b/",
            commit.as_str(),
        ])?;
        Ok(parse_diff(&out))
    }

    /// Zero-context diff between two commits.
    pub fn diff_between(&self, from: &ChangesetId, to: &ChangesetId) -> Result<Vec<FileDiff>> {
        let out = self.run_text(&[
            "diff",
            "--no-color",
            "--no-ext-diff",
            "-U0",
            "-M",
            "--src-prefix=a/",
            "--dst-prefix=b/",
            from.as_str(),
            to.as_str(),
        ])?;
        Ok(parse_diff(&out))
    }
}

impl History for GitRepository {
    type Error = Error;

    fn blame_lines(&self, path: &str) -> Result<Vec<ChangesetId>> {
        GitRepository::blame_lines(self, path)
    }

    fn line_range_history(&self, path: &str, start: u32, end: u32) -> Result<BTreeSet<ChangesetId>> {
        GitRepository::line_range_history(self, path, start, end)
    }
}

fn git_command(dir: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(dir)
        .args(["-c", "core.quotePath=false", "-c", "log.follow=false", "-c", "diff.external="])
        .env("LC_ALL", "C")
        .env("GIT_PAGER", "cat")
        .env_remove("GIT_DIR")
        .env_remove("GIT_WORK_TREE")
        .stdin(Stdio::null());
    cmd
}

fn is_object_id(s: &str) -> bool {
    (s.len() == 40 || s.len() == 64) && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Per-line commit ids from `git blame --porcelain`.
fn parse_blame_porcelain(text: &str) -> Result<Vec<ChangesetId>> {
    let mut lines: Vec<Option<ChangesetId>> = Vec::new();
    for line in text.lines() {
        if line.starts_with('\t') {
            continue;
        }
        let mut parts = line.split(' ');
        let Some(id) = parts.next().filter(|id| is_object_id(id)) else { continue };
        let (Some(_orig), Some(Ok(final_line))) = (parts.next(), parts.next().map(str::parse::<usize>)) else {
            continue;
        };
        if final_line == 0 {
            return Err(Error::RepositoryRead(format!("bad blame header {line:?}")));
        }
        if lines.len() < final_line {
            lines.resize(final_line, None);
        }
        lines[final_line - 1] = Some(ChangesetId::new(id));
    }
    lines
        .into_iter()
        .enumerate()
        .map(|(i, id)| id.ok_or_else(|| Error::RepositoryRead(format!("blame left line {} unattributed", i + 1))))
        .collect()
}
