//! Scripted Git fixtures with a line-lineage model kept alongside.
//!
//! Every line ever written is unique, and the edits inside one commit are
//! never adjacent, so each edit is its own zero-context hunk and the model
//! can predict blame and `git log -L` results without asking git.

#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const WORDS: &[&str] = &[
    "parser", "cache", "render", "thread", "socket", "buffer", "schema", "token", "widget", "layout", "query", "index",
    "stream", "codec", "session", "config", "logger", "router", "filter", "matrix", "vector", "bundle", "plugin", "module",
];

#[derive(Debug, Clone)]
pub struct Line {
    pub text: String,
    /// Commit indices that wrote this line, oldest first.
    pub lineage: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Method {
    pub name: String,
    pub arity: u32,
    pub header: Line,
    pub body: Vec<Line>,
    pub close: Line,
}

impl Method {
    fn lines(&self) -> impl Iterator<Item = &Line> {
        std::iter::once(&self.header).chain(&self.body).chain(std::iter::once(&self.close))
    }

    fn len(&self) -> usize {
        self.body.len() + 2
    }
}

#[derive(Debug, Clone)]
pub struct JavaFile {
    pub header: Line,
    pub field: Line,
    pub methods: Vec<Method>,
    pub close: Line,
    /// Commits that touched lines since deleted from this file.
    pub graveyard: BTreeSet<usize>,
}

impl JavaFile {
    pub fn lines(&self) -> Vec<&Line> {
        let mut v = vec![&self.header, &self.field];
        for m in &self.methods {
            v.extend(m.lines());
        }
        v.push(&self.close);
        v
    }

    pub fn render(&self) -> String {
        self.lines().iter().map(|l| format!("{}\n", l.text)).collect()
    }

    /// 0-based line index of each method's header.
    fn method_starts(&self) -> Vec<usize> {
        let mut at = 2;
        self.methods
            .iter()
            .map(|m| {
                let s = at;
                at += m.len();
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CommitRecord {
    pub sha: String,
    pub message: String,
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MergeRecord {
    pub commit: usize,
    pub first_side: BTreeSet<usize>,
    pub second_side: BTreeSet<usize>,
}

/// An artifact as the model sees it at head.
#[derive(Debug, Clone)]
pub struct ModelArtifact {
    pub id: String,
    pub path: String,
    pub is_file: bool,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Linear,
    Merge,
    Rename,
}

pub struct Fixture {
    pub dir: TempDir,
    pub shape: Shape,
    pub commits: Vec<CommitRecord>,
    pub files: BTreeMap<String, JavaFile>,
    pub merges: Vec<MergeRecord>,
    pub planted: Option<Planted>,
    rng: ChaCha8Rng,
    counter: u64,
    next_method: u32,
    next_class: u32,
}

/// The planted change request of [`Fixture::with_planted_change_request`].
#[derive(Debug, Clone)]
pub struct Planted {
    pub issue: String,
    pub query: String,
    pub path: String,
    pub method: String,
    pub fix: usize,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Modify { method: usize, line: usize },
    Insert { method: usize, before: usize },
    AddMethod { before: usize },
}

pub fn git(dir: &Path, args: &[&str], date: Option<i64>) -> String {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(dir).args(args).env("LC_ALL", "C");
    for var in ["GIT_DIR", "GIT_WORK_TREE", "GIT_INDEX_FILE"] {
        cmd.env_remove(var);
    }
    if let Some(ts) = date {
        let d = format!("@{ts} +0000");
        cmd.env("GIT_AUTHOR_DATE", &d).env("GIT_COMMITTER_DATE", &d);
    }
    let out = cmd.output().expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

impl Fixture {
    fn empty(shape: Shape, seed: u64) -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        git(dir.path(), &["init", "-q", "-b", "main"], None);
        for (k, v) in [
            ("user.name", "Fixture Author"),
            ("user.email", "fixture@example.com"),
            ("commit.gpgsign", "false"),
            ("merge.ff", "false"),
        ] {
            git(dir.path(), &["config", k, v], None);
        }
        Self {
            dir,
            shape,
            commits: Vec::new(),
            files: BTreeMap::new(),
            merges: Vec::new(),
            planted: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counter: 0,
            next_method: 0,
            next_class: 0,
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn head(&self) -> &str {
        &self.commits.last().expect("commits").sha
    }

    pub fn sha(&self, i: usize) -> &str {
        &self.commits[i].sha
    }

    pub fn index_of(&self, sha: &str) -> usize {
        self.commits.iter().position(|c| c.sha == sha).expect("known commit")
    }

    fn fresh(&mut self) -> u64 {
        self.counter += 1;
        self.counter
    }

    fn body_line(&mut self, c: usize) -> Line {
        let n = self.fresh();
        Line {
            text: format!("        int v{n} = {n};"),
            lineage: vec![c],
        }
    }

    fn new_method(&mut self, c: usize) -> Method {
        self.next_method += 1;
        let name = format!("m{}", self.next_method);
        let arity = self.rng.gen_range(0..3u32);
        let params = ["", "int a", "int a, String b"][arity as usize];
        let body_len = self.rng.gen_range(2..5);
        let body = (0..body_len).map(|_| self.body_line(c)).collect();
        Method {
            header: Line {
                text: format!("    public void {name}({params}) {{"),
                lineage: vec![c],
            },
            close: Line {
                text: format!("    }} // end {name}"),
                lineage: vec![c],
            },
            name,
            arity,
            body,
        }
    }

    fn new_file(&mut self, c: usize) -> (String, JavaFile) {
        self.next_class += 1;
        let k = self.next_class;
        let n = self.fresh();
        let count = self.rng.gen_range(2..4);
        let methods = (0..count).map(|_| self.new_method(c)).collect();
        let path = if k.is_multiple_of(2) { format!("src/pkg/C{k}.java") } else { format!("src/C{k}.java") };
        (
            path,
            JavaFile {
                header: Line {
                    text: format!("public class C{k} {{"),
                    lineage: vec![c],
                },
                field: Line {
                    text: format!("    private int f{n} = {n};"),
                    lineage: vec![c],
                },
                methods,
                close: Line {
                    text: format!("}} // end C{k}"),
                    lineage: vec![c],
                },
                graveyard: BTreeSet::new(),
            },
        )
    }

    fn message(&mut self, prefix: &str) -> String {
        let a = *WORDS.choose(&mut self.rng).unwrap();
        let b = *WORDS.choose(&mut self.rng).unwrap();
        let n = self.commits.len() + 1;
        format!("{prefix} {a} {b} (step {n})")
    }

    fn write_tree(&self) {
        for (path, file) in &self.files {
            let full = self.path().join(path);
            fs::create_dir_all(full.parent().unwrap()).unwrap();
            fs::write(full, file.render()).unwrap();
        }
    }

    fn commit(&mut self, message: &str, parents: Vec<usize>) -> usize {
        self.write_tree();
        let idx = self.commits.len();
        git(self.path(), &["add", "-A"], None);
        let date = 1_700_000_000 + 3600 * idx as i64;
        git(
            self.path(),
            &["commit", "-q", "--allow-empty", "--allow-empty-message", "-m", message],
            Some(date),
        );
        let sha = git(self.path(), &["rev-parse", "HEAD"], None).trim().to_string();
        self.commits.push(CommitRecord {
            sha,
            message: message.to_string(),
            parents,
        });
        idx
    }

    fn head_index(&self) -> Option<usize> {
        self.commits.len().checked_sub(1)
    }

    fn initial(&mut self, files: usize) {
        for _ in 0..files {
            let (p, f) = self.new_file(0);
            self.files.insert(p, f);
        }
        self.commit("Initial import of parser and cache modules", vec![]);
    }

    /// Picks non-adjacent edits in one file, skipping methods in `frozen`.
    fn plan_ops(&mut self, path: &str, frozen: &BTreeSet<String>, allowed: Option<&BTreeSet<String>>, allow_add: bool) -> Vec<Op> {
        let file = &self.files[path];
        let starts = file.method_starts();
        let mut candidates: Vec<(Op, usize)> = Vec::new();
        for (mi, m) in file.methods.iter().enumerate() {
            if frozen.contains(&m.name) || allowed.is_some_and(|a| !a.contains(&m.name)) {
                continue;
            }
            for bi in 0..m.body.len() {
                let p = starts[mi] + 1 + bi;
                candidates.push((Op::Modify { method: mi, line: bi }, 2 * p + 1));
            }
            for bi in 0..=m.body.len() {
                let p = starts[mi] + 1 + bi;
                candidates.push((Op::Insert { method: mi, before: bi }, 2 * p));
            }
        }
        if allow_add {
            for k in 0..=file.methods.len() {
                let p = if k == file.methods.len() { file.lines().len() - 1 } else { starts[k] };
                candidates.push((Op::AddMethod { before: k }, 2 * p));
            }
        }
        candidates.shuffle(&mut self.rng);
        let want = self.rng.gen_range(1..4);
        let mut chosen: Vec<(Op, usize)> = Vec::new();
        for (op, pos) in candidates {
            if chosen.len() == want {
                break;
            }
            if chosen.iter().all(|(_, q)| pos.abs_diff(*q) >= 3) {
                chosen.push((op, pos));
            }
        }
        chosen.sort_by_key(|(_, pos)| std::cmp::Reverse(*pos));
        chosen.into_iter().map(|(op, _)| op).collect()
    }

    fn apply_ops(&mut self, path: &str, ops: &[Op], c: usize) {
        for op in ops {
            match *op {
                Op::Modify { method, line } => {
                    let n = self.fresh();
                    let l = &mut self.files.get_mut(path).unwrap().methods[method].body[line];
                    l.text = format!("        int v{n} = {n};");
                    l.lineage.push(c);
                }
                Op::Insert { method, before } => {
                    let l = self.body_line(c);
                    self.files.get_mut(path).unwrap().methods[method].body.insert(before, l);
                }
                Op::AddMethod { before } => {
                    let m = self.new_method(c);
                    self.files.get_mut(path).unwrap().methods.insert(before, m);
                }
            }
        }
    }

    /// One commit editing one or two files, or occasionally adding a file,
    /// deleting a method, or touching only a non-source file.
    fn random_commit(&mut self, frozen: &BTreeSet<String>) {
        let c = self.commits.len();
        let roll = self.rng.gen_range(0..20);
        let parents: Vec<usize> = self.head_index().into_iter().collect();
        if roll == 0 && self.files.len() < 5 {
            let (p, f) = self.new_file(c);
            self.files.insert(p, f);
            let msg = self.message("Add");
            self.commit(&msg, parents);
            return;
        }
        if roll == 1 {
            let candidates: Vec<(String, usize)> = self
                .files
                .iter()
                .filter(|(_, f)| f.methods.len() >= 3)
                .flat_map(|(p, f)| {
                    (0..f.methods.len() - 1)
                        .filter(|&i| !frozen.contains(&f.methods[i].name))
                        .map(move |i| (p.clone(), i))
                })
                .collect();
            if let Some((p, i)) = candidates.choose(&mut self.rng).cloned() {
                let file = self.files.get_mut(&p).unwrap();
                let gone = file.methods.remove(i);
                for l in gone.lines() {
                    file.graveyard.extend(&l.lineage);
                }
                file.graveyard.insert(c);
                let msg = self.message("Remove unused");
                self.commit(&msg, parents);
                return;
            }
        }
        if roll == 2 {
            let n = self.fresh();
            fs::write(self.path().join("NOTES.txt"), format!("note {n}\n")).unwrap();
            let msg = self.message("Update notes on");
            self.commit(&msg, parents);
            return;
        }
        let paths: Vec<String> = self.files.keys().cloned().collect();
        let touch = if paths.len() > 1 && self.rng.gen_bool(0.3) { 2 } else { 1 };
        let chosen: Vec<String> = paths.choose_multiple(&mut self.rng, touch).cloned().collect();
        for p in &chosen {
            let ops = self.plan_ops(p, frozen, None, true);
            self.apply_ops(p, &ops, c);
        }
        let msg = if self.rng.gen_range(0..12) == 0 { String::new() } else { self.message("Fix") };
        self.commit(&msg, parents);
    }

    /// A side branch and a main-line series touching disjoint methods,
    /// joined by a `--no-ff` merge.
    fn merge_round(&mut self, side_len: usize, main_len: usize) {
        let base = self.head_index().unwrap();
        let base_files = self.files.clone();
        let mut names: Vec<String> = self.files.values().flat_map(|f| f.methods.iter().map(|m| m.name.clone())).collect();
        names.shuffle(&mut self.rng);
        let half = names.len() / 2;
        let side_methods: BTreeSet<String> = names[..half].iter().cloned().collect();
        let main_methods: BTreeSet<String> = names[half..].iter().cloned().collect();

        git(self.path(), &["checkout", "-q", "-b", "topic"], None);
        let mut second = BTreeSet::new();
        let mut parent = base;
        for _ in 0..side_len {
            parent = self.side_commit(&side_methods, parent, "Topic:");
            second.insert(parent);
        }
        let side_files = self.files.clone();
        let side_tip = parent;

        git(self.path(), &["checkout", "-q", "main"], None);
        self.files = base_files;
        let mut first = BTreeSet::new();
        let mut parent = base;
        for _ in 0..main_len {
            parent = self.side_commit(&main_methods, parent, "Main:");
            first.insert(parent);
        }
        for (path, side) in side_files {
            let file = self.files.get_mut(&path).unwrap();
            for (mi, m) in side.methods.into_iter().enumerate() {
                if side_methods.contains(&m.name) {
                    file.methods[mi] = m;
                }
            }
        }
        let idx = self.commits.len();
        let msg = self.message("Merge topic branch for");
        let date = 1_700_000_000 + 3600 * idx as i64;
        git(self.path(), &["merge", "-q", "--no-ff", "-m", &msg, "topic"], Some(date));
        git(self.path(), &["branch", "-q", "-D", "topic"], None);
        let sha = git(self.path(), &["rev-parse", "HEAD"], None).trim().to_string();
        self.commits.push(CommitRecord {
            sha,
            message: msg,
            parents: vec![parent, side_tip],
        });
        for (path, f) in &self.files {
            assert_eq!(fs::read_to_string(self.path().join(path)).unwrap(), f.render(), "merge diverged from the model");
        }
        self.merges.push(MergeRecord {
            commit: idx,
            first_side: first,
            second_side: second,
        });
    }

    fn side_commit(&mut self, methods: &BTreeSet<String>, parent: usize, prefix: &str) -> usize {
        let c = self.commits.len();
        let paths: Vec<String> = self
            .files
            .iter()
            .filter(|(_, f)| f.methods.iter().any(|m| methods.contains(&m.name)))
            .map(|(p, _)| p.clone())
            .collect();
        let p = paths.choose(&mut self.rng).unwrap().clone();
        let ops = self.plan_ops(&p, &BTreeSet::new(), Some(methods), false);
        self.apply_ops(&p, &ops, c);
        let msg = self.message(prefix);
        self.commit(&msg, vec![parent])
    }

    fn rename(&mut self) {
        let from = self.files.keys().next().unwrap().clone();
        let to = from.replace(".java", "Renamed.java");
        let file = self.files.remove(&from).unwrap();
        git(self.path(), &["mv", &from, &to], None);
        self.files.insert(to, file);
        let parents = self.head_index().into_iter().collect();
        self.commit("Rename module for clarity", parents);
    }

    pub fn generate(shape: Shape, seed: u64) -> Self {
        let mut fx = Self::empty(shape, seed);
        fx.initial(2);
        let none = BTreeSet::new();
        match shape {
            Shape::Linear => {
                for _ in 0..20 {
                    fx.random_commit(&none);
                }
            }
            Shape::Merge => {
                for _ in 0..4 {
                    fx.random_commit(&none);
                }
                fx.merge_round(3, 2);
                for _ in 0..3 {
                    fx.random_commit(&none);
                }
                fx.merge_round(2, 3);
                for _ in 0..3 {
                    fx.random_commit(&none);
                }
            }
            Shape::Rename => {
                for _ in 0..6 {
                    fx.random_commit(&none);
                }
                fx.rename();
                for _ in 0..7 {
                    fx.random_commit(&none);
                }
                fx.rename();
                for _ in 0..3 {
                    fx.random_commit(&none);
                }
            }
        }
        assert!(fx.commits.len() <= 30);
        fx
    }

    /// Linear history with one method whose history alone carries the words
    /// of a later bug report, followed by the fix and unrelated work.
    pub fn with_planted_change_request(seed: u64) -> Self {
        let mut fx = Self::empty(Shape::Linear, seed);
        fx.initial(3);
        let none = BTreeSet::new();
        for _ in 0..6 {
            fx.random_commit(&none);
        }
        let (path, mi) = {
            let (p, f) = fx.files.iter().next().unwrap();
            (p.clone(), f.methods.len() / 2)
        };
        let name = fx.files[&path].methods[mi].name.clone();
        let frozen: BTreeSet<String> = [name.clone()].into_iter().collect();

        let c = fx.commits.len();
        fx.apply_ops(&path, &[Op::Modify { method: mi, line: 0 }], c);
        fx.commit("Tune quasar nebula pulsar handling", vec![c - 1]);
        for _ in 0..4 {
            fx.random_commit(&frozen);
        }
        let mi = fx.files[&path].methods.iter().position(|m| m.name == name).unwrap();
        let last = fx.files[&path].methods[mi].body.len() - 1;
        let c = fx.commits.len();
        fx.apply_ops(&path, &[Op::Modify { method: mi, line: last }], c);
        let fix = fx.commit("Fix bug 4242: quasar nebula pulsar overflow", vec![c - 1]);
        for _ in 0..3 {
            fx.random_commit(&frozen);
        }
        fx.planted = Some(Planted {
            issue: "4242".into(),
            query: "quasar nebula pulsar".into(),
            path,
            method: name,
            fix,
        });
        fx
    }

    /// Artifacts at head according to the model, in partition order.
    pub fn model_artifacts(&self, method_level: bool) -> Vec<ModelArtifact> {
        let mut out = Vec::new();
        for (path, f) in &self.files {
            if !method_level {
                out.push(ModelArtifact {
                    id: path.clone(),
                    path: path.clone(),
                    is_file: true,
                    start: 1,
                    end: f.lines().len() as u32,
                });
                continue;
            }
            for (m, s) in f.methods.iter().zip(f.method_starts()) {
                let start = s as u32 + 1;
                out.push(ModelArtifact {
                    id: format!("{path}::{}/{}@{start}", m.name, m.arity),
                    path: path.clone(),
                    is_file: false,
                    start,
                    end: start + m.len() as u32 - 1,
                });
            }
        }
        out
    }

    fn lines_of(&self, a: &ModelArtifact) -> Vec<&Line> {
        let lines = self.files[&a.path].lines();
        lines[a.start as usize - 1..a.end as usize].to_vec()
    }

    /// Last writer of every line of the artifact.
    pub fn oracle_recent(&self, a: &ModelArtifact) -> BTreeSet<usize> {
        self.lines_of(a).iter().map(|l| *l.lineage.last().unwrap()).collect()
    }

    /// Every writer of every line, deletions inside a whole file, and merges
    /// that joined changes from both sides inside the range.
    pub fn oracle_all(&self, a: &ModelArtifact) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = self.lines_of(a).iter().flat_map(|l| l.lineage.iter().copied()).collect();
        if a.is_file {
            set.extend(&self.files[&a.path].graveyard);
        }
        for m in &self.merges {
            if !set.is_disjoint(&m.first_side) && !set.is_disjoint(&m.second_side) {
                set.insert(m.commit);
            }
        }
        set
    }

    /// Proper ancestors of commit `i` from the recorded parent links.
    pub fn proper_ancestors(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = self.commits[i].parents.clone();
        while let Some(p) = stack.pop() {
            if seen.insert(p) {
                stack.extend(&self.commits[p].parents);
            }
        }
        seen
    }

    pub fn shas(&self, ids: &BTreeSet<usize>) -> BTreeSet<String> {
        ids.iter().map(|&i| self.commits[i].sha.clone()).collect()
    }

    /// Mean distinct changesets over admitted artifacts, computed from the
    /// model: an artifact is admitted when its set is non-empty and at least
    /// one of its messages is not blank.
    pub fn oracle_average(&self, method_level: bool, all: bool, threshold: Option<usize>) -> Option<(usize, f64)> {
        let allowed = threshold.map(|t| self.proper_ancestors(t));
        let mut sizes = Vec::new();
        for a in self.model_artifacts(method_level) {
            let mut set = if all { self.oracle_all(&a) } else { self.oracle_recent(&a) };
            if let Some(allowed) = &allowed {
                set.retain(|c| allowed.contains(c));
            }
            if set.iter().any(|&c| !self.commits[c].message.trim().is_empty()) {
                sizes.push(set.len());
            }
        }
        if sizes.is_empty() {
            return None;
        }
        let avg = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        Some((sizes.len(), (avg * 100.0).round() / 100.0))
    }
}

/// Runs the built `acir` binary; returns (exit code, stdout, stderr).
pub fn acir(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_acir"));
    cmd.args(args).env_remove("ACIR_STOPWORDS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("acir runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}
