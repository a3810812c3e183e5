//! Directory snapshots and name-status change sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::workspace::Layout;

/// Names never scanned, at any depth.
const SKIPPED: [&str; 2] = [".vp", ".git"];
pub const IGNORE_FILE: &str = ".vpignore";

/// File contents of a directory keyed by asset path (`Repo/dir/file`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub repos: BTreeSet<String>,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Snapshot {
    pub fn digests(&self) -> BTreeMap<String, String> {
        self.files.iter().map(|(p, b)| (p.clone(), digest(b))).collect()
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        self.files.get(path).and_then(|b| std::str::from_utf8(b).ok())
    }

    /// Whether any file lives below the directory `dir`.
    pub fn has_files_below(&self, dir: &str) -> bool {
        let prefix = format!("{dir}/");
        self.files.range(prefix.clone()..).next().is_some_and(|(p, _)| p.starts_with(&prefix))
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Decides how a directory maps onto repositories: if some top-level
/// directory looks like a repository (has `.git` or a `.vp-project`), every
/// top-level directory is one; otherwise the directory itself is.
pub fn detect_layout(root: &Path) -> Result<Layout> {
    for entry in sorted_entries(root)? {
        let path = root.join(&entry);
        if SKIPPED.contains(&entry.as_str()) || !path.is_dir() {
            continue;
        }
        if path.join(".git").exists() {
            return Ok(Layout::Multi);
        }
        for inner in sorted_entries(&path)? {
            if inner.ends_with(crate::parse::mapping::FEATURE_MODEL_EXT) {
                return Ok(Layout::Multi);
            }
        }
    }
    let name = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .filter(|n| crate::model::is_valid_asset_name(n))
        .unwrap_or_else(|| "repo".to_string());
    Ok(Layout::Single(name))
}

fn sorted_entries(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        names.push(entry.file_name().to_string_lossy().into_owned());
    }
    names.sort();
    Ok(names)
}

fn ignore_patterns(root: &Path) -> Result<Vec<glob::Pattern>> {
    let path = root.join(IGNORE_FILE);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(Vec::new());
    };
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            glob::Pattern::new(l.trim_end_matches('/')).map_err(|e| Error::Malformed {
                line: 0,
                reason: format!("{IGNORE_FILE}: bad pattern `{l}`: {e}"),
            })
        })
        .collect()
}

/// Reads every tracked file below `root`.
pub fn read_snapshot(root: &Path, layout: &Layout) -> Result<Snapshot> {
    let ignore = ignore_patterns(root)?;
    let mut snap = Snapshot::default();
    match layout {
        Layout::Single(name) => {
            snap.repos.insert(name.clone());
            walk(root, "", name, &ignore, &mut snap)?;
        }
        Layout::Multi => {
            for entry in sorted_entries(root)? {
                let path = root.join(&entry);
                if SKIPPED.contains(&entry.as_str())
                    || is_ignored(&ignore, &entry)
                    || !path.is_dir()
                    || path.symlink_metadata().map(|m| m.is_symlink()).unwrap_or(true)
                    || !crate::model::is_valid_asset_name(&entry)
                {
                    continue;
                }
                snap.repos.insert(entry.clone());
                walk(&path, &entry, &entry, &ignore, &mut snap)?;
            }
        }
    }
    Ok(snap)
}

fn is_ignored(patterns: &[glob::Pattern], rel: &str) -> bool {
    let name = rel.rsplit('/').next().unwrap_or(rel);
    patterns.iter().any(|p| p.matches(rel) || p.matches(name))
}

fn walk(dir: &Path, rel: &str, prefix: &str, ignore: &[glob::Pattern], snap: &mut Snapshot) -> Result<()> {
    for entry in sorted_entries(dir)? {
        if SKIPPED.contains(&entry.as_str()) || (rel.is_empty() && entry == IGNORE_FILE) {
            continue;
        }
        let rel_path = if rel.is_empty() { entry.clone() } else { format!("{rel}/{entry}") };
        if is_ignored(ignore, &rel_path) || !crate::model::is_valid_asset_name(&entry) {
            continue;
        }
        let path = dir.join(&entry);
        let meta = path.symlink_metadata().map_err(|e| Error::io(&path, e))?;
        let key = format!("{prefix}/{entry}");
        if meta.is_dir() {
            walk(&path, &rel_path, &key, ignore, snap)?;
        } else if meta.is_file() {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            snap.files.insert(key, bytes);
        }
    }
    Ok(())
}

/// One line of a name-status listing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Change {
    Added(String),
    Modified(String),
    Deleted(String),
    Renamed(String, String),
}

impl Change {
    pub fn path(&self) -> &str {
        match self {
            Change::Added(p) | Change::Modified(p) | Change::Deleted(p) | Change::Renamed(p, _) => p,
        }
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Added(p) => write!(f, "A\t{p}"),
            Change::Modified(p) => write!(f, "M\t{p}"),
            Change::Deleted(p) => write!(f, "D\t{p}"),
            Change::Renamed(a, b) => write!(f, "R\t{a}\t{b}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub entries: Vec<Change>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_name_status(&self) -> String {
        self.entries.iter().map(|c| format!("{c}\n")).collect()
    }

    /// Parses `git diff --name-status` style text: `A|M|D<TAB>path` and
    /// `R[score]<TAB>old<TAB>new`.
    pub fn parse_name_status(text: &str) -> Result<ChangeSet> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: &str| Error::Malformed {
                line: i + 1,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let path_ok = |p: &str| !p.is_empty() && p.split('/').all(crate::model::is_valid_asset_name);
            let entry = match cols.as_slice() {
                ["A", p] if path_ok(p) => Change::Added(p.to_string()),
                ["M", p] if path_ok(p) => Change::Modified(p.to_string()),
                ["D", p] if path_ok(p) => Change::Deleted(p.to_string()),
                [r, a, b]
                    if r.starts_with('R')
                        && r[1..].chars().all(|c| c.is_ascii_digit())
                        && path_ok(a)
                        && path_ok(b) =>
                {
                    Change::Renamed(a.to_string(), b.to_string())
                }
                _ => return Err(malformed("expected `A|M|D<TAB>path` or `R<TAB>old<TAB>new`")),
            };
            entries.push(entry);
        }
        Ok(ChangeSet { entries })
    }
}

/// Compares recorded file digests against a new snapshot. A deletion and an
/// addition with identical content form a rename when neither has another
/// candidate.
pub fn diff_snapshots(old: &BTreeMap<String, String>, new: &Snapshot) -> ChangeSet {
    let new_digests = new.digests();
    let mut entries = Vec::new();
    let mut added: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut deleted: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (path, d) in &new_digests {
        match old.get(path) {
            None => added.entry(d).or_default().push(path),
            Some(o) if o != d => entries.push(Change::Modified(path.clone())),
            Some(_) => {}
        }
    }
    for (path, d) in old {
        if !new_digests.contains_key(path) {
            deleted.entry(d).or_default().push(path);
        }
    }
    for (d, paths) in &added {
        match (paths.as_slice(), deleted.get(d).map(Vec::as_slice)) {
            ([a], Some([o])) => entries.push(Change::Renamed(o.to_string(), a.to_string())),
            _ => entries.extend(paths.iter().map(|p| Change::Added(p.to_string()))),
        }
    }
    for (d, paths) in &deleted {
        let renamed = matches!((paths.as_slice(), added.get(d).map(Vec::as_slice)), ([_], Some([_])));
        if !renamed {
            entries.extend(paths.iter().map(|p| Change::Deleted(p.to_string())));
        }
    }
    entries.sort_by(|a, b| a.path().cmp(b.path()).then(a.cmp(b)));
    ChangeSet { entries }
}
