//! Replaying a history of directory snapshots, with a clone log telling
//! which features were cloned between repositories and when.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{is_valid_asset_name, AssetId, AssetKind};
use crate::sync::{detect_layout, diff_snapshots, read_snapshot, SyncReport};
use crate::workspace::Workspace;

pub const HISTORY_FILE: &str = "history.tsv";
pub const CLONE_LOG_FILE: &str = "clones.tsv";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryStep {
    pub index: u64,
    /// Directory as written in the manifest; resolved against its location.
    pub dir: String,
}

/// "Feature X was cloned from repository S to T" — the refs say at which
/// history points (step index or snapshot directory) this happened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloneLogEntry {
    pub feature: String,
    pub source_repo: String,
    pub target_repo: String,
    pub source_ref: String,
    pub target_ref: String,
}

impl CloneLogEntry {
    pub fn is_due(&self, step: &HistoryStep) -> bool {
        self.target_ref == step.index.to_string() || self.target_ref == step.dir
    }
}

impl fmt::Display for CloneLogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}->{} @{}", self.feature, self.source_repo, self.target_repo, self.target_ref)
    }
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

/// Parses `index<TAB>snapshotDir` rows; indices must strictly increase.
pub fn parse_history(text: &str) -> Result<Vec<HistoryStep>> {
    let mut steps: Vec<HistoryStep> = Vec::new();
    for (line, cols) in rows(text) {
        let malformed = |reason: &str| Error::Malformed { line, reason: reason.into() };
        let [index, dir] = cols.as_slice() else {
            return Err(malformed("expected `index<TAB>snapshotDir`"));
        };
        let index: u64 = index.parse().map_err(|_| malformed("index is not a number"))?;
        if dir.is_empty() {
            return Err(malformed("empty snapshot directory"));
        }
        if steps.last().is_some_and(|s| s.index >= index) {
            return Err(malformed("indices must strictly increase"));
        }
        steps.push(HistoryStep { index, dir: dir.to_string() });
    }
    if steps.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(steps)
}

/// Parses `feature<TAB>sourceRepo<TAB>targetRepo<TAB>sourceRef<TAB>targetRef`.
pub fn parse_clone_log(text: &str) -> Result<Vec<CloneLogEntry>> {
    let mut out = Vec::new();
    for (line, cols) in rows(text) {
        let malformed = |reason: &str| Error::Malformed { line, reason: reason.into() };
        let [feature, source, target, sref, tref] = cols.as_slice() else {
            return Err(malformed("expected five tab-separated columns"));
        };
        if feature.is_empty() || sref.is_empty() || tref.is_empty() {
            return Err(malformed("empty column"));
        }
        if !is_valid_asset_name(source) || !is_valid_asset_name(target) {
            return Err(malformed("bad repository name"));
        }
        out.push(CloneLogEntry {
            feature: feature.to_string(),
            source_repo: source.to_string(),
            target_repo: target.to_string(),
            source_ref: sref.to_string(),
            target_ref: tref.to_string(),
        });
    }
    Ok(out)
}

/// A history manifest plus the clone log found next to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    pub base: PathBuf,
    pub steps: Vec<HistoryStep>,
    pub clones: Vec<CloneLogEntry>,
}

impl History {
    /// Reads `manifest` (a `history.tsv`) and, if present, `clones.tsv` in
    /// the same directory.
    pub fn load(manifest: &Path) -> Result<History> {
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let steps = parse_history(&text)?;
        let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
        let clone_path = base.join(CLONE_LOG_FILE);
        let clones = if clone_path.exists() {
            let text = fs::read_to_string(&clone_path).map_err(|e| Error::io(&clone_path, e))?;
            parse_clone_log(&text)?
        } else {
            Vec::new()
        };
        Ok(History { base, steps, clones })
    }

    /// Replays every step into a fresh workspace. The first snapshot fixes
    /// the repository layout. Errors name the failing step.
    pub fn replay(&self, apply_propagations: bool) -> Result<(Workspace, Vec<SyncReport>)> {
        let mut ws = Workspace::new();
        let mut reports = Vec::new();
        for (n, step) in self.steps.iter().enumerate() {
            let wrap = |e: Error| Error::ReplayStep { index: step.index, source: Box::new(e) };
            let dir = self.base.join(&step.dir);
            if n == 0 {
                ws.set_layout(detect_layout(&dir).map_err(wrap)?);
            }
            ws.set_step(step.index);
            let snapshot = read_snapshot(&dir, ws.layout()).map_err(wrap)?;
            let changes = diff_snapshots(ws.files(), &snapshot);
            let due: Vec<CloneLogEntry> = self.clones.iter().filter(|c| c.is_due(step)).cloned().collect();
            let report = ws
                .apply_change_set(&changes, &snapshot, &due, apply_propagations)
                .map_err(wrap)?;
            reports.push(report);
        }
        Ok((ws, reports))
    }
}

impl Workspace {
    /// The repository an asset lives in.
    pub fn repository_of(&self, id: AssetId) -> Option<AssetId> {
        let mut cur = Some(id);
        while let Some(c) = cur {
            let a = self.asset(c)?;
            if a.kind == AssetKind::Repository {
                return Some(c);
            }
            cur = a.parent;
        }
        None
    }

    /// `(source, clone)` asset pairs where the clone is mapped to a feature
    /// cloned from the source's repository, the clone's trace leads to an
    /// asset of that repository, and the source changed after the latest
    /// trace between the two.
    pub fn detect_propagations(&self) -> Vec<(AssetId, AssetId)> {
        let mut out = BTreeSet::new();
        let traces = self.traces();
        for t in traces.asset_traces() {
            let (source, clone) = (t.source, t.clone);
            let (Some(s), Some(c)) = (self.asset(source), self.asset(clone)) else { continue };
            let Some(repo) = self.repository_of(source) else { continue };
            if self.repository_of(clone) == Some(repo) {
                continue;
            }
            let Some(latest) = traces.latest_asset_trace(source, clone) else { continue };
            if latest.source != source || s.version <= latest.version_at {
                continue;
            }
            let feature_from_repo = self.mapped_features(clone).into_iter().any(|f| {
                traces.feature_traces().iter().any(|ft| {
                    ft.clone == f
                        && self
                            .feature_owner(ft.source)
                            .is_some_and(|owner| self.repository_of(owner) == Some(repo))
                })
            });
            if feature_from_repo && !c.pc.features().is_empty() {
                out.insert((source, clone));
            }
        }
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_rows() {
        let steps = parse_history("# comment\n0\tv0\n3\tv1\n").unwrap();
        assert_eq!(steps[1], HistoryStep { index: 3, dir: "v1".into() });
        assert_eq!(parse_history("1\ta\n1\tb").unwrap_err().name(), "Malformed");
        assert_eq!(parse_history("x\ta").unwrap_err().name(), "Malformed");
        assert_eq!(parse_history("").unwrap_err().name(), "EmptyDocument");
    }

    #[test]
    fn clone_log_rows() {
        let log = parse_clone_log("DIV\tBC\tSC\t0\t1\n").unwrap();
        assert_eq!(log[0].target_repo, "SC");
        assert!(log[0].is_due(&HistoryStep { index: 1, dir: "v1".into() }));
        assert!(!log[0].is_due(&HistoryStep { index: 0, dir: "1x".into() }));
        assert_eq!(parse_clone_log("DIV\tBC\tSC\t0").unwrap_err().name(), "Malformed");
        assert_eq!(parse_clone_log("DIV\tB/C\tSC\t0\t1").unwrap_err().name(), "Malformed");
    }
}
