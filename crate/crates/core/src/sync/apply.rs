//! Turning a change set into operator invocations.
//!
//! Entries are processed in five passes: feature-model files, asset files,
//! mapping files, clone-log directives, and finally propagation detection.
//! Every mutation goes through a public operator, so the log records exactly
//! what the reconciliation did.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AssetId, AssetKind, FeatureId, FeatureModel, NewAsset};
use crate::oplog::OperatorApplication;
use crate::parse::mapping::{meta_file_kind, MetaFile};
use crate::parse::{build_file_structure, parse_feature_model, parse_files_mapping, parse_folder_mapping};
use crate::replay::CloneLogEntry;
use crate::workspace::{Workspace, ROOT_ID};

use super::changes::{detect_layout, diff_snapshots, read_snapshot, Change, ChangeSet, Snapshot};

/// What one reconciliation did.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SyncReport {
    /// Operator applications in execution order.
    pub applied: Vec<OperatorApplication>,
    /// `(source, clone)` pairs whose source moved ahead of the clone, as
    /// found after the change set was applied.
    pub propagations: Vec<(AssetId, AssetId)>,
    pub warnings: Vec<String>,
}

fn split_path(path: &str) -> (&str, &str) {
    path.rsplit_once('/').unwrap_or(("", path))
}

/// Features named by a block (`INT,FLOAT#2` → `INT`, `FLOAT`).
fn block_features(name: &str) -> Vec<&str> {
    let label = name.rsplit_once('#').map_or(name, |(l, _)| l);
    label.split(',').filter(|s| !s.is_empty()).collect()
}

/// Creates a fresh workspace for the directory at `root` and reconciles its
/// current contents as step 0.
pub fn scan(root: &Path) -> Result<(Workspace, SyncReport)> {
    let layout = detect_layout(root)?;
    let snapshot = read_snapshot(root, &layout)?;
    let mut ws = Workspace::new();
    ws.set_layout(layout);
    let cs = diff_snapshots(&BTreeMap::new(), &snapshot);
    let report = ws.apply_change_set(&cs, &snapshot, &[], false)?;
    Ok((ws, report))
}

impl Workspace {
    /// Applies `changes` (paths relative to the platform root, as produced by
    /// [`diff_snapshots`]) and afterwards records `snapshot` as the tracked
    /// file state. `clones` are the clone-log entries due in this step. With
    /// `apply_propagations`, detected propagation candidates are resolved
    /// through `propagate_asset`.
    ///
    /// All-or-nothing: on error the workspace is left as it was.
    pub fn apply_change_set(
        &mut self,
        changes: &ChangeSet,
        snapshot: &Snapshot,
        clones: &[CloneLogEntry],
        apply_propagations: bool,
    ) -> Result<SyncReport> {
        let backup = self.clone();
        let was_derived = self.set_derived(true);
        let start = self.log.len();
        let result = Reconcile { ws: self, snapshot, warnings: Vec::new() }.run(changes, clones, apply_propagations);
        self.set_derived(was_derived);
        match result {
            Ok((propagations, warnings)) => {
                self.files = snapshot.digests();
                Ok(SyncReport { applied: self.log[start..].to_vec(), propagations, warnings })
            }
            Err(e) => {
                *self = backup;
                Err(e)
            }
        }
    }
}

struct Reconcile<'a> {
    ws: &'a mut Workspace,
    snapshot: &'a Snapshot,
    warnings: Vec<String>,
}

type Outcome = (Vec<(AssetId, AssetId)>, Vec<String>);

impl Reconcile<'_> {
    fn run(mut self, changes: &ChangeSet, clones: &[CloneLogEntry], apply: bool) -> Result<Outcome> {
        let mut models = Vec::new();
        let mut mappings = Vec::new();
        let mut files = Vec::new();
        for change in &changes.entries {
            let meta = |p: &str| meta_file_kind(split_path(p).1);
            match change {
                Change::Renamed(old, new) if meta(old).is_some() || meta(new).is_some() => {
                    for c in [Change::Deleted(old.clone()), Change::Added(new.clone())] {
                        match meta(c.path()) {
                            Some(kind) => sort_meta(kind, c, &mut models, &mut mappings),
                            None => files.push(c),
                        }
                    }
                }
                c => match meta(c.path()) {
                    Some(kind) => sort_meta(kind, c.clone(), &mut models, &mut mappings),
                    None => files.push(c.clone()),
                },
            }
        }

        for repo in &self.snapshot.repos {
            self.ensure_dir(repo)?;
        }
        for c in &models {
            self.model_file(c)?;
        }

        let rank = |c: &Change| match c {
            Change::Renamed(..) => 0,
            Change::Deleted(_) => 1,
            Change::Added(_) => 2,
            Change::Modified(_) => 3,
        };
        files.sort_by_key(|c| rank(c));
        let mut deleted_dirs = BTreeSet::new();
        for c in &files {
            match c {
                Change::Renamed(old, new) => self.rename_file(old, new)?,
                Change::Deleted(p) => {
                    if let Ok(id) = self.ws.resolve_str(p) {
                        self.ws.remove_asset(id)?;
                    }
                    deleted_dirs.insert(split_path(p).0.to_string());
                }
                Change::Added(p) | Change::Modified(p) => self.upsert_file(p)?,
            }
        }
        for c in &models {
            if let Change::Deleted(p) = c {
                deleted_dirs.insert(split_path(p).0.to_string());
            }
        }
        self.prune(deleted_dirs)?;

        for c in &mappings {
            self.mapping_file(c)?;
        }

        for entry in clones {
            self.clone_entry(entry)?;
        }

        let mut propagations = self.ws.detect_propagations();
        if apply {
            for (source, target) in &propagations {
                self.ws.propagate_asset(*source, *target)?;
            }
            propagations = self.ws.detect_propagations();
        }
        Ok((propagations, self.warnings))
    }

    /// Makes the directory `path` exist as a Repository (top level) or Folder.
    fn ensure_dir(&mut self, path: &str) -> Result<AssetId> {
        let mut current = ROOT_ID;
        for segment in path.split('/').filter(|s| !s.is_empty()) {
            current = match self.ws.child_named(current, segment) {
                Some(id) => id,
                None => {
                    let kind = if current == ROOT_ID { AssetKind::Repository } else { AssetKind::Folder };
                    self.ws.add_asset(NewAsset::new(segment, kind), current)?
                }
            };
        }
        Ok(current)
    }

    fn model_file(&mut self, change: &Change) -> Result<()> {
        let path = match change {
            Change::Added(p) | Change::Modified(p) => p,
            // A vanished model file leaves the model in place; there is no
            // operator that removes a whole feature model.
            _ => return Ok(()),
        };
        let text = self.snapshot.text(path).ok_or_else(|| Error::Malformed {
            line: 0,
            reason: format!("{path} is not UTF-8"),
        })?;
        let parsed = parse_feature_model(text)?;
        let owner = self.ensure_dir(split_path(path).0)?;
        if self.ws.feature_model(owner).is_none() {
            return self.ws.add_feature_model_to_asset(owner, parsed);
        }
        self.merge_model(owner, &parsed)
    }

    /// Brings the model owned by `owner` in line with `wanted`, feature by
    /// feature and by name.
    fn merge_model(&mut self, owner: AssetId, wanted: &FeatureModel) -> Result<()> {
        let fm = |ws: &Workspace| ws.feature_model(owner).cloned().expect("owner keeps its model");
        let current = fm(self.ws);
        let wanted_root = &wanted.feature(wanted.root()).name;
        if current.feature(current.root()).name != *wanted_root {
            self.ws.rename_feature(current.root(), wanted_root)?;
        }

        for id in wanted.descendants(wanted.root()).into_iter().skip(1) {
            let f = wanted.feature(id);
            if id == wanted.unassigned() {
                continue;
            }
            let current = fm(self.ws);
            let parent = f.parent.expect("non-root feature");
            let parent_id = if parent == wanted.root() {
                current.root()
            } else if parent == wanted.unassigned() {
                current.unassigned()
            } else {
                current.find(&wanted.feature(parent).name).expect("parents come first in pre-order")
            };
            let existing = match current.find(&f.name) {
                Some(e) => {
                    if current.feature(e).parent != Some(parent_id) {
                        self.ws.move_feature(e, parent_id)?;
                    }
                    e
                }
                None => self.ws.add_feature(&f.name, parent_id)?,
            };
            if f.optional {
                self.ws.make_feature_optional(existing)?;
            }
        }

        let wanted_names: BTreeSet<&str> = wanted.features().map(|f| f.name.as_str()).collect();
        let current = fm(self.ws);
        let mut doomed: Vec<FeatureId> = Vec::new();
        for id in current.descendants(current.root()) {
            if id == current.root() || current.is_within_unassigned(id) {
                continue;
            }
            let f = current.feature(id);
            let covered = doomed.iter().any(|d| current.is_within(id, *d));
            if !wanted_names.contains(f.name.as_str()) && !covered {
                doomed.push(id);
            }
        }
        for id in doomed {
            if self.ws.feature(id).is_some() {
                self.ws.remove_feature(id)?;
            }
        }
        Ok(())
    }

    fn rename_file(&mut self, old: &str, new: &str) -> Result<()> {
        let Ok(id) = self.ws.resolve_str(old) else {
            return self.upsert_file(new);
        };
        let (old_dir, _) = split_path(old);
        let (new_dir, new_name) = split_path(new);
        if old_dir == new_dir {
            self.ws.change_asset(id, None, Some(new_name.to_string()))
        } else {
            let parent = self.ensure_dir(new_dir)?;
            let moved = self.ws.move_asset(id, parent)?;
            if self.ws.get(moved)?.name != new_name {
                self.ws.change_asset(moved, None, Some(new_name.to_string()))?;
            }
            Ok(())
        }
    }

    fn upsert_file(&mut self, path: &str) -> Result<()> {
        let (dir, name) = split_path(path);
        let text = self.snapshot.text(path).map(str::to_string);
        if let Ok(id) = self.ws.resolve_str(path) {
            self.ws.change_asset(id, text.clone(), None)?;
            if let Some(text) = text {
                if let Some(structure) = self.structure(path, name, &text, id) {
                    self.reconcile_blocks(id, &structure.children)?;
                }
            }
            return Ok(());
        }
        let parent = self.ensure_dir(dir)?;
        let mut file = NewAsset::new(name, AssetKind::File);
        let Some(text) = text else {
            self.ws.add_asset(file, parent)?;
            return Ok(());
        };
        file = file.with_content(text.as_str());
        let structure = self.structure(path, name, &text, parent);
        let id = self.ws.add_asset(file, parent)?;
        if let Some(structure) = structure {
            self.reconcile_blocks(id, &structure.children)?;
        }
        Ok(())
    }

    /// Parses the annotations of a file; problems become warnings and leave
    /// the file without block structure.
    fn structure(&mut self, path: &str, name: &str, text: &str, anchor: AssetId) -> Option<NewAsset> {
        let structure = match build_file_structure(name, text) {
            Ok(s) => s,
            Err(e) => {
                self.warnings.push(format!("{path}: {}: {e}", e.name()));
                return None;
            }
        };
        if !structure.children.is_empty() && self.ws.scope_owner(anchor).is_none() {
            self.warnings
                .push(format!("{path}: annotations ignored, no feature model in scope"));
            return None;
        }
        Some(structure)
    }

    /// Matches the block children of `parent` against `blocks` by name:
    /// new blocks are added and mapped, changed ones updated, vanished ones
    /// removed (after additions, so shared features keep a mapping).
    fn reconcile_blocks(&mut self, parent: AssetId, blocks: &[NewAsset]) -> Result<()> {
        for block in blocks {
            let id = match self.ws.child_named(parent, &block.name) {
                Some(id) if self.ws.get(id)?.kind == AssetKind::Block => {
                    if self.ws.get(id)?.content != block.content {
                        self.ws.change_asset(id, block.content.clone(), None)?;
                    }
                    id
                }
                Some(id) => {
                    self.ws.remove_asset(id)?;
                    self.add_block(parent, block)?
                }
                None => self.add_block(parent, block)?,
            };
            let mapped = self.ws.get(id)?.pc.features();
            for feature in block_features(&block.name) {
                if !mapped.iter().any(|m| m == feature) {
                    self.ws.map_asset_to_feature(id, feature)?;
                }
            }
            self.reconcile_blocks(id, &block.children)?;
        }
        let wanted: BTreeSet<&str> = blocks.iter().map(|b| b.name.as_str()).collect();
        let stale: Vec<AssetId> = self.ws.get(parent)?.children.to_vec();
        for child in stale {
            let asset = self.ws.get(child)?;
            if asset.kind == AssetKind::Block && !wanted.contains(asset.name.as_str()) {
                self.ws.remove_asset(child)?;
            }
        }
        Ok(())
    }

    fn add_block(&mut self, parent: AssetId, block: &NewAsset) -> Result<AssetId> {
        let mut bare = NewAsset::new(block.name.clone(), AssetKind::Block);
        bare.content = block.content.clone();
        self.ws.add_asset(bare, parent)
    }

    /// Removes folders left without files by deletions, and repositories
    /// that disappeared altogether.
    fn prune(&mut self, dirs: BTreeSet<String>) -> Result<()> {
        for dir in dirs.iter().rev() {
            let mut dir = dir.as_str();
            while !dir.is_empty() {
                let Ok(id) = self.ws.resolve_str(dir) else { break };
                let asset = self.ws.get(id)?;
                let empty = asset.children.is_empty() && !self.snapshot.has_files_below(dir);
                if asset.kind != AssetKind::Folder || !empty || self.ws.feature_model(id).is_some() {
                    break;
                }
                self.ws.remove_asset(id)?;
                dir = split_path(dir).0;
            }
        }
        let gone: Vec<AssetId> = self
            .ws
            .get(ROOT_ID)?
            .children
            .iter()
            .copied()
            .filter(|c| !self.snapshot.repos.contains(&self.ws.assets[c].name))
            .collect();
        for repo in gone {
            self.ws.remove_asset(repo)?;
        }
        Ok(())
    }

    fn mapping_file(&mut self, change: &Change) -> Result<()> {
        let path = match change {
            Change::Added(p) | Change::Modified(p) => p,
            // Dropping a mapping file does not unmap: no operator removes a
            // single mapping.
            _ => return Ok(()),
        };
        let (dir, name) = split_path(path);
        let text = self.snapshot.text(path).unwrap_or("");
        let rows = match meta_file_kind(name) {
            Some(MetaFile::FolderMapping) => parse_folder_mapping(text).map(|f| vec![(String::new(), f)]),
            _ => parse_files_mapping(text),
        };
        let rows = match rows {
            Err(Error::EmptyDocument) => {
                self.warnings.push(format!("{path}: empty mapping file"));
                return Ok(());
            }
            r => r?,
        };
        let dir_id = self.ensure_dir(dir)?;
        for (file, features) in rows {
            let target = if file.is_empty() {
                dir_id
            } else {
                self.ws
                    .child_named(dir_id, &file)
                    .ok_or_else(|| Error::UnknownFile(format!("{dir}/{file}")))?
            };
            for feature in features {
                if !self.ws.get(target)?.pc.mentions(&feature) {
                    self.ws.map_asset_to_feature(target, &feature)?;
                }
            }
        }
        Ok(())
    }

    fn clone_entry(&mut self, entry: &CloneLogEntry) -> Result<()> {
        let bad = |reason: String| Error::BadCloneLogEntry { entry: entry.to_string(), reason };
        let repo = |ws: &Workspace, name: &str| {
            ws.child_named(ROOT_ID, name)
                .ok_or_else(|| bad(format!("repository `{name}` does not exist")))
        };
        let source_repo = repo(self.ws, &entry.source_repo)?;
        let target_repo = repo(self.ws, &entry.target_repo)?;
        let source = self
            .ws
            .find_feature_within(source_repo, &entry.feature)
            .map_err(|e| bad(e.to_string()))?;
        let target_owner = self
            .ws
            .subtree(target_repo)
            .into_iter()
            .find(|a| self.ws.feature_model(*a).is_some())
            .ok_or_else(|| bad(format!("repository `{}` has no feature model", entry.target_repo)))?;
        let target = self.ws.feature_model(target_owner).unwrap().root();
        self.ws.clone_feature_adopting(source, target)?;
        Ok(())
    }
}

fn sort_meta(kind: MetaFile, change: Change, models: &mut Vec<Change>, mappings: &mut Vec<Change>) {
    match kind {
        MetaFile::FeatureModel => models.push(change),
        MetaFile::FolderMapping | MetaFile::FilesMapping => mappings.push(change),
    }
}

impl Workspace {
    /// Resolves a feature given by path or unique name among the models
    /// owned inside `scope`.
    pub fn find_feature_within(&self, scope: AssetId, query: &str) -> Result<FeatureId> {
        let mut hits = Vec::new();
        for owner in self.subtree(scope) {
            let Some(fm) = self.feature_model(owner) else { continue };
            let path: crate::model::FeaturePath = query.into();
            if let Ok(id) = fm.resolve(&path) {
                hits.push(id);
            } else if !query.contains('/') {
                hits.extend(fm.find(query));
            }
        }
        match hits.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::NotFound(query.to_string())),
            _ => Err(Error::NotFound(format!("{query} (ambiguous)"))),
        }
    }
}
