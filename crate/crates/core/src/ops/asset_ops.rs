use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{is_valid_asset_name, is_valid_feature_name, AssetId, NewAsset};
use crate::oplog::OperatorKind;
use crate::pc::Pc;
use crate::workspace::{Workspace, ROOT_ID, ROOT_NAME};

use super::ModelTouch;

impl Workspace {
    /// Adds a detached subtree below `target`. The new assets and `target`
    /// receive the bumped global version; features they are mapped to that
    /// the scope model lacks are added under UNASSIGNED.
    pub fn add_asset(&mut self, new: NewAsset, target: AssetId) -> Result<AssetId> {
        let args = vec![self.path_of(target).join(&new.name).to_string(), new.kind.to_string()];
        let id = self.atomically(|ws| ws.add_asset_inner(new, target))?;
        self.record(OperatorKind::AddAsset, args, false);
        Ok(id)
    }

    pub(crate) fn add_asset_inner(&mut self, new: NewAsset, target: AssetId) -> Result<AssetId> {
        let (id, report) = self.attach(new, target)?;
        let mut tm = ModelTouch::default();
        for (asset, _) in &report.assets {
            let names = self.assets[asset].pc.features();
            if names.is_empty() {
                continue;
            }
            let owner = self
                .scope_owner(*asset)
                .ok_or_else(|| Error::NoFeatureModelInScope(self.describe(*asset)))?;
            for name in names {
                self.ensure_feature(owner, &name, &mut tm)?;
            }
        }
        tm.commit(self);
        let mut touched: Vec<AssetId> = report.assets.iter().map(|(a, _)| *a).collect();
        touched.push(target);
        self.bump_global_version(&touched);
        Ok(id)
    }

    /// Replaces an asset's content and/or name. Always bumps the asset, even
    /// when nothing differs.
    pub fn change_asset(
        &mut self,
        id: AssetId,
        content: Option<String>,
        name: Option<String>,
    ) -> Result<()> {
        let old = self.path_of(id).to_string();
        self.atomically(|ws| ws.change_asset_inner(id, content, name))?;
        let mut args = vec![old];
        let new_path = self.path_of(id).to_string();
        if args[0] != new_path {
            args.push(new_path);
        }
        self.record(OperatorKind::ChangeAsset, args, false);
        Ok(())
    }

    pub(crate) fn change_asset_inner(
        &mut self,
        id: AssetId,
        content: Option<String>,
        name: Option<String>,
    ) -> Result<()> {
        let asset = self.get(id)?;
        if id == ROOT_ID {
            return Err(Error::InvalidName(ROOT_NAME.into()));
        }
        if let Some(name) = &name {
            if !is_valid_asset_name(name) {
                return Err(Error::InvalidName(name.clone()));
            }
            let parent = asset.parent.expect("non-root asset has a parent");
            if *name != asset.name && self.child_named(parent, name).is_some() {
                return Err(Error::DuplicateName {
                    name: name.clone(),
                    parent: self.path_of(parent).to_string(),
                });
            }
        }
        let asset = self.get_mut(id)?;
        if let Some(name) = name {
            asset.name = name;
        }
        if let Some(content) = content {
            asset.content = Some(content);
        }
        self.bump_global_version(&[id]);
        Ok(())
    }

    /// Removes an asset with all sub-assets. Features whose last mapped asset
    /// disappears are removed as well.
    pub fn remove_asset(&mut self, id: AssetId) -> Result<()> {
        let args = vec![self.path_of(id).to_string()];
        self.atomically(|ws| ws.remove_asset_inner(id))?;
        self.record(OperatorKind::RemoveAsset, args, false);
        Ok(())
    }

    pub(crate) fn remove_asset_inner(&mut self, id: AssetId) -> Result<()> {
        self.get(id)?;
        if id == ROOT_ID {
            return Err(Error::CannotRemoveRoot);
        }
        let removed: BTreeSet<AssetId> = self.subtree(id).into_iter().collect();
        let mut lost: BTreeMap<AssetId, Vec<String>> = BTreeMap::new();
        for a in &removed {
            let Some(owner) = self.scope_owner(*a) else {
                continue;
            };
            if removed.contains(&owner) {
                continue;
            }
            let names = lost.entry(owner).or_default();
            for n in self.assets[a].pc.features() {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
        }
        let parent = self.assets[&id].parent.expect("non-root asset has a parent");
        self.detach(id);
        let mut tm = ModelTouch::default();
        for (owner, names) in lost {
            let still_mapped: BTreeSet<String> = self
                .subtree(owner)
                .into_iter()
                .filter(|a| self.scope_owner(*a) == Some(owner))
                .flat_map(|a| self.assets[&a].pc.features())
                .collect();
            for name in names {
                if still_mapped.contains(&name) {
                    continue;
                }
                let fm = self.models.get_mut(&owner).unwrap();
                let Some(fid) = fm.find(&name) else {
                    continue;
                };
                if fid == fm.root() || fid == fm.unassigned() {
                    continue;
                }
                if let Some(p) = fm.remove_hoisting(fid) {
                    tm.add(owner, p);
                }
            }
        }
        tm.commit(self);
        self.bump_global_version(&[parent]);
        Ok(())
    }

    /// Clone into `target`, then remove the original.
    pub fn move_asset(&mut self, id: AssetId, target: AssetId) -> Result<AssetId> {
        let args = vec![self.path_of(id).to_string(), self.path_of(target).to_string()];
        let moved = self.atomically(|ws| {
            if id == ROOT_ID {
                return Err(Error::CannotCloneRoot);
            }
            if ws.is_within(target, id) {
                return Err(Error::Cycle {
                    source_path: ws.describe(id),
                    target: ws.describe(target),
                });
            }
            let moved = ws.clone_asset_inner(id, target)?;
            ws.remove_asset_inner(id)?;
            Ok(moved)
        })?;
        self.record(OperatorKind::MoveAsset, args, false);
        Ok(moved)
    }

    /// Adds `feature` to the asset's presence condition by disjunction,
    /// creating the feature under UNASSIGNED when the scope model lacks it.
    pub fn map_asset_to_feature(&mut self, id: AssetId, feature: &str) -> Result<()> {
        let args = vec![self.path_of(id).to_string(), feature.to_string()];
        let late = self.atomically(|ws| ws.map_inner(id, feature))?;
        self.record(OperatorKind::MapAssetToFeature, args, late);
        Ok(())
    }

    /// Returns whether the mapping came after the asset's creation step.
    pub(crate) fn map_inner(&mut self, id: AssetId, feature: &str) -> Result<bool> {
        if !is_valid_feature_name(feature) {
            return Err(Error::InvalidName(feature.to_string()));
        }
        let (owner, _) = self.ancestor_feature_model(id)?;
        let mut tm = ModelTouch::default();
        self.ensure_feature(owner, feature, &mut tm)?;
        tm.commit(self);
        let step = self.step;
        let asset = self.get_mut(id)?;
        asset.pc = asset.pc.disjoin(feature);
        let late = asset.created_step < step;
        self.bump_global_version(&[id]);
        Ok(late)
    }

    /// Deep-clones `source` below `target` and records one asset trace per
    /// copied node. Copies keep their originals' versions; only `target` is
    /// stamped with the new global version.
    pub fn clone_asset(&mut self, source: AssetId, target: AssetId) -> Result<AssetId> {
        let args = vec![self.path_of(source).to_string(), self.path_of(target).to_string()];
        let id = self.atomically(|ws| ws.clone_asset_inner(source, target))?;
        self.record(OperatorKind::CloneAsset, args, false);
        Ok(id)
    }

    pub(crate) fn clone_asset_inner(&mut self, source: AssetId, target: AssetId) -> Result<AssetId> {
        self.get(source)?;
        if self.is_within(target, source) {
            return Err(Error::Cycle { source_path: self.describe(source), target: self.describe(target) });
        }
        let mut tm = ModelTouch::default();
        let id = self.clone_subtree(source, target, &mut tm)?;
        tm.commit(self);
        self.bump_global_version(&[target]);
        Ok(id)
    }

    /// Clone without version bumps; feature additions go into `tm`.
    pub(crate) fn clone_subtree(
        &mut self,
        source: AssetId,
        target: AssetId,
        tm: &mut ModelTouch,
    ) -> Result<AssetId> {
        let new = self.deep_clone(source)?;
        let (top, report) = self.attach(new, target)?;
        let fresh: BTreeSet<AssetId> = report.assets.iter().map(|(a, _)| *a).collect();
        for (new_id, origin) in &report.assets {
            let origin = origin.expect("deep clones record their origin");
            let version = self.assets[&origin].version;
            self.traces.add_asset_trace(origin, *new_id, version)?;
        }
        for (old, new_id) in &report.features {
            let version = self.model_of_feature(*old)?.1.version();
            self.traces.add_feature_trace(*old, *new_id, version)?;
        }
        for (new_id, origin) in &report.assets {
            let origin = origin.unwrap();
            let dst = self.scope_owner(*new_id);
            if dst.is_some_and(|d| fresh.contains(&d)) {
                if *new_id == top {
                    self.assets.get_mut(&top).unwrap().pc = remap_top(&self.assets[&origin].pc, None);
                }
                continue;
            }
            let src = self.scope_owner(origin);
            let names = self.assets[&origin].pc.features();
            let renames = self.carry_features(src, dst, *new_id, &names, tm)?;
            let pc = if *new_id == top {
                remap_top(&self.assets[&origin].pc, Some(&renames))
            } else {
                self.assets[new_id].pc.rename(&renames)
            };
            self.assets.get_mut(new_id).unwrap().pc = pc;
        }
        Ok(top)
    }

    /// Brings `target` up to date with its clone source `source` if the source
    /// is ahead of the latest trace linking them. Target-local changes and
    /// sub-assets are kept. Returns `false` (and changes nothing) when the
    /// pair is already consistent.
    pub fn propagate_asset(&mut self, source: AssetId, target: AssetId) -> Result<bool> {
        let args = vec![self.path_of(source).to_string(), self.path_of(target).to_string()];
        let changed = self.atomically(|ws| ws.propagate_asset_inner(source, target))?;
        if changed {
            self.record(OperatorKind::PropagateAsset, args, false);
        }
        Ok(changed)
    }

    pub(crate) fn propagate_asset_inner(&mut self, source: AssetId, target: AssetId) -> Result<bool> {
        self.get(source)?;
        self.get(target)?;
        let trace = self.asset_trace_or_err(source, target)?;
        if self.is_within(target, source) || self.is_within(source, target) {
            return Err(Error::Cycle { source_path: self.describe(source), target: self.describe(target) });
        }
        if !self.needs_propagation(source, target, trace.version_at) {
            return Ok(false);
        }
        let mut modified = BTreeSet::from([target]);
        let mut tm = ModelTouch::default();
        self.make_consistent(source, target, trace.version_at, &mut modified, &mut tm)?;
        tm.commit(self);
        let touched: Vec<AssetId> = modified.into_iter().collect();
        self.bump_global_version(&touched);
        Ok(true)
    }

    /// Clone of `source` among `candidates`, with the latest linking trace's
    /// version.
    pub(crate) fn clone_among(&self, source: AssetId, candidates: &[AssetId]) -> Option<(AssetId, u64)> {
        candidates
            .iter()
            .filter_map(|c| self.traces.latest_asset_trace(source, *c).map(|t| (t.seq, *c, t.version_at)))
            .max()
            .map(|(_, c, v)| (c, v))
    }

    pub(crate) fn needs_propagation(&self, source: AssetId, target: AssetId, since: u64) -> bool {
        let (Some(s), Some(t)) = (self.assets.get(&source), self.assets.get(&target)) else {
            return false;
        };
        if s.version > since {
            return true;
        }
        s.children.iter().filter(|c| !self.is_within(target, **c)).any(|c| match self.clone_among(*c, &t.children) {
            Some((tc, v)) => self.needs_propagation(*c, tc, v),
            None => self.assets[c].version > since,
        })
    }

    pub(crate) fn make_consistent(
        &mut self,
        source: AssetId,
        target: AssetId,
        since: u64,
        modified: &mut BTreeSet<AssetId>,
        tm: &mut ModelTouch,
    ) -> Result<()> {
        let s = self.assets[&source].clone();
        if s.version > since {
            let t = &self.assets[&target];
            let parent = t.parent.expect("clones are never the root");
            if t.name != s.name && self.child_named(parent, &s.name).is_some() {
                return Err(Error::DuplicateName {
                    name: s.name.clone(),
                    parent: self.path_of(parent).to_string(),
                });
            }
            let names = s.pc.features();
            let renames = self.carry_features(
                self.scope_owner(source),
                self.scope_owner(target),
                target,
                &names,
                tm,
            )?;
            let t = self.assets.get_mut(&target).unwrap();
            t.name = s.name.clone();
            t.content = s.content.clone();
            for n in &names {
                let n = &renames[n];
                if !t.pc.mentions(n) {
                    t.pc = t.pc.disjoin(n);
                }
            }
            modified.insert(target);
        }
        for c in &s.children {
            if self.is_within(target, *c) {
                continue;
            }
            let t_children = self.assets[&target].children.clone();
            match self.clone_among(*c, &t_children) {
                Some((tc, v)) => {
                    if self.needs_propagation(*c, tc, v) {
                        self.make_consistent(*c, tc, v, modified, tm)?;
                    }
                }
                None if self.assets[c].version > since => {
                    let name = self.assets[c].name.clone();
                    match self.child_named(target, &name) {
                        Some(same) if self.assets[&same].kind == self.assets[c].kind => {
                            self.make_consistent(*c, same, 0, modified, tm)?;
                        }
                        _ => {
                            self.clone_subtree(*c, target, tm)?;
                        }
                    }
                    modified.insert(target);
                }
                None => {}
            }
        }
        let version = self.assets[&source].version;
        self.traces.add_asset_trace(source, target, version)?;
        Ok(())
    }
}

/// Presence condition of a top-level clone: `true` re-mapped to each feature
/// of the original, innermost first so that `F | (G | true)` survives.
fn remap_top(original: &Pc, renames: Option<&BTreeMap<String, String>>) -> Pc {
    original.features().iter().rev().fold(Pc::True, |pc, n| {
        let n = renames.and_then(|r| r.get(n)).unwrap_or(n);
        pc.disjoin(n)
    })
}
