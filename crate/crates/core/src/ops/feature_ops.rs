use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{is_valid_feature_name, AssetId, FeatureId, FeatureModel, UNASSIGNED};
use crate::oplog::OperatorKind;
use crate::workspace::{check_model, Workspace};

use super::ModelTouch;

/// Side effects collected while cloning or propagating features.
#[derive(Debug, Default)]
struct Effects {
    tm: ModelTouch,
    /// Assets created by this operator; they keep their originals' versions.
    fresh: BTreeSet<AssetId>,
    /// Pre-existing assets that changed (insertion parents, re-mapped clones).
    touched: BTreeSet<AssetId>,
}

impl Effects {
    fn commit(mut self, ws: &mut Workspace) {
        self.tm.commit(ws);
        self.touched.retain(|a| !self.fresh.contains(a) && ws.contains(*a));
        if !self.touched.is_empty() {
            let touched: Vec<AssetId> = self.touched.into_iter().collect();
            ws.bump_global_version(&touched);
        }
    }
}

impl Workspace {
    /// Adds a mandatory feature below `parent` and stamps it with the bumped
    /// model version.
    pub fn add_feature(&mut self, name: &str, parent: FeatureId) -> Result<FeatureId> {
        let args = vec![name.to_string(), self.feature_ref(parent)];
        let id = self.atomically(|ws| {
            let (owner, _) = ws.model_of_feature(parent)?;
            let id = ws.alloc_feature_id();
            let fm = ws.models.get_mut(&owner).unwrap();
            fm.insert(id, parent, name)?;
            fm.bump(&[id]);
            Ok(id)
        })?;
        self.record(OperatorKind::AddFeature, args, false);
        Ok(id)
    }

    /// Attaches `fm` to an asset that has none yet. Feature ids are replaced
    /// by fresh workspace-wide ones.
    pub fn add_feature_model_to_asset(&mut self, asset: AssetId, fm: FeatureModel) -> Result<()> {
        let args = vec![self.path_of(asset).to_string(), fm.feature(fm.root()).name.clone()];
        self.atomically(|ws| ws.add_feature_model_inner(asset, fm))?;
        self.record(OperatorKind::AddFeatureModelToAsset, args, false);
        Ok(())
    }

    pub(crate) fn add_feature_model_inner(&mut self, asset: AssetId, mut fm: FeatureModel) -> Result<()> {
        self.get(asset)?;
        if self.models.contains_key(&asset) {
            return Err(Error::FeatureModelAlreadyPresent(self.describe(asset)));
        }
        check_model(&fm).map_err(|reason| Error::Malformed { line: 0, reason })?;
        fm.remap_ids(&mut self.next_feature);
        self.models.insert(asset, fm);
        let mut tm = ModelTouch::default();
        for a in self.subtree(asset) {
            if self.scope_owner(a) != Some(asset) {
                continue;
            }
            for name in self.assets[&a].pc.features() {
                self.ensure_feature(asset, &name, &mut tm)?;
            }
        }
        tm.commit(self);
        self.bump_global_version(&[asset]);
        Ok(())
    }

    /// Removes a feature with its sub-features. Assets mapped only to removed
    /// features are removed; other assets get those literals replaced by
    /// `false`.
    pub fn remove_feature(&mut self, feature: FeatureId) -> Result<()> {
        let args = vec![self.feature_ref(feature)];
        self.atomically(|ws| ws.remove_feature_inner(feature))?;
        self.record(OperatorKind::RemoveFeature, args, false);
        Ok(())
    }

    pub(crate) fn remove_feature_inner(&mut self, feature: FeatureId) -> Result<()> {
        let (owner, fm) = self.model_of_feature(feature)?;
        if feature == fm.root() {
            return Err(Error::CannotRemoveRoot);
        }
        if feature == fm.unassigned() {
            return Err(Error::CannotRemoveUnassigned);
        }
        let names: BTreeSet<String> =
            fm.descendants(feature).into_iter().map(|f| fm.feature(f).name.clone()).collect();
        let parent = fm.feature(feature).parent;
        let scoped: Vec<AssetId> = self
            .subtree(owner)
            .into_iter()
            .filter(|a| self.scope_owner(*a) == Some(owner))
            .collect();
        let doomed: Vec<AssetId> = scoped
            .iter()
            .copied()
            .filter(|a| {
                let lits = self.assets[a].pc.features();
                *a != owner && !lits.is_empty() && lits.iter().all(|l| names.contains(l))
            })
            .collect();

        let fm = self.models.get_mut(&owner).unwrap();
        fm.remove_subtree(feature);
        fm.bump(&parent.into_iter().collect::<Vec<_>>());

        for a in doomed {
            if self.contains(a) {
                self.remove_asset_inner(a)?;
            }
        }
        let mut unmapped = Vec::new();
        for a in scoped {
            if let Some(asset) = self.assets.get_mut(&a) {
                if names.iter().any(|n| asset.pc.mentions(n)) {
                    asset.pc = asset.pc.unmap(&names);
                    unmapped.push(a);
                }
            }
        }
        if !unmapped.is_empty() {
            self.bump_global_version(&unmapped);
        }
        Ok(())
    }

    /// Moves a feature below `new_parent`. Within one model this re-parents in
    /// place; across models it clones the feature and removes the original.
    pub fn move_feature(&mut self, feature: FeatureId, new_parent: FeatureId) -> Result<FeatureId> {
        let args = vec![self.feature_ref(feature), self.feature_ref(new_parent)];
        let moved = self.atomically(|ws| ws.move_feature_inner(feature, new_parent))?;
        self.record(OperatorKind::MoveFeature, args, false);
        Ok(moved)
    }

    fn move_feature_inner(&mut self, feature: FeatureId, new_parent: FeatureId) -> Result<FeatureId> {
        let (owner, fm) = self.model_of_feature(feature)?;
        if feature == fm.root() {
            return Err(Error::CannotRemoveRoot);
        }
        if feature == fm.unassigned() {
            return Err(Error::CannotRemoveUnassigned);
        }
        let (target_owner, _) = self.model_of_feature(new_parent)?;
        if target_owner != owner {
            let moved = self.clone_feature_inner(feature, new_parent, false)?;
            self.remove_feature_inner(feature)?;
            return Ok(moved);
        }
        if fm.is_within(new_parent, feature) {
            return Err(Error::Cycle {
                source_path: self.feature_ref(feature),
                target: self.feature_ref(new_parent),
            });
        }
        let fm = self.models.get_mut(&owner).unwrap();
        fm.reparent(feature, new_parent);
        fm.bump(&[feature]);
        Ok(feature)
    }

    /// Marks a feature optional. Returns `false` if it already was, in which
    /// case nothing changes and nothing is logged.
    pub fn make_feature_optional(&mut self, feature: FeatureId) -> Result<bool> {
        let (owner, fm) = self.model_of_feature(feature)?;
        if fm.feature(feature).optional {
            return Ok(false);
        }
        let args = vec![self.feature_ref(feature)];
        let fm = self.models.get_mut(&owner).unwrap();
        fm.get_mut(feature).unwrap().optional = true;
        fm.bump(&[feature]);
        self.record(OperatorKind::MakeFeatureOptional, args, false);
        Ok(true)
    }

    /// Renames a feature and every literal referring to it in its scope.
    pub fn rename_feature(&mut self, feature: FeatureId, name: &str) -> Result<()> {
        let args = vec![self.feature_ref(feature), name.to_string()];
        self.atomically(|ws| {
            let mut fx = Effects::default();
            ws.rename_feature_core(feature, name, &mut fx)?;
            fx.commit(ws);
            Ok(())
        })?;
        self.record(OperatorKind::RenameFeature, args, false);
        Ok(())
    }

    fn rename_feature_core(&mut self, feature: FeatureId, name: &str, fx: &mut Effects) -> Result<()> {
        let (owner, fm) = self.model_of_feature(feature)?;
        let old = fm.feature(feature).name.clone();
        if old == name {
            return Ok(());
        }
        if feature == fm.unassigned() || !is_valid_feature_name(name) || name == UNASSIGNED {
            return Err(Error::InvalidName(name.to_string()));
        }
        if fm.find(name).is_some() {
            return Err(Error::DuplicateFeatureName(name.to_string()));
        }
        self.models.get_mut(&owner).unwrap().get_mut(feature).unwrap().name = name.to_string();
        fx.tm.add(owner, feature);
        let renames = BTreeMap::from([(old.clone(), name.to_string())]);
        for a in self.subtree(owner) {
            if self.scope_owner(a) == Some(owner) && self.assets[&a].pc.mentions(&old) {
                let asset = self.assets.get_mut(&a).unwrap();
                asset.pc = asset.pc.rename(&renames);
                fx.touched.insert(a);
            }
        }
        Ok(())
    }

    /// Clones a feature subtree below `target` (in another model) together
    /// with the assets mapped to it. Each asset is cloned as a tree slice: its
    /// ancestors up to the source model's owner are recreated as empty
    /// containers, reusing containers already cloned into the target scope.
    pub fn clone_feature(&mut self, source: FeatureId, target: FeatureId) -> Result<FeatureId> {
        self.clone_feature_logged(source, target, false)
    }

    /// Like [`Workspace::clone_feature`], but features and assets that
    /// already exist in the target under the same name are adopted as clones
    /// instead of being rejected. Used when the target variant was copied
    /// outside the platform.
    pub fn clone_feature_adopting(&mut self, source: FeatureId, target: FeatureId) -> Result<FeatureId> {
        self.clone_feature_logged(source, target, true)
    }

    fn clone_feature_logged(&mut self, source: FeatureId, target: FeatureId, adopt: bool) -> Result<FeatureId> {
        let args = vec![self.feature_ref(source), self.feature_ref(target)];
        let late = self.late_fix_involved(source);
        let id = self.atomically(|ws| ws.clone_feature_inner(source, target, adopt))?;
        self.record(OperatorKind::CloneFeature, args, late);
        Ok(id)
    }

    pub(crate) fn clone_feature_inner(
        &mut self,
        source: FeatureId,
        target: FeatureId,
        adopt: bool,
    ) -> Result<FeatureId> {
        let mut fx = Effects::default();
        let id = self.clone_feature_core(source, target, adopt, &mut fx)?;
        let (t_owner, _) = self.model_of_feature(target)?;
        fx.tm.add(t_owner, target);
        fx.commit(self);
        self.refresh_incomplete(t_owner);
        Ok(id)
    }

    fn clone_feature_core(
        &mut self,
        source: FeatureId,
        target: FeatureId,
        adopt: bool,
        fx: &mut Effects,
    ) -> Result<FeatureId> {
        let (s_owner, sfm) = self.model_of_feature(source)?;
        let sfm = sfm.clone();
        let (t_owner, tfm) = self.model_of_feature(target)?;
        let subtree = sfm.descendants(source);
        if s_owner == t_owner && tfm.is_within(target, source) {
            return Err(Error::Cycle {
                source_path: self.feature_ref(source),
                target: self.feature_ref(target),
            });
        }
        for f in &subtree {
            let name = &sfm.feature(*f).name;
            match tfm.find(name) {
                Some(existing) if !adopt || existing == *f => {
                    return Err(Error::DuplicateFeatureName(name.clone()))
                }
                _ => {}
            }
        }

        let mut map = BTreeMap::new();
        for f in &subtree {
            let sf = sfm.feature(*f);
            let parent = if *f == source { target } else { map[&sf.parent.unwrap()] };
            let existing = self.models[&t_owner].find(&sf.name);
            let id = match existing {
                Some(e) => e,
                None => {
                    let id = self.alloc_feature_id();
                    let tfm = self.models.get_mut(&t_owner).unwrap();
                    tfm.insert(id, parent, &sf.name)?;
                    let clone = tfm.get_mut(id).unwrap();
                    clone.optional = sf.optional;
                    clone.group = sf.group;
                    fx.tm.add(t_owner, id);
                    id
                }
            };
            map.insert(*f, id);
            self.traces.add_feature_trace(*f, id, sfm.version())?;
        }

        for f in &subtree {
            let name = self.models[&t_owner].feature(map[f]).name.clone();
            for a in self.mapped_assets(*f) {
                self.slice_and_map(a, s_owner, t_owner, &name, fx)?;
            }
        }
        Ok(map[&source])
    }

    /// Ensures the asset has a clone inside `t_owner`'s scope (slicing it in
    /// if needed) that is mapped to `feature`.
    fn slice_and_map(
        &mut self,
        asset: AssetId,
        s_owner: AssetId,
        t_owner: AssetId,
        feature: &str,
        fx: &mut Effects,
    ) -> Result<()> {
        let Some(clone) = self.slice_into(asset, s_owner, t_owner, fx)? else {
            return Ok(());
        };
        let c = self.assets.get_mut(&clone).unwrap();
        if !c.pc.mentions(feature) {
            c.pc = c.pc.disjoin(feature);
            fx.touched.insert(clone);
        }
        Ok(())
    }

    /// Latest clone of `asset` inside the subtree of `owner`.
    pub(crate) fn clone_in_scope(&self, asset: AssetId, owner: AssetId) -> Option<(AssetId, u64)> {
        self.traces
            .asset_relatives(asset)
            .into_iter()
            .filter(|r| *r != owner && self.contains(*r) && self.is_within(*r, owner))
            .filter_map(|r| self.traces.latest_asset_trace(asset, r).map(|t| (t.seq, r, t.version_at)))
            .max()
            .map(|(_, r, v)| (r, v))
    }

    fn slice_into(
        &mut self,
        asset: AssetId,
        s_owner: AssetId,
        t_owner: AssetId,
        fx: &mut Effects,
    ) -> Result<Option<AssetId>> {
        if asset == s_owner || !self.is_within(asset, s_owner) {
            return Ok(None);
        }
        if let Some((c, _)) = self.clone_in_scope(asset, t_owner) {
            return Ok(Some(c));
        }
        let mut levels = self.chain_between(s_owner, asset)?;
        levels.push(asset);
        // Continue below the deepest ancestor already cloned into the scope.
        let mut cur = t_owner;
        let mut start = 0;
        for (i, level) in levels.iter().enumerate().rev().skip(1) {
            if let Some((c, _)) = self.clone_in_scope(*level, t_owner) {
                cur = c;
                start = i + 1;
                break;
            }
        }
        for level in levels.into_iter().skip(start) {
            let leaf = level == asset;
            let kids = self.assets[&cur].children.clone();
            if let Some((c, _)) = self.clone_among(level, &kids) {
                cur = c;
                continue;
            }
            let (name, kind, version) = {
                let a = &self.assets[&level];
                (a.name.clone(), a.kind, a.version)
            };
            if let Some(same) = self.child_named(cur, &name) {
                if self.assets[&same].kind == kind {
                    self.traces.add_asset_trace(level, same, version)?;
                    cur = same;
                    continue;
                }
            }
            let id = if leaf {
                let id = self.clone_subtree(level, cur, &mut fx.tm)?;
                self.assets.get_mut(&id).unwrap().pc = crate::pc::Pc::True;
                id
            } else {
                let (id, _) = self.attach(self.container_copy(level), cur)?;
                self.traces.add_asset_trace(level, id, version)?;
                id
            };
            fx.fresh.extend(self.subtree(id));
            fx.touched.insert(cur);
            cur = id;
        }
        Ok(Some(cur))
    }

    /// Brings the feature clone `target` up to date with `source`: name and
    /// flags, newly mapped assets, changed assets and new sub-features.
    /// Returns `false` when nothing changed since the latest trace.
    pub fn propagate_feature(&mut self, source: FeatureId, target: FeatureId) -> Result<bool> {
        let args = vec![self.feature_ref(source), self.feature_ref(target)];
        let late = self.late_fix_involved(source);
        let changed = self.atomically(|ws| ws.propagate_feature_inner(source, target))?;
        if changed {
            self.record(OperatorKind::PropagateFeature, args, late);
        }
        Ok(changed)
    }

    pub(crate) fn propagate_feature_inner(&mut self, source: FeatureId, target: FeatureId) -> Result<bool> {
        let trace = self.traces.latest_feature_trace(source, target).ok_or_else(|| Error::NotAClone {
            source_path: self.feature_ref(source),
            target: self.feature_ref(target),
        })?;
        let (s_owner, _) = self.model_of_feature(source)?;
        let (t_owner, _) = self.model_of_feature(target)?;
        if !self.feature_needs(source, target, trace.version_at, s_owner, t_owner) {
            return Ok(false);
        }
        let mut fx = Effects::default();
        self.feature_consistent(source, target, trace.version_at, s_owner, t_owner, &mut fx)?;
        fx.tm.add(t_owner, target);
        fx.commit(self);
        self.refresh_incomplete(t_owner);
        Ok(true)
    }

    fn feature_clone_in(&self, feature: FeatureId, owner: AssetId) -> Option<(FeatureId, u64)> {
        let fm = &self.models[&owner];
        self.traces
            .feature_relatives(feature)
            .into_iter()
            .filter(|r| fm.contains(*r))
            .filter_map(|r| self.traces.latest_feature_trace(feature, r).map(|t| (t.seq, r, t.version_at)))
            .max()
            .map(|(_, r, v)| (r, v))
    }

    /// Clone of the source child `child` below the propagation `target`;
    /// a clone that is the target or one of its ancestors is ignored.
    fn child_clone_in(&self, child: FeatureId, target: FeatureId, owner: AssetId) -> Option<(FeatureId, u64)> {
        self.feature_clone_in(child, owner)
            .filter(|(tc, _)| !self.models[&owner].is_within(target, *tc))
    }

    fn feature_needs(
        &self,
        source: FeatureId,
        target: FeatureId,
        since: u64,
        s_owner: AssetId,
        t_owner: AssetId,
    ) -> bool {
        let sfm = &self.models[&s_owner];
        let Some(tf) = self.models[&t_owner].get(target) else {
            return false;
        };
        let sf = sfm.feature(source);
        if sf.version > since || sf.name != tf.name {
            return true;
        }
        for a in self.mapped_assets(source) {
            if a == s_owner {
                continue;
            }
            match self.clone_in_scope(a, t_owner) {
                None => return true,
                Some((c, v)) => {
                    if self.needs_propagation(a, c, v) || !self.assets[&c].pc.mentions(&tf.name) {
                        return true;
                    }
                }
            }
        }
        sf.children.iter().any(|sc| match self.child_clone_in(*sc, target, t_owner) {
            Some((tc, v)) => self.feature_needs(*sc, tc, v, s_owner, t_owner),
            None => sfm.feature(*sc).version > since,
        })
    }

    fn feature_consistent(
        &mut self,
        source: FeatureId,
        target: FeatureId,
        since: u64,
        s_owner: AssetId,
        t_owner: AssetId,
        fx: &mut Effects,
    ) -> Result<()> {
        let sf = self.models[&s_owner].feature(source).clone();
        let sfm_version = self.models[&s_owner].version();
        if sf.version > since || sf.name != self.models[&t_owner].feature(target).name {
            self.rename_feature_core(target, &sf.name, fx)?;
            let tf = self.models.get_mut(&t_owner).unwrap().get_mut(target).unwrap();
            tf.optional = sf.optional;
            tf.group = sf.group;
            fx.tm.add(t_owner, target);
        }
        let name = self.models[&t_owner].feature(target).name.clone();
        // Deepest first: slicing a nested asset may adopt one of its
        // ancestors' counterparts, which then must receive the mapping.
        let mut mapped = self.mapped_assets(source);
        mapped.sort_by_key(|a| std::cmp::Reverse(self.depth(*a)));
        for a in mapped {
            // Slicing first: it may adopt a same-named asset that still
            // differs from the source.
            self.slice_and_map(a, s_owner, t_owner, &name, fx)?;
            if let Some((c, v)) = self.clone_in_scope(a, t_owner) {
                if self.needs_propagation(a, c, v) {
                    let mut modified = BTreeSet::new();
                    self.make_consistent(a, c, v, &mut modified, &mut fx.tm)?;
                    fx.touched.extend(modified);
                    self.slice_and_map(a, s_owner, t_owner, &name, fx)?;
                }
            }
        }
        // Slicing one child may clone a sibling's feature as a side effect
        // (a block mapped to it), so sweep until nothing changes.
        for _ in 0..=sf.children.len() {
            let mut progressed = false;
            for sc in &sf.children {
                match self.child_clone_in(*sc, target, t_owner) {
                    Some((tc, v)) => {
                        if self.feature_needs(*sc, tc, v, s_owner, t_owner) {
                            self.feature_consistent(*sc, tc, v, s_owner, t_owner, fx)?;
                            progressed = true;
                        }
                    }
                    None if self.models[&s_owner].feature(*sc).version > since => {
                        // The slice may reuse stale asset clones already in scope.
                        let tc = self.clone_feature_core(*sc, target, true, fx)?;
                        let v = self.models[&s_owner].version();
                        if self.feature_needs(*sc, tc, v, s_owner, t_owner) {
                            self.feature_consistent(*sc, tc, v, s_owner, t_owner, fx)?;
                        }
                        progressed = true;
                    }
                    None => {}
                }
            }
            if !progressed {
                break;
            }
        }
        self.traces.add_feature_trace(source, target, sfm_version)?;
        Ok(())
    }

    /// A feature clone is incomplete while some asset mapped to its source
    /// has no clone in the clone's scope.
    fn refresh_incomplete(&mut self, owner: AssetId) {
        let ids: Vec<FeatureId> = self.models[&owner].ids().collect();
        for id in ids {
            let Some(origin) = self.traces.feature_origin(id) else {
                continue;
            };
            let Some(s_owner) = self.feature_owner(origin.source) else {
                continue;
            };
            let incomplete = self
                .mapped_assets(origin.source)
                .into_iter()
                .any(|a| a != s_owner && self.clone_in_scope(a, owner).is_none());
            self.models.get_mut(&owner).unwrap().get_mut(id).unwrap().incomplete = incomplete;
        }
    }

    /// Whether some feature in the subtree of `feature` was mapped late,
    /// judging by the log entries for assets inside its model owner.
    fn late_fix_involved(&self, feature: FeatureId) -> bool {
        let Ok((owner, fm)) = self.model_of_feature(feature) else {
            return false;
        };
        let names: BTreeSet<&str> =
            fm.descendants(feature).into_iter().map(|f| fm.feature(f).name.as_str()).collect();
        let prefix = self.path_of(owner).to_string();
        self.log.iter().any(|op| {
            op.operator == OperatorKind::MapAssetToFeature
                && op.late
                && op.args.len() == 2
                && names.contains(op.args[1].as_str())
                && (prefix == "/" || op.args[0] == prefix || op.args[0].starts_with(&format!("{prefix}/")))
        })
    }
}
