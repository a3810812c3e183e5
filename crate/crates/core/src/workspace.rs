//! The workspace: asset tree, per-asset feature models, trace database and
//! operator log, plus the tree queries every operator builds on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    containable, is_valid_asset_name, Asset, AssetId, AssetKind, AssetPath, Feature, FeatureId,
    FeatureModel, FeaturePath, NewAsset,
};
use crate::oplog::{OperatorApplication, OperatorKind};
use crate::pc::Pc;
use crate::trace::TraceDatabase;

pub const ROOT_ID: AssetId = AssetId(0);
pub const ROOT_NAME: &str = "VpRoot";

/// How the top level of a scanned directory maps onto repositories.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Layout {
    /// The directory itself is one repository with the given name.
    Single(String),
    /// Every top-level directory is a repository.
    #[default]
    Multi,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workspace {
    pub(crate) assets: BTreeMap<AssetId, Asset>,
    pub(crate) models: BTreeMap<AssetId, FeatureModel>,
    pub(crate) traces: TraceDatabase,
    pub(crate) log: Vec<OperatorApplication>,
    /// Digest of every tracked file, keyed by workspace-relative path.
    pub(crate) files: BTreeMap<String, String>,
    pub(crate) layout: Layout,
    pub(crate) next_asset: u64,
    pub(crate) next_feature: u64,
    pub(crate) step: u64,
    pub(crate) derived: bool,
}

/// Ids handed out while attaching a detached subtree.
#[derive(Debug, Default)]
pub(crate) struct Attached {
    /// `(new id, origin)` for every inserted asset, pre-order.
    pub assets: Vec<(AssetId, Option<AssetId>)>,
    /// `(original id, new id)` for features of copied feature models.
    pub features: Vec<(FeatureId, FeatureId)>,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    /// An empty workspace: only the root, at global version 1.
    pub fn new() -> Self {
        let mut assets = BTreeMap::new();
        assets.insert(
            ROOT_ID,
            Asset {
                id: ROOT_ID,
                name: ROOT_NAME.to_string(),
                kind: AssetKind::VpRoot,
                version: 1,
                parent: None,
                children: Vec::new(),
                pc: Pc::True,
                content: None,
                created_step: 0,
            },
        );
        Workspace {
            assets,
            models: BTreeMap::new(),
            traces: TraceDatabase::new(),
            log: Vec::new(),
            files: BTreeMap::new(),
            layout: Layout::Multi,
            next_asset: 1,
            next_feature: 1,
            step: 0,
            derived: false,
        }
    }

    pub fn root_id(&self) -> AssetId {
        ROOT_ID
    }

    pub fn global_version(&self) -> u64 {
        self.assets[&ROOT_ID].version
    }

    pub fn traces(&self) -> &TraceDatabase {
        &self.traces
    }

    pub fn log(&self) -> &[OperatorApplication] {
        &self.log
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    pub fn set_layout(&mut self, layout: Layout) {
        self.layout = layout;
    }

    pub(crate) fn set_derived(&mut self, derived: bool) -> bool {
        std::mem::replace(&mut self.derived, derived)
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.len() == 1
    }

    pub fn assets(&self) -> impl Iterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn asset(&self, id: AssetId) -> Option<&Asset> {
        self.assets.get(&id)
    }

    pub fn contains(&self, id: AssetId) -> bool {
        self.assets.contains_key(&id)
    }

    pub fn get(&self, id: AssetId) -> Result<&Asset> {
        self.assets
            .get(&id)
            .ok_or_else(|| Error::NotFound(format!("asset #{id}")))
    }

    pub(crate) fn get_mut(&mut self, id: AssetId) -> Result<&mut Asset> {
        self.assets
            .get_mut(&id)
            .ok_or_else(|| Error::NotFound(format!("asset #{id}")))
    }

    pub fn path_of(&self, id: AssetId) -> AssetPath {
        let mut segs = Vec::new();
        let mut cur = self.assets.get(&id);
        while let Some(a) = cur {
            if a.id == ROOT_ID {
                break;
            }
            segs.push(a.name.clone());
            cur = a.parent.and_then(|p| self.assets.get(&p));
        }
        segs.reverse();
        AssetPath(segs)
    }

    /// Human-readable location of an asset id, tolerating removed ids.
    pub fn describe(&self, id: AssetId) -> String {
        if self.contains(id) {
            self.path_of(id).to_string()
        } else {
            format!("<removed #{id}>")
        }
    }

    pub fn child_named(&self, parent: AssetId, name: &str) -> Option<AssetId> {
        self.assets.get(&parent)?.children.iter().copied().find(|c| self.assets[c].name == name)
    }

    pub fn resolve(&self, path: &AssetPath) -> Result<AssetId> {
        let mut cur = ROOT_ID;
        for seg in path.segments() {
            cur = self
                .child_named(cur, seg)
                .ok_or_else(|| Error::NotFound(path.to_string()))?;
        }
        Ok(cur)
    }

    pub fn resolve_str(&self, path: &str) -> Result<AssetId> {
        self.resolve(&path.into())
    }

    /// `id` and everything below it, pre-order.
    pub fn subtree(&self, id: AssetId) -> Vec<AssetId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if let Some(a) = self.assets.get(&c) {
                out.push(c);
                stack.extend(a.children.iter().rev().copied());
            }
        }
        out
    }

    pub fn is_within(&self, id: AssetId, ancestor: AssetId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.assets.get(&c).and_then(|a| a.parent);
        }
        false
    }

    pub fn depth(&self, id: AssetId) -> usize {
        let mut d = 0;
        let mut cur = self.assets.get(&id).and_then(|a| a.parent);
        while let Some(p) = cur {
            d += 1;
            cur = self.assets[&p].parent;
        }
        d
    }

    // ---- feature models -------------------------------------------------

    pub fn feature_models(&self) -> impl Iterator<Item = (AssetId, &FeatureModel)> {
        self.models.iter().map(|(k, v)| (*k, v))
    }

    pub fn feature_model(&self, owner: AssetId) -> Option<&FeatureModel> {
        self.models.get(&owner)
    }

    /// Closest ancestor-or-self owning a feature model.
    pub fn scope_owner(&self, id: AssetId) -> Option<AssetId> {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if self.models.contains_key(&c) {
                return Some(c);
            }
            cur = self.assets.get(&c).and_then(|a| a.parent);
        }
        None
    }

    pub fn ancestor_feature_model(&self, id: AssetId) -> Result<(AssetId, &FeatureModel)> {
        self.get(id)?;
        let owner = self
            .scope_owner(id)
            .ok_or_else(|| Error::NoFeatureModelInScope(self.path_of(id).to_string()))?;
        Ok((owner, &self.models[&owner]))
    }

    pub fn feature_owner(&self, id: FeatureId) -> Option<AssetId> {
        self.models.iter().find(|(_, fm)| fm.contains(id)).map(|(owner, _)| *owner)
    }

    pub fn feature(&self, id: FeatureId) -> Option<&Feature> {
        self.models.values().find_map(|fm| fm.get(id))
    }

    pub(crate) fn model_of_feature(&self, id: FeatureId) -> Result<(AssetId, &FeatureModel)> {
        let owner = self
            .feature_owner(id)
            .ok_or_else(|| Error::NotFound(format!("feature #{id}")))?;
        Ok((owner, &self.models[&owner]))
    }

    /// Resolves `<asset path>/<features below the model root>`. The asset
    /// path alone denotes the model's root feature; a single trailing name
    /// that is not a direct child of the root is looked up anywhere in the
    /// model.
    pub fn resolve_feature(&self, query: &str) -> Result<FeatureId> {
        let segs: Vec<&str> = query.split('/').filter(|s| !s.is_empty()).collect();
        for split in (1..=segs.len()).rev() {
            let owner_path = AssetPath(segs[..split].iter().map(|s| s.to_string()).collect());
            let Ok(owner) = self.resolve(&owner_path) else {
                continue;
            };
            let Some(fm) = self.models.get(&owner) else {
                continue;
            };
            let rest = &segs[split..];
            let mut path = vec![fm.feature(fm.root()).name.clone()];
            path.extend(rest.iter().map(|s| s.to_string()));
            if let Ok(id) = fm.resolve(&FeaturePath(path)) {
                return Ok(id);
            }
            if let [single] = rest {
                if let Some(id) = fm.find(single) {
                    return Ok(id);
                }
            }
            return Err(Error::NotFound(query.to_string()));
        }
        Err(Error::NotFound(query.to_string()))
    }

    /// Inverse of [`Workspace::resolve_feature`] (always the full path form).
    pub fn feature_ref(&self, id: FeatureId) -> String {
        match self.model_of_feature(id) {
            Ok((owner, fm)) => {
                let mut out = self.path_of(owner).to_string();
                for seg in fm.path_of(id).0.iter().skip(1) {
                    out.push('/');
                    out.push_str(seg);
                }
                out
            }
            Err(_) => format!("<removed feature #{id}>"),
        }
    }

    /// Features of the asset's scope model named by its presence condition.
    pub fn mapped_features(&self, id: AssetId) -> Vec<FeatureId> {
        let Some(asset) = self.assets.get(&id) else {
            return Vec::new();
        };
        let Some(owner) = self.scope_owner(id) else {
            return Vec::new();
        };
        let fm = &self.models[&owner];
        asset.pc.features().iter().filter_map(|n| fm.find(n)).collect()
    }

    /// Assets mapped directly to the feature, pre-order.
    pub fn mapped_assets(&self, feature: FeatureId) -> Vec<AssetId> {
        let Ok((owner, fm)) = self.model_of_feature(feature) else {
            return Vec::new();
        };
        let name = &fm.feature(feature).name;
        self.subtree(owner)
            .into_iter()
            .filter(|a| self.assets[a].pc.mentions(name) && self.scope_owner(*a) == Some(owner))
            .collect()
    }

    /// Direct clones of an asset that are still in the tree.
    pub fn clones_of(&self, id: AssetId) -> Vec<AssetId> {
        self.traces.asset_clones(id)
    }

    // ---- primitives used by the operators ------------------------------

    pub(crate) fn alloc_asset_id(&mut self) -> AssetId {
        let id = AssetId(self.next_asset);
        self.next_asset += 1;
        id
    }

    pub(crate) fn alloc_feature_id(&mut self) -> FeatureId {
        let id = FeatureId(self.next_feature);
        self.next_feature += 1;
        id
    }

    /// Increments the global version, stamps `touched` and returns it.
    pub fn bump_global_version(&mut self, touched: &[AssetId]) -> u64 {
        let next = self.global_version() + 1;
        self.assets.get_mut(&ROOT_ID).unwrap().version = next;
        for id in touched {
            if let Some(a) = self.assets.get_mut(id) {
                a.version = next;
            }
        }
        next
    }

    /// Runs `f`, restoring the previous state if it fails.
    pub(crate) fn atomically<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let backup = self.clone();
        let out = f(self);
        if out.is_err() {
            *self = backup;
        }
        out
    }

    pub(crate) fn record(&mut self, operator: OperatorKind, args: Vec<String>, late: bool) {
        let seq = self.log.last().map(|o| o.seq + 1).unwrap_or(1);
        self.log.push(OperatorApplication {
            seq,
            step: self.step,
            operator,
            args,
            result_version: self.global_version(),
            derived: self.derived,
            late,
        });
    }

    /// Checks that `new` can be attached below `parent`.
    pub(crate) fn validate_attach(&self, new: &NewAsset, parent: AssetId) -> Result<()> {
        let parent_asset = self.get(parent)?;
        if !containable(new.kind, parent_asset.kind) {
            return Err(Error::NotContainable {
                child: new.kind.to_string(),
                parent: parent_asset.kind.to_string(),
            });
        }
        if self.child_named(parent, &new.name).is_some() {
            return Err(Error::DuplicateName {
                name: new.name.clone(),
                parent: self.path_of(parent).to_string(),
            });
        }
        validate_detached(new)
    }

    /// Inserts a detached subtree below `parent` without touching versions.
    pub(crate) fn attach(&mut self, new: NewAsset, parent: AssetId) -> Result<(AssetId, Attached)> {
        self.validate_attach(&new, parent)?;
        let mut report = Attached::default();
        let id = self.attach_unchecked(new, parent, &mut report);
        Ok((id, report))
    }

    fn attach_unchecked(&mut self, new: NewAsset, parent: AssetId, report: &mut Attached) -> AssetId {
        let id = self.alloc_asset_id();
        report.assets.push((id, new.origin));
        self.assets.insert(
            id,
            Asset {
                id,
                name: new.name,
                kind: new.kind,
                version: new.version,
                parent: Some(parent),
                children: Vec::new(),
                pc: new.pc,
                content: new.content,
                created_step: self.step,
            },
        );
        self.assets.get_mut(&parent).unwrap().children.push(id);
        if let Some(mut fm) = new.feature_model {
            let map = remap_model(&mut fm, &mut self.next_feature);
            if new.origin.is_some() {
                report.features.extend(map);
            }
            self.models.insert(id, fm);
        }
        for child in new.children {
            self.attach_unchecked(child, id, report);
        }
        id
    }

    /// Removes the subtree rooted at `id`, returning the removed assets.
    pub(crate) fn detach(&mut self, id: AssetId) -> Vec<Asset> {
        let ids = self.subtree(id);
        if let Some(parent) = self.assets.get(&id).and_then(|a| a.parent) {
            self.assets.get_mut(&parent).unwrap().children.retain(|c| *c != id);
        }
        ids.iter()
            .filter_map(|i| {
                self.models.remove(i);
                self.assets.remove(i)
            })
            .collect()
    }

    /// Structural copy of `source` and its sub-assets. Each copy keeps its
    /// original's version and records it as origin; the top copy's presence
    /// condition is reset to `true`, the others are kept verbatim.
    pub fn deep_clone(&self, source: AssetId) -> Result<NewAsset> {
        if source == ROOT_ID {
            return Err(Error::CannotCloneRoot);
        }
        let mut top = self.copy_subtree(self.get(source)?.id);
        top.pc = Pc::True;
        Ok(top)
    }

    fn copy_subtree(&self, id: AssetId) -> NewAsset {
        let a = &self.assets[&id];
        NewAsset {
            name: a.name.clone(),
            kind: a.kind,
            version: a.version,
            pc: a.pc.clone(),
            content: a.content.clone(),
            feature_model: self.models.get(&id).cloned(),
            children: a.children.iter().map(|c| self.copy_subtree(*c)).collect(),
            origin: Some(id),
        }
    }

    /// Proper ancestors of `id` strictly below `ancestor`, top-down.
    pub(crate) fn chain_between(&self, ancestor: AssetId, id: AssetId) -> Result<Vec<AssetId>> {
        let not_ancestor = || Error::NotAnAncestor {
            asset: self.describe(id),
            ancestor: self.describe(ancestor),
        };
        if id == ancestor || !self.is_within(id, ancestor) {
            return Err(not_ancestor());
        }
        let mut chain = Vec::new();
        let mut cur = self.assets[&id].parent;
        while let Some(c) = cur {
            if c == ancestor {
                break;
            }
            chain.push(c);
            cur = self.assets[&c].parent;
        }
        chain.reverse();
        Ok(chain)
    }

    /// Tree slice: fresh copies of the path from `ancestor`'s child down to
    /// `asset`, each container holding exactly the next path element, the
    /// leaf being a deep clone of `asset`. Containers carry no payload.
    pub fn get_slice(&self, asset: AssetId, ancestor: AssetId) -> Result<NewAsset> {
        let chain = self.chain_between(ancestor, asset)?;
        let mut node = self.deep_clone(asset)?;
        for c in chain.into_iter().rev() {
            node = self.container_copy(c).with_child(node);
        }
        Ok(node)
    }

    pub(crate) fn container_copy(&self, id: AssetId) -> NewAsset {
        let a = &self.assets[&id];
        NewAsset {
            version: a.version,
            origin: Some(id),
            ..NewAsset::new(a.name.clone(), a.kind)
        }
    }

    // ---- invariants -----------------------------------------------------

    /// Verifies every structural invariant of the workspace.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let root = self.assets.get(&ROOT_ID).ok_or("missing root")?;
        if root.kind != AssetKind::VpRoot || root.parent.is_some() {
            return Err("root must be a parentless VpRoot".into());
        }
        let global = root.version;
        let reachable = self.subtree(ROOT_ID);
        if reachable.len() != self.assets.len() {
            return Err(format!(
                "{} assets reachable from the root, {} stored",
                reachable.len(),
                self.assets.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for id in &reachable {
            if !seen.insert(*id) {
                return Err(format!("asset #{id} reachable twice"));
            }
            let a = &self.assets[id];
            if a.id != *id {
                return Err(format!("asset #{id} stores id {}", a.id));
            }
            if *id != ROOT_ID && a.kind == AssetKind::VpRoot {
                return Err(format!("second VpRoot #{id}"));
            }
            if !is_valid_asset_name(&a.name) {
                return Err(format!("asset #{id} has invalid name {:?}", a.name));
            }
            if a.version > global {
                return Err(format!("asset #{id} version {} above global {global}", a.version));
            }
            if id.0 >= self.next_asset {
                return Err(format!("asset #{id} not below the id counter"));
            }
            let mut names = BTreeSet::new();
            for c in &a.children {
                let child = self.assets.get(c).ok_or_else(|| format!("dangling child #{c}"))?;
                if child.parent != Some(*id) {
                    return Err(format!("asset #{c} does not point back to parent #{id}"));
                }
                if !containable(child.kind, a.kind) {
                    return Err(format!("{} #{c} inside {} #{id}", child.kind, a.kind));
                }
                if !names.insert(child.name.as_str()) {
                    return Err(format!("duplicate sibling name {:?} under #{id}", child.name));
                }
            }
            let literals = a.pc.features();
            if !literals.is_empty() {
                let owner = self
                    .scope_owner(*id)
                    .ok_or_else(|| format!("asset #{id} mapped without a feature model"))?;
                for lit in literals {
                    if self.models[&owner].find(&lit).is_none() {
                        return Err(format!("asset #{id} maps unknown feature {lit:?}"));
                    }
                }
            }
        }
        let mut feature_ids = BTreeSet::new();
        for (owner, fm) in &self.models {
            if !self.assets.contains_key(owner) {
                return Err(format!("feature model owned by missing asset #{owner}"));
            }
            check_model(fm).map_err(|e| format!("model of #{owner}: {e}"))?;
            for f in fm.features() {
                if !feature_ids.insert(f.id) {
                    return Err(format!("feature id {} used twice", f.id));
                }
                if f.id.0 >= self.next_feature {
                    return Err(format!("feature #{} not below the id counter", f.id));
                }
            }
        }
        Ok(())
    }

    /// Text rendering of the whole state that ignores ids; equal renderings
    /// mean equal workspaces up to id assignment.
    pub fn canonical_snapshot(&self) -> String {
        let mut out = String::new();
        for id in self.subtree(ROOT_ID) {
            let a = &self.assets[&id];
            let _ = writeln!(
                out,
                "{}{} {} v{} [{}] {:?}",
                "  ".repeat(self.depth(id)),
                a.kind,
                a.name,
                a.version,
                a.pc,
                a.content
            );
            if let Some(fm) = self.models.get(&id) {
                for f in fm.descendants(fm.root()) {
                    let feat = fm.feature(f);
                    let _ = writeln!(
                        out,
                        "{}  * {} v{} opt={} inc={} {:?}",
                        "  ".repeat(self.depth(id) + fm.path_of(f).0.len()),
                        feat.name,
                        feat.version,
                        feat.optional,
                        feat.incomplete,
                        feat.group
                    );
                }
            }
        }
        for t in self.traces.asset_traces() {
            let _ = writeln!(
                out,
                "trace {} -> {} @{}",
                self.describe(t.source),
                self.describe(t.clone),
                t.version_at
            );
        }
        for t in self.traces.feature_traces() {
            let _ = writeln!(
                out,
                "ftrace {} -> {} @{}",
                self.feature_ref(t.source),
                self.feature_ref(t.clone),
                t.version_at
            );
        }
        out
    }
}

fn validate_detached(new: &NewAsset) -> Result<()> {
    if !is_valid_asset_name(&new.name) {
        return Err(Error::InvalidName(new.name.clone()));
    }
    if new.kind == AssetKind::VpRoot {
        return Err(Error::NotContainable {
            child: new.kind.to_string(),
            parent: "any asset".into(),
        });
    }
    let mut names = BTreeSet::new();
    for c in &new.children {
        if !containable(c.kind, new.kind) {
            return Err(Error::NotContainable {
                child: c.kind.to_string(),
                parent: new.kind.to_string(),
            });
        }
        if !names.insert(c.name.as_str()) {
            return Err(Error::DuplicateName {
                name: c.name.clone(),
                parent: new.name.clone(),
            });
        }
        validate_detached(c)?;
    }
    Ok(())
}

fn remap_model(fm: &mut FeatureModel, next: &mut u64) -> Vec<(FeatureId, FeatureId)> {
    let before: Vec<FeatureId> = fm.descendants(fm.root());
    fm.remap_ids(next);
    let after: Vec<FeatureId> = fm.descendants(fm.root());
    before.into_iter().zip(after).collect()
}

pub(crate) fn check_model(fm: &FeatureModel) -> std::result::Result<(), String> {
    let root = fm.get(fm.root()).ok_or("missing root feature")?;
    if root.parent.is_some() {
        return Err("root feature has a parent".into());
    }
    let un = fm.get(fm.unassigned()).ok_or("missing UNASSIGNED")?;
    if un.parent != Some(fm.root()) || un.name != crate::model::UNASSIGNED {
        return Err("UNASSIGNED must be a direct child of the root".into());
    }
    let reachable = fm.descendants(fm.root());
    if reachable.len() != fm.len() {
        return Err("unreachable features".into());
    }
    let mut names = BTreeSet::new();
    for id in reachable {
        let f = fm.feature(id);
        if !names.insert(f.name.as_str()) {
            return Err(format!("duplicate feature name {:?}", f.name));
        }
        if f.version > root.version {
            return Err(format!("feature {:?} version above model version", f.name));
        }
        if id != fm.root() && !crate::model::is_valid_feature_name(&f.name) {
            return Err(format!("invalid feature name {:?}", f.name));
        }
        for c in &f.children {
            match fm.get(*c) {
                Some(child) if child.parent == Some(id) => {}
                _ => return Err(format!("broken child link below {:?}", f.name)),
            }
        }
    }
    Ok(())
}
