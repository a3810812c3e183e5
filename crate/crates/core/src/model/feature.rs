use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::is_valid_feature_name;

/// Name of the bucket receiving features introduced as a side effect of
/// asset cloning or mapping.
pub const UNASSIGNED: &str = "UNASSIGNED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FeatureId(pub u64);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Relationship between a feature's children.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum GroupKind {
    #[default]
    And,
    Or,
    Xor,
}

impl GroupKind {
    pub fn keyword(self) -> &'static str {
        match self {
            GroupKind::And => "and",
            GroupKind::Or => "or",
            GroupKind::Xor => "xor",
        }
    }

    pub fn from_keyword(s: &str) -> Option<GroupKind> {
        match s {
            "and" => Some(GroupKind::And),
            "or" => Some(GroupKind::Or),
            "xor" => Some(GroupKind::Xor),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub id: FeatureId,
    pub name: String,
    pub optional: bool,
    pub incomplete: bool,
    pub parent: Option<FeatureId>,
    pub children: Vec<FeatureId>,
    /// Group kind of this feature's children.
    pub group: GroupKind,
    pub version: u64,
}

/// Structure of a feature subtree without ids, versions or derived flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureShape {
    pub name: String,
    pub optional: bool,
    pub group: GroupKind,
    pub children: Vec<FeatureShape>,
}

/// A feature tree with a root feature and the `UNASSIGNED` bucket.
///
/// The model's global version is the root feature's version. Feature ids are
/// supplied by the caller so that ids stay unique across every model of a
/// workspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureModel {
    features: BTreeMap<FeatureId, Feature>,
    root: FeatureId,
    unassigned: FeatureId,
}

impl FeatureModel {
    /// A model holding only `root_name` and an empty `UNASSIGNED` bucket, at
    /// version 1.
    pub fn new(root_name: &str, root_id: FeatureId, unassigned_id: FeatureId) -> Result<Self> {
        if !is_valid_feature_name(root_name) || root_name == UNASSIGNED {
            return Err(Error::InvalidName(root_name.to_string()));
        }
        let mut features = BTreeMap::new();
        features.insert(
            root_id,
            Feature {
                id: root_id,
                name: root_name.to_string(),
                optional: false,
                incomplete: false,
                parent: None,
                children: vec![unassigned_id],
                group: GroupKind::And,
                version: 1,
            },
        );
        features.insert(
            unassigned_id,
            Feature {
                id: unassigned_id,
                name: UNASSIGNED.to_string(),
                optional: false,
                incomplete: false,
                parent: Some(root_id),
                children: Vec::new(),
                group: GroupKind::And,
                version: 1,
            },
        );
        Ok(FeatureModel {
            features,
            root: root_id,
            unassigned: unassigned_id,
        })
    }

    /// Rebuilds a model from stored features; used by the state loader.
    pub(crate) fn from_parts(
        features: BTreeMap<FeatureId, Feature>,
        root: FeatureId,
        unassigned: FeatureId,
    ) -> Self {
        FeatureModel {
            features,
            root,
            unassigned,
        }
    }

    pub fn root(&self) -> FeatureId {
        self.root
    }

    pub fn unassigned(&self) -> FeatureId {
        self.unassigned
    }

    pub fn version(&self) -> u64 {
        self.features[&self.root].version
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.features.contains_key(&id)
    }

    pub fn get(&self, id: FeatureId) -> Option<&Feature> {
        self.features.get(&id)
    }

    pub(crate) fn get_mut(&mut self, id: FeatureId) -> Option<&mut Feature> {
        self.features.get_mut(&id)
    }

    pub fn feature(&self, id: FeatureId) -> &Feature {
        &self.features[&id]
    }

    pub fn ids(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.features.keys().copied()
    }

    pub fn features(&self) -> impl Iterator<Item = &Feature> {
        self.features.values()
    }

    pub fn max_id(&self) -> u64 {
        self.features.keys().map(|id| id.0).max().unwrap_or(0)
    }

    pub fn find(&self, name: &str) -> Option<FeatureId> {
        self.features.values().find(|f| f.name == name).map(|f| f.id)
    }

    /// Resolves a root-inclusive path such as `BC/UNASSIGNED/DIV`.
    pub fn resolve(&self, path: &FeaturePath) -> Result<FeatureId> {
        let not_found = || Error::NotFound(path.to_string());
        let mut segs = path.0.iter();
        let first = segs.next().ok_or_else(not_found)?;
        if *first != self.feature(self.root).name {
            return Err(not_found());
        }
        let mut cur = self.root;
        for seg in segs {
            cur = self
                .feature(cur)
                .children
                .iter()
                .copied()
                .find(|c| self.feature(*c).name == *seg)
                .ok_or_else(not_found)?;
        }
        Ok(cur)
    }

    pub fn path_of(&self, id: FeatureId) -> FeaturePath {
        let mut segs = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let f = self.feature(c);
            segs.push(f.name.clone());
            cur = f.parent;
        }
        segs.reverse();
        FeaturePath(segs)
    }

    /// `id` and all features below it, pre-order.
    pub fn descendants(&self, id: FeatureId) -> Vec<FeatureId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.feature(c).children.iter().rev().copied());
        }
        out
    }

    /// Whether `id` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn is_within(&self, id: FeatureId, ancestor: FeatureId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.feature(c).parent;
        }
        false
    }

    pub fn is_within_unassigned(&self, id: FeatureId) -> bool {
        id != self.unassigned && self.is_within(id, self.unassigned)
    }

    /// Appends a new mandatory feature below `parent`.
    pub(crate) fn insert(&mut self, id: FeatureId, parent: FeatureId, name: &str) -> Result<()> {
        if !is_valid_feature_name(name) || name == UNASSIGNED {
            return Err(Error::InvalidName(name.to_string()));
        }
        if self.find(name).is_some() {
            return Err(Error::DuplicateFeatureName(name.to_string()));
        }
        if !self.contains(parent) {
            return Err(Error::NotFound(format!("feature {parent}")));
        }
        self.features.insert(
            id,
            Feature {
                id,
                name: name.to_string(),
                optional: false,
                incomplete: false,
                parent: Some(parent),
                children: Vec::new(),
                group: GroupKind::And,
                version: self.version(),
            },
        );
        self.features.get_mut(&parent).unwrap().children.push(id);
        Ok(())
    }

    /// Detaches and returns the subtree rooted at `id`.
    pub(crate) fn remove_subtree(&mut self, id: FeatureId) -> Vec<Feature> {
        let ids = self.descendants(id);
        if let Some(parent) = self.feature(id).parent {
            self.features.get_mut(&parent).unwrap().children.retain(|c| *c != id);
        }
        ids.iter().filter_map(|i| self.features.remove(i)).collect()
    }

    /// Removes a single feature, hoisting its children into its place.
    pub(crate) fn remove_hoisting(&mut self, id: FeatureId) -> Option<FeatureId> {
        let f = self.features.remove(&id)?;
        let parent = f.parent?;
        for c in &f.children {
            self.features.get_mut(c).unwrap().parent = Some(parent);
        }
        let siblings = &mut self.features.get_mut(&parent).unwrap().children;
        let pos = siblings.iter().position(|c| *c == id).unwrap();
        siblings.splice(pos..=pos, f.children.iter().copied());
        Some(parent)
    }

    pub(crate) fn reparent(&mut self, id: FeatureId, new_parent: FeatureId) {
        if let Some(old) = self.feature(id).parent {
            self.features.get_mut(&old).unwrap().children.retain(|c| *c != id);
        }
        self.features.get_mut(&new_parent).unwrap().children.push(id);
        self.features.get_mut(&id).unwrap().parent = Some(new_parent);
    }

    /// Increments the model version and stamps `touched` with it.
    pub fn bump(&mut self, touched: &[FeatureId]) -> u64 {
        let next = self.version() + 1;
        self.features.get_mut(&self.root).unwrap().version = next;
        for id in touched {
            if let Some(f) = self.features.get_mut(id) {
                f.version = next;
            }
        }
        next
    }

    /// True iff the feature or any feature below it changed after `since`.
    pub fn detect_changes(&self, id: FeatureId, since: u64) -> bool {
        self.descendants(id).into_iter().any(|d| self.feature(d).version > since)
    }

    /// Replaces every id using `next` as the allocator; keeps structure.
    pub(crate) fn remap_ids(&mut self, next: &mut u64) {
        let mut map = BTreeMap::new();
        for id in self.descendants(self.root) {
            map.insert(id, FeatureId(*next));
            *next += 1;
        }
        let old = std::mem::take(&mut self.features);
        for (id, mut f) in old {
            f.id = map[&id];
            f.parent = f.parent.map(|p| map[&p]);
            f.children = f.children.iter().map(|c| map[c]).collect();
            self.features.insert(f.id, f);
        }
        self.root = map[&self.root];
        self.unassigned = map[&self.unassigned];
    }

    pub fn shape(&self) -> FeatureShape {
        self.shape_of(self.root)
    }

    pub fn shape_of(&self, id: FeatureId) -> FeatureShape {
        let f = self.feature(id);
        FeatureShape {
            name: f.name.clone(),
            optional: f.optional,
            group: f.group,
            children: f.children.iter().map(|c| self.shape_of(*c)).collect(),
        }
    }
}

/// Feature names from the model root downward, e.g. `BC/DIV`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FeaturePath(pub Vec<String>);

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl FromStr for FeaturePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(FeaturePath(
            s.split('/').filter(|seg| !seg.is_empty()).map(str::to_string).collect(),
        ))
    }
}

impl From<&str> for FeaturePath {
    fn from(s: &str) -> Self {
        s.parse().expect("feature path parsing is infallible")
    }
}
