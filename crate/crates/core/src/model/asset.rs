use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::FeatureModel;
use crate::pc::Pc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssetId(pub u64);

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AssetKind {
    VpRoot,
    Repository,
    Folder,
    File,
    Class,
    Method,
    Block,
}

impl AssetKind {
    pub const ALL: [AssetKind; 7] = [
        AssetKind::VpRoot,
        AssetKind::Repository,
        AssetKind::Folder,
        AssetKind::File,
        AssetKind::Class,
        AssetKind::Method,
        AssetKind::Block,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::VpRoot => "VpRoot",
            AssetKind::Repository => "Repository",
            AssetKind::Folder => "Folder",
            AssetKind::File => "File",
            AssetKind::Class => "Class",
            AssetKind::Method => "Method",
            AssetKind::Block => "Block",
        }
    }
}

impl fmt::Display for AssetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AssetKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidName(s.to_string()))
    }
}

/// Fixed containment order over asset types.
pub fn containable(child: AssetKind, parent: AssetKind) -> bool {
    use AssetKind::*;
    matches!(
        (child, parent),
        (Repository, VpRoot)
            | (Folder | File, Repository)
            | (Folder | File, Folder)
            | (Class | Method | Block, File)
            | (Class | Method | Block, Class)
            | (Block, Method)
            | (Block, Block)
    )
}

/// A node of the asset tree as stored in a workspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Asset {
    pub id: AssetId,
    pub name: String,
    pub kind: AssetKind,
    pub version: u64,
    pub parent: Option<AssetId>,
    pub children: Vec<AssetId>,
    pub pc: Pc,
    pub content: Option<String>,
    /// History step during which the asset entered the tree.
    pub created_step: u64,
}

/// An asset subtree that is not (yet) part of a workspace.
///
/// Detached assets have no id; ids are handed out on insertion. `version` is
/// 0 for freshly authored assets and carries the original's version for
/// copies, whose `origin` names the asset they were copied from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewAsset {
    pub name: String,
    pub kind: AssetKind,
    pub version: u64,
    pub pc: Pc,
    pub content: Option<String>,
    pub feature_model: Option<FeatureModel>,
    pub children: Vec<NewAsset>,
    pub origin: Option<AssetId>,
}

impl NewAsset {
    pub fn new(name: impl Into<String>, kind: AssetKind) -> Self {
        NewAsset {
            name: name.into(),
            kind,
            version: 0,
            pc: Pc::True,
            content: None,
            feature_model: None,
            children: Vec::new(),
            origin: None,
        }
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }

    pub fn with_pc(mut self, pc: Pc) -> Self {
        self.pc = pc;
        self
    }

    pub fn with_child(mut self, child: NewAsset) -> Self {
        self.children.push(child);
        self
    }

    pub fn with_feature_model(mut self, fm: FeatureModel) -> Self {
        self.feature_model = Some(fm);
        self
    }

    /// Number of nodes in the subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(NewAsset::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(NewAsset::depth).max().unwrap_or(0)
    }

    pub fn walk(&self, f: &mut dyn FnMut(&NewAsset)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

/// `/`-separated asset names starting below the root, e.g.
/// `BC/src/Operators.js/divide`. The empty path denotes the root.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AssetPath(pub Vec<String>);

impl AssetPath {
    pub fn root() -> Self {
        AssetPath(Vec::new())
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self, name: &str) -> AssetPath {
        let mut segs = self.0.clone();
        segs.push(name.to_string());
        AssetPath(segs)
    }

    pub fn parent(&self) -> Option<AssetPath> {
        if self.0.is_empty() {
            None
        } else {
            Some(AssetPath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn file_name(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }
}

impl fmt::Display for AssetPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("/")
        } else {
            f.write_str(&self.0.join("/"))
        }
    }
}

impl FromStr for AssetPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(AssetPath(
            s.split('/').filter(|seg| !seg.is_empty()).map(str::to_string).collect(),
        ))
    }
}

impl From<&str> for AssetPath {
    fn from(s: &str) -> Self {
        s.parse().expect("asset path parsing is infallible")
    }
}
