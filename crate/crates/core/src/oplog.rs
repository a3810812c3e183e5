//! The operator application log.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OperatorKind {
    AddAsset,
    ChangeAsset,
    RemoveAsset,
    MoveAsset,
    MapAssetToFeature,
    CloneAsset,
    PropagateAsset,
    AddFeature,
    AddFeatureModelToAsset,
    RemoveFeature,
    MoveFeature,
    MakeFeatureOptional,
    RenameFeature,
    CloneFeature,
    PropagateFeature,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 15] = [
        OperatorKind::AddAsset,
        OperatorKind::ChangeAsset,
        OperatorKind::RemoveAsset,
        OperatorKind::MoveAsset,
        OperatorKind::MapAssetToFeature,
        OperatorKind::CloneAsset,
        OperatorKind::PropagateAsset,
        OperatorKind::AddFeature,
        OperatorKind::AddFeatureModelToAsset,
        OperatorKind::RemoveFeature,
        OperatorKind::MoveFeature,
        OperatorKind::MakeFeatureOptional,
        OperatorKind::RenameFeature,
        OperatorKind::CloneFeature,
        OperatorKind::PropagateFeature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::AddAsset => "AddAsset",
            OperatorKind::ChangeAsset => "ChangeAsset",
            OperatorKind::RemoveAsset => "RemoveAsset",
            OperatorKind::MoveAsset => "MoveAsset",
            OperatorKind::MapAssetToFeature => "MapAssetToFeature",
            OperatorKind::CloneAsset => "CloneAsset",
            OperatorKind::PropagateAsset => "PropagateAsset",
            OperatorKind::AddFeature => "AddFeature",
            OperatorKind::AddFeatureModelToAsset => "AddFeatureModelToAsset",
            OperatorKind::RemoveFeature => "RemoveFeature",
            OperatorKind::MoveFeature => "MoveFeature",
            OperatorKind::MakeFeatureOptional => "MakeFeatureOptional",
            OperatorKind::RenameFeature => "RenameFeature",
            OperatorKind::CloneFeature => "CloneFeature",
            OperatorKind::PropagateFeature => "PropagateFeature",
        }
    }

    /// Operators that carry a cost for the developer; the asset-oriented
    /// ones mirror what an IDE or version control already does.
    pub fn is_feature_oriented(self) -> bool {
        matches!(
            self,
            OperatorKind::MapAssetToFeature
                | OperatorKind::AddFeature
                | OperatorKind::AddFeatureModelToAsset
                | OperatorKind::RemoveFeature
                | OperatorKind::MoveFeature
                | OperatorKind::MakeFeatureOptional
                | OperatorKind::RenameFeature
                | OperatorKind::CloneFeature
                | OperatorKind::PropagateFeature
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidName(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperatorApplication {
    pub seq: u64,
    pub step: u64,
    pub operator: OperatorKind,
    pub args: Vec<String>,
    pub result_version: u64,
    /// Inferred by reconciliation or replay rather than invoked by a user.
    pub derived: bool,
    /// A mapping recorded after the asset's creation step, or a feature
    /// clone/propagation that needed such a mapping to be fixed.
    pub late: bool,
}
