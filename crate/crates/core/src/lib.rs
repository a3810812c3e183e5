//! Core of the virtual platform: an asset tree with presence conditions,
//! feature models attached to assets, clone traces between assets and
//! features, and the operators that keep them consistent.

pub mod error;
pub mod metrics;
mod ops;
pub mod model;
pub mod oplog;
pub mod parse;
pub mod pc;
pub mod replay;
pub mod sync;
pub mod trace;
pub mod workspace;

pub use error::{Error, Result};
pub use model::{
    Asset, AssetId, AssetKind, AssetPath, Feature, FeatureId, FeatureModel, FeaturePath,
    GroupKind, NewAsset, UNASSIGNED,
};
pub use oplog::{OperatorApplication, OperatorKind};
pub use metrics::{tally, CostModel, UsageCounts};
pub use pc::Pc;
pub use replay::{CloneLogEntry, History, HistoryStep};
pub use sync::{scan, ChangeSet, Snapshot, SyncReport};
pub use trace::TraceDatabase;
pub use workspace::{Layout, Workspace};
