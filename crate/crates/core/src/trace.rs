//! Clone provenance: append-only asset and feature trace tables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AssetId, FeatureId};

/// A `(source, clone, versionAt)` triplet with its insertion sequence number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Trace<Id> {
    pub seq: u64,
    pub source: Id,
    pub clone: Id,
    pub version_at: u64,
}

pub type AssetTrace = Trace<AssetId>;
pub type FeatureTrace = Trace<FeatureId>;

impl<Id: Copy + PartialEq> Trace<Id> {
    pub fn links(&self, a: Id, b: Id) -> bool {
        (self.source == a && self.clone == b) || (self.source == b && self.clone == a)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceDatabase {
    assets: Vec<AssetTrace>,
    features: Vec<FeatureTrace>,
    next_seq: u64,
}

impl TraceDatabase {
    pub fn new() -> Self {
        TraceDatabase {
            assets: Vec::new(),
            features: Vec::new(),
            next_seq: 1,
        }
    }

    pub(crate) fn from_parts(
        assets: Vec<AssetTrace>,
        features: Vec<FeatureTrace>,
        next_seq: u64,
    ) -> Self {
        TraceDatabase {
            assets,
            features,
            next_seq,
        }
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn asset_traces(&self) -> &[AssetTrace] {
        &self.assets
    }

    pub fn feature_traces(&self) -> &[FeatureTrace] {
        &self.features
    }

    fn take_seq(&mut self) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        seq
    }

    pub fn add_asset_trace(
        &mut self,
        source: AssetId,
        clone: AssetId,
        version_at: u64,
    ) -> Result<AssetTrace> {
        if source == clone {
            return Err(Error::SelfTrace);
        }
        let trace = Trace {
            seq: self.take_seq(),
            source,
            clone,
            version_at,
        };
        self.assets.push(trace);
        Ok(trace)
    }

    pub fn add_feature_trace(
        &mut self,
        source: FeatureId,
        clone: FeatureId,
        version_at: u64,
    ) -> Result<FeatureTrace> {
        if source == clone {
            return Err(Error::SelfTrace);
        }
        let trace = Trace {
            seq: self.take_seq(),
            source,
            clone,
            version_at,
        };
        self.features.push(trace);
        Ok(trace)
    }

    /// Highest-seq trace linking the pair in either direction.
    pub fn latest_asset_trace(&self, a: AssetId, b: AssetId) -> Option<AssetTrace> {
        latest(&self.assets, a, b)
    }

    pub fn latest_feature_trace(&self, a: FeatureId, b: FeatureId) -> Option<FeatureTrace> {
        latest(&self.features, a, b)
    }

    pub fn is_asset_clone(&self, a: AssetId, b: AssetId) -> bool {
        self.assets.iter().any(|t| t.links(a, b))
    }

    pub fn is_feature_clone(&self, a: FeatureId, b: FeatureId) -> bool {
        self.features.iter().any(|t| t.links(a, b))
    }

    /// Direct clones of `source`, in trace order, without duplicates.
    pub fn asset_clones(&self, source: AssetId) -> Vec<AssetId> {
        direct_clones(&self.assets, source)
    }

    pub fn feature_clones(&self, source: FeatureId) -> Vec<FeatureId> {
        direct_clones(&self.features, source)
    }

    /// Every asset linked to `id` by some trace, in either direction.
    pub fn asset_relatives(&self, id: AssetId) -> Vec<AssetId> {
        relatives(&self.assets, id)
    }

    pub fn feature_relatives(&self, id: FeatureId) -> Vec<FeatureId> {
        relatives(&self.features, id)
    }

    /// Latest trace whose clone side is `clone`.
    pub fn asset_origin(&self, clone: AssetId) -> Option<AssetTrace> {
        self.assets.iter().rev().find(|t| t.clone == clone).copied()
    }

    pub fn feature_origin(&self, clone: FeatureId) -> Option<FeatureTrace> {
        self.features.iter().rev().find(|t| t.clone == clone).copied()
    }
}

fn latest<Id: Copy + PartialEq>(traces: &[Trace<Id>], a: Id, b: Id) -> Option<Trace<Id>> {
    traces.iter().rev().find(|t| t.links(a, b)).copied()
}

fn direct_clones<Id: Copy + PartialEq>(traces: &[Trace<Id>], source: Id) -> Vec<Id> {
    let mut out = Vec::new();
    for t in traces.iter().filter(|t| t.source == source) {
        if !out.contains(&t.clone) {
            out.push(t.clone);
        }
    }
    out
}

fn relatives<Id: Copy + PartialEq>(traces: &[Trace<Id>], id: Id) -> Vec<Id> {
    let mut out = Vec::new();
    for t in traces {
        let other = if t.source == id {
            t.clone
        } else if t.clone == id {
            t.source
        } else {
            continue;
        };
        if !out.contains(&other) {
            out.push(other);
        }
    }
    out
}
