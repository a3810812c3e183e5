//! Asset-oriented and feature-oriented operators.
//!
//! Every public operator is atomic: it either succeeds and appends exactly one
//! entry to the operator log, or fails and leaves the workspace untouched.
//! The `*_inner` helpers mutate without logging so operators can compose.

mod asset_ops;
mod feature_ops;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{AssetId, FeatureId};
use crate::trace::Trace;
use crate::workspace::Workspace;

/// Features touched per model during one operator; each model gets bumped
/// once when the operator completes.
#[derive(Debug, Default)]
pub(crate) struct ModelTouch(BTreeMap<AssetId, Vec<FeatureId>>);

impl ModelTouch {
    pub fn add(&mut self, owner: AssetId, feature: FeatureId) {
        self.0.entry(owner).or_default().push(feature);
    }

    pub fn commit(self, ws: &mut Workspace) {
        for (owner, features) in self.0 {
            if let Some(fm) = ws.models.get_mut(&owner) {
                fm.bump(&features);
            }
        }
    }
}

impl Workspace {
    /// Makes `name` exist in `owner`'s model, creating it under UNASSIGNED.
    pub(crate) fn ensure_feature(
        &mut self,
        owner: AssetId,
        name: &str,
        tm: &mut ModelTouch,
    ) -> Result<FeatureId> {
        let fm = &self.models[&owner];
        if let Some(id) = fm.find(name) {
            return Ok(id);
        }
        let bucket = fm.unassigned();
        let id = self.alloc_feature_id();
        self.models.get_mut(&owner).unwrap().insert(id, bucket, name)?;
        tm.add(owner, id);
        Ok(id)
    }

    /// Makes the features `names` of `src` scope available in the `dst` scope
    /// and returns the name each one carries there: the same name if the
    /// target model has it, the name of an existing feature clone, or a fresh
    /// clone under UNASSIGNED.
    pub(crate) fn carry_features(
        &mut self,
        src: Option<AssetId>,
        dst: Option<AssetId>,
        at: AssetId,
        names: &[String],
        tm: &mut ModelTouch,
    ) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        if names.is_empty() {
            return Ok(out);
        }
        let dst = dst.ok_or_else(|| Error::NoFeatureModelInScope(self.describe(at)))?;
        for name in names {
            if src == Some(dst) || self.models[&dst].find(name).is_some() {
                out.insert(name.clone(), name.clone());
                continue;
            }
            let source_feature = src.and_then(|s| {
                let fm = &self.models[&s];
                fm.find(name).map(|f| (f, fm.version()))
            });
            if let Some((sf, _)) = source_feature {
                let existing = self
                    .traces
                    .feature_relatives(sf)
                    .into_iter()
                    .find(|r| self.models[&dst].contains(*r));
                if let Some(r) = existing {
                    out.insert(name.clone(), self.models[&dst].feature(r).name.clone());
                    continue;
                }
            }
            let id = self.ensure_feature(dst, name, tm)?;
            if let Some((sf, version)) = source_feature {
                self.traces.add_feature_trace(sf, id, version)?;
            }
            out.insert(name.clone(), name.clone());
        }
        Ok(out)
    }

    /// Latest trace linking the pair, failing with `NoTrace`.
    pub(crate) fn asset_trace_or_err(&self, a: AssetId, b: AssetId) -> Result<Trace<AssetId>> {
        self.traces.latest_asset_trace(a, b).ok_or_else(|| Error::NoTrace {
            source_path: self.describe(a),
            target: self.describe(b),
        })
    }
}
