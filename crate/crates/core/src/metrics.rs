//! Cost-benefit accounting over an operator log.
//!
//! Invoking a feature-oriented operator costs a few seconds; in exchange,
//! every non-late feature clone or propagation saves locating the feature's
//! code, and every propagation also saves re-applying a change by hand.
//! A late mapping (an annotation the developer forgot and had to add later)
//! costs a multiple of an invocation on top of the invocation itself.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oplog::{OperatorApplication, OperatorKind};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UsageCounts {
    pub per_operator: BTreeMap<String, u64>,
    /// Feature-oriented invocations in total.
    pub feature_ops: u64,
    /// Mappings recorded after the mapped asset existed.
    pub late: u64,
    /// Feature clones/propagations whose locations were known up front.
    pub saved_loc: u64,
    /// Propagations, each replacing a manual re-clone.
    pub saved_clone: u64,
}

impl UsageCounts {
    pub fn new(feature_ops: u64, late: u64, saved_loc: u64, saved_clone: u64) -> Self {
        UsageCounts { per_operator: BTreeMap::new(), feature_ops, late, saved_loc, saved_clone }
    }
}

pub fn tally(log: &[OperatorApplication]) -> UsageCounts {
    let mut c = UsageCounts::default();
    for op in log {
        *c.per_operator.entry(op.operator.to_string()).or_default() += 1;
        if op.operator.is_feature_oriented() {
            c.feature_ops += 1;
        }
        match op.operator {
            OperatorKind::MapAssetToFeature if op.late => c.late += 1,
            OperatorKind::CloneFeature if !op.late => c.saved_loc += 1,
            OperatorKind::PropagateFeature => {
                c.saved_clone += 1;
                if !op.late {
                    c.saved_loc += 1;
                }
            }
            _ => {}
        }
    }
    c
}

/// Seconds spent on the manual activities an operator may save or cause.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostModel {
    /// Locating a feature's assets by hand.
    pub locate: f64,
    /// Cloning a change into a variant by hand.
    pub clone: f64,
    /// Surcharge of a late mapping, as a multiple of the invocation cost.
    pub miss_factor: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { locate: 900.0, clone: 900.0, miss_factor: 10.0 }
    }
}

impl CostModel {
    /// Total seconds saved, net of invocation costs, when each
    /// feature-oriented operator costs `per_invocation` seconds.
    pub fn total_benefit(&self, c: &UsageCounts, per_invocation: f64) -> f64 {
        self.savings(c) - self.cost_miss(c, per_invocation) - self.cost_feat(c, per_invocation)
    }

    pub fn savings(&self, c: &UsageCounts) -> f64 {
        c.saved_loc as f64 * self.locate + c.saved_clone as f64 * self.clone
    }

    pub fn cost_miss(&self, c: &UsageCounts, per_invocation: f64) -> f64 {
        c.late as f64 * self.miss_factor * per_invocation
    }

    pub fn cost_feat(&self, c: &UsageCounts, per_invocation: f64) -> f64 {
        c.feature_ops as f64 * per_invocation
    }

    /// Invocation cost at which the platform stops paying off.
    pub fn break_even(&self, c: &UsageCounts) -> Result<f64> {
        if c.feature_ops == 0 {
            return Err(Error::NoFeatureOps);
        }
        let weight = c.feature_ops as f64 + c.late as f64 * self.miss_factor;
        Ok(self.savings(c) / weight)
    }
}
