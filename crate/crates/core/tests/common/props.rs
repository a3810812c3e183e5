//! Property bodies shared by the property tests and the acceptance harness.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use vplat_core::model::containable;
use vplat_core::{AssetId, FeatureId, Workspace};

use super::gen::{self, Op};

type Prop = Result<(), TestCaseError>;

fn pick<T: Copy>(items: &[T], i: usize) -> Option<T> {
    (!items.is_empty()).then(|| items[i % items.len()])
}

/// Every operator keeps the workspace well-formed; refused operators leave
/// it untouched.
pub fn tree_invariants(ops: &[Op]) -> Prop {
    let mut ws = gen::base();
    for op in ops {
        let before = ws.clone();
        match gen::apply(&mut ws, op) {
            Some(Err(e)) => prop_assert_eq!(&ws, &before, "{:?} failed with {} but changed state", op, e.name()),
            _ => {
                if let Err(msg) = ws.check_invariants() {
                    return Err(TestCaseError::fail(format!("{op:?}: {msg}")));
                }
            }
        }
    }
    Ok(())
}

/// The global version never decreases, each logged operator records the
/// version it produced, and every pre-existing asset that an operator
/// changed (name, content, mapping or children) carries a version issued by
/// that operator. Composite operators (move) issue more than one.
pub fn version_audit(ops: &[Op]) -> Prop {
    let mut ws = gen::base();
    for op in ops {
        let before = ws.clone();
        let Some(Ok(())) = gen::apply(&mut ws, op) else { continue };
        let global = ws.global_version();
        prop_assert!(global >= before.global_version());
        let new_entries = ws.log().len() - before.log().len();
        prop_assert!(new_entries <= 1, "{:?} logged {} entries", op, new_entries);
        if new_entries == 1 {
            prop_assert_eq!(ws.log().last().unwrap().result_version, global);
        } else {
            prop_assert_eq!(&ws, &before, "{:?} changed state without a log entry", op);
        }
        for (owner, fm) in before.feature_models() {
            if let Some(after) = ws.feature_model(owner) {
                prop_assert!(after.version() >= fm.version(), "model of {} went back", owner);
            }
        }
        for old in before.assets() {
            let Some(new) = ws.asset(old.id) else { continue };
            prop_assert!(new.version >= old.version, "{:?}: #{} went back", op, old.id);
            let changed = new.name != old.name
                || new.content != old.content
                || new.pc != old.pc
                || new.children != old.children;
            let issued = new.version > before.global_version();
            if changed {
                prop_assert!(issued, "{:?}: #{} changed but not stamped", op, old.id);
            } else {
                prop_assert!(new.version == old.version || issued);
            }
        }
        for new in ws.assets() {
            prop_assert!(new.version <= global);
        }
    }
    Ok(())
}

/// Traces are append-only with increasing sequence numbers, never link an
/// entity to itself, and a clone adds exactly one trace per copied asset,
/// stamped with the original's version.
pub fn trace_accounting(ops: &[Op], asset: usize, target: usize) -> Prop {
    let mut ws = gen::base();
    let check = |before: &Workspace, after: &Workspace| -> Prop {
        let (a0, a1) = (before.traces().asset_traces(), after.traces().asset_traces());
        let (f0, f1) = (before.traces().feature_traces(), after.traces().feature_traces());
        prop_assert_eq!(&a1[..a0.len()], a0);
        prop_assert_eq!(&f1[..f0.len()], f0);
        let mut seqs: Vec<u64> = a1.iter().map(|t| t.seq).chain(f1.iter().map(|t| t.seq)).collect();
        let n = seqs.len();
        seqs.sort();
        seqs.dedup();
        prop_assert_eq!(seqs.len(), n);
        prop_assert!(a1.iter().all(|t| t.source != t.clone));
        prop_assert!(f1.iter().all(|t| t.source != t.clone));
        Ok(())
    };
    for op in ops {
        let before = ws.clone();
        let _ = gen::apply(&mut ws, op);
        check(&before, &ws)?;
    }

    let candidates: Vec<AssetId> = gen::asset_ids(&ws).into_iter().filter(|a| *a != ws.root_id()).collect();
    if candidates.is_empty() {
        return Ok(());
    }
    let source = candidates[asset % candidates.len()];
    let kind = ws.get(source).unwrap().kind;
    let targets: Vec<AssetId> = ws.assets().filter(|a| containable(kind, a.kind)).map(|a| a.id).collect();
    let target = targets[target % targets.len()];
    let before = ws.clone();
    let Ok(copy) = ws.clone_asset(source, target) else {
        prop_assert_eq!(&ws, &before);
        return Ok(());
    };
    check(&before, &ws)?;
    let originals = before.subtree(source);
    let copies = ws.subtree(copy);
    prop_assert_eq!(originals.len(), copies.len());
    let fresh = &ws.traces().asset_traces()[before.traces().asset_traces().len()..];
    prop_assert_eq!(fresh.len(), originals.len());
    for (t, (o, c)) in fresh.iter().zip(originals.iter().zip(&copies)) {
        prop_assert_eq!((t.source, t.clone), (*o, *c));
        let version = before.get(*o).unwrap().version;
        prop_assert_eq!(t.version_at, version);
        prop_assert_eq!(ws.get(*c).unwrap().version, version);
    }
    prop_assert_eq!(ws.get(target).unwrap().version, ws.global_version());
    Ok(())
}

/// `move` of an asset behaves like `clone` followed by `remove` of the
/// original, up to ids and the log.
pub fn move_asset_is_clone_remove(ops: &[Op], asset: usize, target: usize) -> Prop {
    let ws = gen::run(ops);
    let candidates: Vec<AssetId> = gen::asset_ids(&ws).into_iter().filter(|a| *a != ws.root_id()).collect();
    let Some(source) = pick(&candidates, asset) else { return Ok(()) };
    let kind = ws.get(source).unwrap().kind;
    let targets: Vec<AssetId> = ws
        .assets()
        .filter(|a| containable(kind, a.kind) && !ws.is_within(a.id, source))
        .map(|a| a.id)
        .collect();
    let Some(target) = targets.get(target % targets.len().max(1)).copied() else { return Ok(()) };

    let mut moved = ws.clone();
    let r1 = moved.move_asset(source, target);
    let mut composed = ws.clone();
    let r2 = composed.clone_asset(source, target).and_then(|_| composed.remove_asset(source));
    match (r1, r2) {
        (Ok(_), Ok(())) => prop_assert_eq!(moved.canonical_snapshot(), composed.canonical_snapshot()),
        (Err(_), Err(_)) => prop_assert_eq!(&moved, &ws),
        (a, b) => return Err(TestCaseError::fail(format!("move {a:?} vs clone;remove {b:?}"))),
    }
    Ok(())
}

/// Moving a feature into another model behaves like cloning it there and
/// removing the original.
pub fn move_feature_is_clone_remove(ops: &[Op], feature: usize, target: usize) -> Prop {
    let ws = gen::run(ops);
    let features = gen::feature_ids(&ws);
    let Some(f) = pick(&features, feature) else { return Ok(()) };
    let home = ws.feature_owner(f);
    let targets: Vec<FeatureId> = features.iter().copied().filter(|t| ws.feature_owner(*t) != home).collect();
    let Some(t) = targets.get(target % targets.len().max(1)).copied() else { return Ok(()) };

    let mut moved = ws.clone();
    let r1 = moved.move_feature(f, t);
    let mut composed = ws.clone();
    let r2 = composed.clone_feature(f, t).and_then(|_| composed.remove_feature(f));
    match (r1, r2) {
        (Ok(_), Ok(())) => prop_assert_eq!(moved.canonical_snapshot(), composed.canonical_snapshot()),
        (Err(_), Err(_)) => prop_assert_eq!(&moved, &ws),
        (a, b) => return Err(TestCaseError::fail(format!("move {a:?} vs clone;remove {b:?}"))),
    }
    Ok(())
}

/// A propagation that went through leaves nothing left to propagate: a
/// second attempt reports no change and does not touch the workspace.
pub fn propagation_idempotent(ops: &[Op], trace: usize, feature_trace: usize) -> Prop {
    let mut ws = gen::run(ops);
    let asset_traces = ws.traces().asset_traces().to_vec();
    if !asset_traces.is_empty() {
        let t = asset_traces[trace % asset_traces.len()];
        if ws.propagate_asset(t.source, t.clone).is_ok() {
            let settled = ws.clone();
            prop_assert_eq!(ws.propagate_asset(t.source, t.clone), Ok(false));
            prop_assert_eq!(&ws, &settled);
        }
    }
    let feature_traces = ws.traces().feature_traces().to_vec();
    if !feature_traces.is_empty() {
        let t = feature_traces[feature_trace % feature_traces.len()];
        if ws.propagate_feature(t.source, t.clone).is_ok() {
            let settled = ws.clone();
            prop_assert_eq!(ws.propagate_feature(t.source, t.clone), Ok(false));
            prop_assert_eq!(&ws, &settled);
        }
    }
    Ok(())
}

/// (scope owner, feature name) pairs mapped by the given assets.
fn mappings(ws: &Workspace, assets: impl Iterator<Item = AssetId>) -> BTreeSet<(AssetId, String)> {
    let mut out = BTreeSet::new();
    for a in assets {
        if let Some(owner) = ws.scope_owner(a) {
            for n in ws.get(a).unwrap().pc.features() {
                out.insert((owner, n));
            }
        }
    }
    out
}

/// Removing an asset removes exactly the features that lose their last
/// mapping; removing a feature removes exactly the assets mapped to nothing
/// else and unmaps the rest.
pub fn cascades(ops: &[Op], asset: usize, feature: usize) -> Prop {
    let ws = gen::run(ops);

    let candidates: Vec<AssetId> = gen::asset_ids(&ws).into_iter().filter(|a| *a != ws.root_id()).collect();
    let Some(victim) = pick(&candidates, asset) else { return Ok(()) };
    let gone: BTreeSet<AssetId> = ws.subtree(victim).into_iter().collect();
    let all = gen::asset_ids(&ws);
    let removed = mappings(&ws, gone.iter().copied().filter(|a| !gone.contains(&ws.scope_owner(*a).unwrap_or(*a))));
    let kept = mappings(&ws, all.iter().copied().filter(|a| !gone.contains(a)));
    let mut after = ws.clone();
    after.remove_asset(victim).unwrap();
    for (owner, name) in &kept {
        let fm = after.feature_model(*owner).unwrap();
        prop_assert!(fm.find(name).is_some(), "{} lost although still mapped", name);
    }
    for (owner, name) in removed.difference(&kept) {
        let fm = after.feature_model(*owner).unwrap();
        if let Some(id) = fm.find(name) {
            prop_assert!(id == fm.root() || id == fm.unassigned(), "{} outlived its last mapping", name);
        }
    }

    let features = gen::feature_ids(&ws);
    let Some(f) = pick(&features, feature) else { return Ok(()) };
    let owner = ws.feature_owner(f).unwrap();
    let fm = ws.feature_model(owner).unwrap();
    let mut after = ws.clone();
    if let Err(e) = after.remove_feature(f) {
        prop_assert!(f == fm.root() || f == fm.unassigned(), "{}", e);
        prop_assert_eq!(&after, &ws);
        return Ok(());
    }
    let names: BTreeSet<String> = fm.descendants(f).into_iter().map(|d| fm.feature(d).name.clone()).collect();
    let in_scope: Vec<AssetId> =
        ws.subtree(owner).into_iter().filter(|a| *a != owner && ws.scope_owner(*a) == Some(owner)).collect();
    let mut expect_gone = BTreeSet::new();
    for a in &in_scope {
        let lits = ws.get(*a).unwrap().pc.features();
        if !lits.is_empty() && lits.iter().all(|l| names.contains(l)) {
            expect_gone.extend(ws.subtree(*a));
        }
    }
    for a in &in_scope {
        match after.asset(*a) {
            None => prop_assert!(expect_gone.contains(a), "#{} removed although mapped elsewhere", a),
            Some(asset) => {
                prop_assert!(!expect_gone.contains(a), "#{} survived", a);
                for n in &names {
                    prop_assert!(!asset.pc.mentions(n), "#{} still mentions {}", a, n);
                }
            }
        }
    }
    let remaining = after.feature_model(owner).unwrap();
    for n in &names {
        prop_assert!(remaining.find(n).is_none());
    }
    Ok(())
}
