//! Random operator sequences over a small two-repository workspace.
//!
//! Operations pick their operands by index into the current asset and
//! feature lists, so any generated sequence can run against any state.

use proptest::prelude::*;

use vplat_core::model::{containable, AssetKind, NewAsset};
use vplat_core::{AssetId, FeatureId, Pc, Result, Workspace};

use super::model;

pub const FEATURES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
const NAMES: [&str; 6] = ["n0", "n1", "n2", "n3", "n4", "n5"];
const KINDS: [AssetKind; 5] =
    [AssetKind::Folder, AssetKind::File, AssetKind::Class, AssetKind::Method, AssetKind::Block];

#[derive(Clone, Debug)]
pub enum Op {
    AddAsset { parent: usize, kind: usize, name: usize, feature: Option<usize> },
    ChangeAsset { asset: usize, content: usize },
    RenameAsset { asset: usize, name: usize },
    RemoveAsset { asset: usize },
    MoveAsset { asset: usize, target: usize },
    Map { asset: usize, feature: usize },
    CloneAsset { asset: usize, target: usize },
    PropagateAsset { trace: usize },
    AddFeature { name: usize, parent: usize },
    RemoveFeature { feature: usize },
    MoveFeature { feature: usize, parent: usize },
    MakeOptional { feature: usize },
    RenameFeature { feature: usize, name: usize },
    CloneFeature { feature: usize, target: usize },
    PropagateFeature { trace: usize },
}

pub fn op() -> impl Strategy<Value = Op> {
    let i = || 0usize..64;
    prop_oneof![
        3 => (i(), 0..KINDS.len(), 0..NAMES.len(), proptest::option::of(0..FEATURES.len()))
            .prop_map(|(parent, kind, name, feature)| Op::AddAsset { parent, kind, name, feature }),
        2 => (i(), 0usize..4).prop_map(|(asset, content)| Op::ChangeAsset { asset, content }),
        1 => (i(), 0..NAMES.len()).prop_map(|(asset, name)| Op::RenameAsset { asset, name }),
        1 => i().prop_map(|asset| Op::RemoveAsset { asset }),
        1 => (i(), i()).prop_map(|(asset, target)| Op::MoveAsset { asset, target }),
        2 => (i(), 0..FEATURES.len()).prop_map(|(asset, feature)| Op::Map { asset, feature }),
        2 => (i(), i()).prop_map(|(asset, target)| Op::CloneAsset { asset, target }),
        2 => i().prop_map(|trace| Op::PropagateAsset { trace }),
        1 => (0..FEATURES.len(), i()).prop_map(|(name, parent)| Op::AddFeature { name, parent }),
        1 => i().prop_map(|feature| Op::RemoveFeature { feature }),
        1 => (i(), i()).prop_map(|(feature, parent)| Op::MoveFeature { feature, parent }),
        1 => i().prop_map(|feature| Op::MakeOptional { feature }),
        1 => (i(), 0..FEATURES.len()).prop_map(|(feature, name)| Op::RenameFeature { feature, name }),
        2 => (i(), i()).prop_map(|(feature, target)| Op::CloneFeature { feature, target }),
        2 => i().prop_map(|trace| Op::PropagateFeature { trace }),
    ]
}

pub fn ops(max: usize) -> impl Strategy<Value = Vec<Op>> {
    proptest::collection::vec(op(), 0..max)
}

/// Two repositories `R1`, `R2`, each with a feature model, a folder, a file
/// and a few mapped methods.
pub fn base() -> Workspace {
    let mut ws = Workspace::new();
    let root = ws.root_id();
    for (repo, fm) in [("R1", "R1\n\tA\n\tB\n\t\tC\n"), ("R2", "R2\n\tD\n\tE\n")] {
        let id = ws
            .add_asset(
                NewAsset::new(repo, AssetKind::Repository).with_child(
                    NewAsset::new("src", AssetKind::Folder)
                        .with_child(NewAsset::new("main.js", AssetKind::File).with_content("main")),
                ),
                root,
            )
            .unwrap();
        ws.add_feature_model_to_asset(id, model(fm)).unwrap();
    }
    let file = ws.resolve_str("R1/src/main.js").unwrap();
    for (name, f) in [("m0", "A"), ("m1", "B"), ("m2", "C")] {
        let m = NewAsset::new(name, AssetKind::Method).with_content(name).with_pc(Pc::feature(f));
        ws.add_asset(m, file).unwrap();
    }
    let file = ws.resolve_str("R2/src/main.js").unwrap();
    ws.add_asset(NewAsset::new("k0", AssetKind::Method).with_pc(Pc::feature("D")), file).unwrap();
    ws
}

pub fn asset_ids(ws: &Workspace) -> Vec<AssetId> {
    ws.assets().map(|a| a.id).collect()
}

pub fn feature_ids(ws: &Workspace) -> Vec<FeatureId> {
    ws.feature_models().flat_map(|(_, fm)| fm.ids().collect::<Vec<_>>()).collect()
}

fn pick<T: Copy>(items: &[T], i: usize) -> Option<T> {
    (!items.is_empty()).then(|| items[i % items.len()])
}

/// Runs one operation; `None` means no operand fitted, `Some(Err)` that the
/// operator refused.
pub fn apply(ws: &mut Workspace, op: &Op) -> Option<Result<()>> {
    let assets = asset_ids(ws);
    let non_root: Vec<AssetId> = assets.iter().copied().filter(|a| *a != ws.root_id()).collect();
    let features = feature_ids(ws);
    let containers = |ws: &Workspace, kind: AssetKind| -> Vec<AssetId> {
        ws.assets().filter(|a| containable(kind, a.kind)).map(|a| a.id).collect()
    };
    Some(match *op {
        Op::AddAsset { parent, kind, name, feature } => {
            let kind = KINDS[kind];
            let parent = pick(&containers(ws, kind), parent)?;
            let mut new = NewAsset::new(NAMES[name], kind);
            if let Some(f) = feature {
                new = new.with_pc(Pc::feature(FEATURES[f]));
            }
            ws.add_asset(new, parent).map(drop)
        }
        Op::ChangeAsset { asset, content } => {
            ws.change_asset(pick(&non_root, asset)?, Some(format!("content {content}")), None)
        }
        Op::RenameAsset { asset, name } => {
            ws.change_asset(pick(&non_root, asset)?, None, Some(NAMES[name].to_string()))
        }
        Op::RemoveAsset { asset } => ws.remove_asset(pick(&non_root, asset)?),
        Op::MoveAsset { asset, target } => {
            let a = pick(&non_root, asset)?;
            let t = pick(&containers(ws, ws.get(a).unwrap().kind), target)?;
            ws.move_asset(a, t).map(drop)
        }
        Op::Map { asset, feature } => ws.map_asset_to_feature(pick(&non_root, asset)?, FEATURES[feature]),
        Op::CloneAsset { asset, target } => {
            let a = pick(&non_root, asset)?;
            let t = pick(&containers(ws, ws.get(a).unwrap().kind), target)?;
            ws.clone_asset(a, t).map(drop)
        }
        Op::PropagateAsset { trace } => {
            let t = pick(ws.traces().asset_traces(), trace)?;
            ws.propagate_asset(t.source, t.clone).map(drop)
        }
        Op::AddFeature { name, parent } => ws.add_feature(FEATURES[name], pick(&features, parent)?).map(drop),
        Op::RemoveFeature { feature } => ws.remove_feature(pick(&features, feature)?),
        Op::MoveFeature { feature, parent } => {
            ws.move_feature(pick(&features, feature)?, pick(&features, parent)?).map(drop)
        }
        Op::MakeOptional { feature } => ws.make_feature_optional(pick(&features, feature)?).map(drop),
        Op::RenameFeature { feature, name } => ws.rename_feature(pick(&features, feature)?, FEATURES[name]),
        Op::CloneFeature { feature, target } => {
            ws.clone_feature(pick(&features, feature)?, pick(&features, target)?).map(drop)
        }
        Op::PropagateFeature { trace } => {
            let t = pick(ws.traces().feature_traces(), trace)?;
            ws.propagate_feature(t.source, t.clone).map(drop)
        }
    })
}

/// A workspace after running `ops` from [`base`], skipping refusals.
pub fn run(ops: &[Op]) -> Workspace {
    let mut ws = base();
    for op in ops {
        let _ = apply(&mut ws, op);
    }
    ws
}
