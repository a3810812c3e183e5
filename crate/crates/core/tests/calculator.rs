mod common;

use std::fs;
use std::path::Path;

use common::{calculator, read_state_dir};
use vplat_core::sync::{load, save, STATE_DIR};
use vplat_core::{OperatorKind, Workspace};

fn golden_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/calculator")
}

fn saved(ws: &Workspace) -> Vec<(String, String)> {
    let dir = tempfile::tempdir().unwrap();
    save(ws, dir.path()).unwrap();
    read_state_dir(&dir.path().join(STATE_DIR))
}

#[test]
fn add_divide_takes_global_three_to_four() {
    let (ws, _) = calculator(1);
    assert_eq!(ws.global_version(), 3);
    let (ws, ids) = calculator(2);
    assert_eq!(ws.global_version(), 4);
    assert_eq!(ws.get(ids.divide).unwrap().version, 4);
    assert_eq!(ws.get(ids.operators).unwrap().version, 4);
    let last = ws.log().last().unwrap();
    assert_eq!((last.operator, last.result_version), (OperatorKind::AddAsset, 4));
    assert_eq!(last.args, ["BC/Operators.js/divide", "Method"]);
}

#[test]
fn clone_divide_puts_div_under_unassigned() {
    let (ws, ids) = calculator(3);
    let (owner, sc_model) = ws.ancestor_feature_model(ids.divide_clone).unwrap();
    assert_eq!(owner, ids.sc);
    let div = sc_model.find("DIV").unwrap();
    assert!(sc_model.is_within_unassigned(div));
    assert_eq!(ws.get(ids.divide_clone).unwrap().version, 4);
    assert_eq!(ws.get(ids.divide_clone).unwrap().pc.to_string(), "DIV | true");
    let trace = ws.traces().latest_asset_trace(ids.divide, ids.divide_clone).unwrap();
    assert_eq!(trace.version_at, 4);
    let bc_div = ws.feature_model(ids.bc).unwrap().find("DIV").unwrap();
    assert!(ws.traces().is_feature_clone(bc_div, div));
    assert_eq!(ws.get(ids.arithmetic).unwrap().version, ws.global_version());
}

#[test]
fn propagate_divide_eight_over_four() {
    let (mut ws, ids) = calculator(3);
    ws.change_asset(ids.divide, Some(common::DIVIDE_CHECKED.into()), None).unwrap();
    assert_eq!(ws.get(ids.divide).unwrap().version, 8);
    assert_eq!(ws.detect_propagations(), vec![(ids.divide, ids.divide_clone)]);
    assert!(ws.propagate_asset(ids.divide, ids.divide_clone).unwrap());
    let clone = ws.get(ids.divide_clone).unwrap();
    assert_eq!(clone.content.as_deref(), Some(common::DIVIDE_CHECKED));
    assert_eq!(clone.version, ws.global_version());
    let traces: Vec<u64> = ws
        .traces()
        .asset_traces()
        .iter()
        .filter(|t| t.source == ids.divide && t.clone == ids.divide_clone)
        .map(|t| t.version_at)
        .collect();
    assert_eq!(traces, [4, 8]);
    assert!(ws.detect_propagations().is_empty());
    assert!(!ws.propagate_asset(ids.divide, ids.divide_clone).unwrap());
}

#[test]
fn add_feature_exp_takes_model_one_to_two() {
    let (mut ws, ids) = calculator(4);
    let fm = ws.feature_model(ids.bc).unwrap();
    assert_eq!(fm.version(), 1);
    let exp = ws.add_feature("EXP", fm.root()).unwrap();
    let fm = ws.feature_model(ids.bc).unwrap();
    assert_eq!(fm.version(), 2);
    assert_eq!(fm.feature(exp).version, 2);
    assert_eq!(fm.feature(exp).parent, Some(fm.root()));
}

#[test]
fn clone_feature_exp_slices_operators() {
    let (ws, ids) = calculator(5);
    let sliced = ws.resolve_str("SC/Operators.js").unwrap();
    let names: Vec<&str> =
        ws.get(sliced).unwrap().children.iter().map(|c| ws.get(*c).unwrap().name.as_str()).collect();
    assert_eq!(names, ["exponent"]);
    assert_eq!(ws.get(sliced).unwrap().content, None);
    let exp_clone = ws.resolve_str("SC/Operators.js/exponent").unwrap();
    assert!(ws.traces().is_asset_clone(ids.exponent, exp_clone));
    assert!(ws.traces().is_asset_clone(ids.operators, sliced));
    let sc = ws.feature_model(ids.sc).unwrap();
    let exp = sc.find("EXP").unwrap();
    assert_eq!(sc.feature(exp).parent, Some(sc.root()));
    assert_eq!(ws.log().last().unwrap().operator, OperatorKind::CloneFeature);
    assert_eq!(ws.log().last().unwrap().args, ["BC/EXP", "SC"]);
    ws.check_invariants().unwrap();
}

#[test]
fn scenario_state_matches_golden_bytes() {
    let (ws, _) = calculator(5);
    let files = saved(&ws);
    let golden = golden_dir();
    if std::env::var_os("VPLAT_BLESS").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for (name, text) in &files {
            fs::write(golden.join(name), text).unwrap();
        }
    }
    assert_eq!(files, read_state_dir(&golden));
    assert_eq!(saved(&calculator(5).0), files, "second run differs");
}

#[test]
fn saved_state_loads_back_equal() {
    let (ws, _) = calculator(5);
    let dir = tempfile::tempdir().unwrap();
    save(&ws, dir.path()).unwrap();
    let loaded = load(dir.path()).unwrap();
    assert_eq!(loaded, ws);
    save(&loaded, dir.path()).unwrap();
    assert_eq!(read_state_dir(&dir.path().join(STATE_DIR)), saved(&ws));
}
