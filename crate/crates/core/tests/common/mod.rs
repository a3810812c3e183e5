#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use vplat_core::model::{AssetKind, FeatureModel, NewAsset};
use vplat_core::parse::parse_feature_model;
use vplat_core::{AssetId, Pc, Workspace};

pub mod conformance;
pub mod gen;
pub mod history;
pub mod props;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Writes `files` (relative path, content) below `root`.
pub fn write_tree(root: &Path, files: &[(&str, &str)]) {
    for (rel, text) in files {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }
}

pub fn model(text: &str) -> FeatureModel {
    parse_feature_model(text).unwrap_or_else(|e| panic!("{e}"))
}

pub fn method(name: &str, body: &str) -> NewAsset {
    NewAsset::new(name, AssetKind::Method).with_content(body)
}

pub const DIVIDE: &str = "function divide(a, b) {\n  return a / b;\n}";
pub const DIVIDE_CHECKED: &str =
    "function divide(a, b) {\n  if (b === 0) throw new Error(\"division by zero\");\n  return a / b;\n}";

/// Ids of interest in the calculator scenario.
#[derive(Debug, Clone, Copy)]
pub struct Calc {
    pub bc: AssetId,
    pub operators: AssetId,
    pub divide: AssetId,
    pub sc: AssetId,
    pub arithmetic: AssetId,
    pub divide_clone: AssetId,
    pub exponent: AssetId,
}

/// BasicCalculator (BC) and ScientificCalculator (SC), built operator by
/// operator. `upto` stops after the given number of scenario stages:
///
/// 1. BC with Operators.js and its feature model (global 3)
/// 2. AddAsset divide (global 4)
/// 3. SC with Arithmetic.js and its model; CloneAsset divide → Arithmetic.js
/// 4. ChangeAsset divide (global 8); PropagateAsset divide → clone
/// 5. AddFeature EXP; an exponent method mapped to EXP; CloneFeature EXP → SC
pub fn calculator(upto: usize) -> (Workspace, Calc) {
    let mut ws = Workspace::new();
    let root = ws.root_id();
    let mut ids = Calc {
        bc: root,
        operators: root,
        divide: root,
        sc: root,
        arithmetic: root,
        divide_clone: root,
        exponent: root,
    };
    let ok = |r: vplat_core::Result<AssetId>| r.unwrap_or_else(|e| panic!("{}: {e}", e.name()));

    let repo = NewAsset::new("BC", AssetKind::Repository).with_child(
        NewAsset::new("Operators.js", AssetKind::File)
            .with_content("// basic arithmetic")
            .with_child(method("add", "function add(a, b) {\n  return a + b;\n}"))
            .with_child(method("subtract", "function subtract(a, b) {\n  return a - b;\n}"))
            .with_child(method("multiply", "function multiply(a, b) {\n  return a * b;\n}")),
    );
    ids.bc = ok(ws.add_asset(repo, root));
    ws.add_feature_model_to_asset(ids.bc, model("BC\n\tADD\n\tSUB\n\tMULT\n\tDIV\n")).unwrap();
    ids.operators = ws.resolve_str("BC/Operators.js").unwrap();
    if upto < 2 {
        return (ws, ids);
    }

    ids.divide = ok(ws.add_asset(method("divide", DIVIDE).with_pc(Pc::feature("DIV")), ids.operators));
    if upto < 3 {
        return (ws, ids);
    }

    let repo = NewAsset::new("SC", AssetKind::Repository)
        .with_child(NewAsset::new("Arithmetic.js", AssetKind::File).with_content("// scientific"));
    ids.sc = ok(ws.add_asset(repo, root));
    ws.add_feature_model_to_asset(ids.sc, model("SC\n\tTRIG\n")).unwrap();
    ids.arithmetic = ws.resolve_str("SC/Arithmetic.js").unwrap();
    ids.divide_clone = ok(ws.clone_asset(ids.divide, ids.arithmetic));
    if upto < 4 {
        return (ws, ids);
    }

    ws.change_asset(ids.divide, Some(DIVIDE_CHECKED.into()), None).unwrap();
    assert!(ws.propagate_asset(ids.divide, ids.divide_clone).unwrap());
    if upto < 5 {
        return (ws, ids);
    }

    let bc_model = ws.feature_model(ids.bc).unwrap();
    let bc_root = bc_model.root();
    let exp = ws.add_feature("EXP", bc_root).unwrap();
    ids.exponent = ok(ws.add_asset(
        method("exponent", "function exponent(a, b) {\n  return a ** b;\n}").with_pc(Pc::feature("EXP")),
        ids.operators,
    ));
    let sc_root = ws.feature_model(ids.sc).unwrap().root();
    ws.clone_feature(exp, sc_root).unwrap();
    (ws, ids)
}

/// Reads every file of a `.vp/` directory, sorted by name.
pub fn read_state_dir(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read_to_string(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}
