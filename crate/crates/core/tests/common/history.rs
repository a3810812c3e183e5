//! A generated ten-step history over a platform repository `P` and two
//! variants `V1`, `V2` that receive features by copy.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

fn feature_file(i: usize, body: &str, header: &str) -> String {
    format!("// {header}\n// &begin[F{i}]\nfunction f{i}() {{\n  {body}\n}}\n// &end[F{i}]\n")
}

/// Writes the snapshots, `history.tsv` and `clones.tsv` below `root` and
/// returns the manifest path plus the `(source, clone)` block paths whose
/// sources were changed after cloning.
pub fn synthetic_history(root: &Path) -> (PathBuf, Vec<(String, String)>) {
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    files.insert("P/P.vp-project".into(), "P\n\tF1\n\tF2\n\tF3\n\tF4\n\tF5\n".into());
    for i in 1..=5 {
        files.insert(format!("P/src/f{i}.js"), feature_file(i, &format!("return {i};"), "module"));
    }
    for v in ["V1", "V2"] {
        files.insert(format!("{v}/{v}.vp-project"), format!("{v}\n"));
        files.insert(format!("{v}/README.md"), format!("variant {v}\n"));
    }
    let target = |i: usize| if i == 3 || i == 4 { "V2" } else { "V1" };

    let mut manifest = String::new();
    let mut clones = String::new();
    for step in 0..10usize {
        match step {
            1..=5 => {
                let src = files[&format!("P/src/f{step}.js")].clone();
                files.insert(format!("{}/src/f{step}.js", target(step)), src);
                clones.push_str(&format!("F{step}\tP\t{}\t{}\t{step}\n", target(step), step - 1));
            }
            6 => {
                files.insert("P/src/f1.js".into(), feature_file(1, "return 10;", "module"));
            }
            7 => {
                files.insert("P/src/f3.js".into(), feature_file(3, "return 30;", "module"));
                files.insert("V2/src/f4.js".into(), feature_file(4, "return 40;", "module"));
            }
            8 => {
                files.insert("P/src/extra.js".into(), "// &begin[F6]\nx();\n// &end[F6]\n".into());
                files.insert("P/src/f2.js".into(), feature_file(2, "return 2;", "module, revised"));
            }
            9 => {
                let readme = files.remove("V1/README.md").unwrap();
                files.insert("V1/README.txt".into(), readme);
                files.insert("P/src/f5.js".into(), feature_file(5, "return 5;", "module, final"));
            }
            _ => {}
        }
        let dir = root.join(format!("v{step}"));
        for (rel, text) in &files {
            let path = dir.join(rel);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, text).unwrap();
        }
        manifest.push_str(&format!("{step}\tv{step}\n"));
    }
    fs::write(root.join("history.tsv"), manifest).unwrap();
    fs::write(root.join("clones.tsv"), clones).unwrap();
    let planted = vec![
        ("P/src/f1.js/F1#1".to_string(), "V1/src/f1.js/F1#1".to_string()),
        ("P/src/f3.js/F3#1".to_string(), "V2/src/f3.js/F3#1".to_string()),
    ];
    (root.join("history.tsv"), planted)
}
