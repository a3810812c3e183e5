//! Derivation of a file's block structure from its annotations.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{AssetKind, NewAsset};
use crate::parse::annotations::{parse_annotations, AnnotationSpan};
use crate::pc::Pc;

/// A `File` asset holding `content`, with one `Block` per annotation span.
///
/// Nested spans become nested blocks. A block is named after its feature list
/// and its rank among equally annotated siblings (`DIV#1`, `INT,FLOAT#1`),
/// holds the annotated lines and is mapped to every listed feature in order.
pub fn build_file_structure(name: &str, content: &str) -> Result<NewAsset> {
    let spans = parse_annotations(content)?;
    let lines: Vec<&str> = content.lines().collect();
    let mut file = NewAsset::new(name, AssetKind::File).with_content(content);
    file.children = blocks(&spans, &lines);
    Ok(file)
}

fn blocks(spans: &[AnnotationSpan], lines: &[&str]) -> Vec<NewAsset> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut i = 0;
    while i < spans.len() {
        let outer = &spans[i];
        let mut j = i + 1;
        while j < spans.len() && outer.contains(&spans[j]) {
            j += 1;
        }
        let label = outer.features.join(",");
        let rank = seen.entry(label.clone()).or_insert(0);
        *rank += 1;
        let pc = outer.features.iter().fold(Pc::True, |pc, f| pc.disjoin(f));
        let body = lines[outer.start - 1..outer.end.min(lines.len())].join("\n");
        let mut block = NewAsset::new(format!("{label}#{rank}"), AssetKind::Block)
            .with_content(body)
            .with_pc(pc);
        block.children = blocks(&spans[i + 1..j], lines);
        out.push(block);
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_block() {
        let f = build_file_structure("Ops.js", "a\n// &begin[DIV]\nb\n// &end[DIV]\nc").unwrap();
        assert_eq!(f.children.len(), 1);
        let b = &f.children[0];
        assert_eq!(b.name, "DIV#1");
        assert_eq!(b.content.as_deref(), Some("// &begin[DIV]\nb\n// &end[DIV]"));
        assert_eq!(b.pc.to_string(), "DIV | true");
    }

    #[test]
    fn multi_feature_pc() {
        let f = build_file_structure("n.js", "//&begin[INT,FLOAT]\n//&end[INT,FLOAT]").unwrap();
        assert_eq!(f.children[0].pc.to_string(), "FLOAT | (INT | true)");
        assert_eq!(f.children[0].name, "INT,FLOAT#1");
    }

    #[test]
    fn nesting_and_ranks() {
        let text = "//&begin[A]\nx //&line[B]\ny //&line[B]\n//&end[A]\nz //&line[A]";
        let f = build_file_structure("f", text).unwrap();
        let names: Vec<_> = f.children.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["A#1", "A#2"]);
        let inner: Vec<_> = f.children[0].children.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(inner, ["B#1", "B#2"]);
        assert!(build_file_structure("f", "plain").unwrap().children.is_empty());
    }
}
