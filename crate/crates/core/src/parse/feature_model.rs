//! `.vp-project` feature model files.
//!
//! One feature per line, tab-indented by depth. A line may start with a group
//! keyword (`or`, `xor`, `and`) which, on a first child, sets the group kind of
//! its parent, and may end with ` ?` to mark the feature optional:
//!
//! ```text
//! BC
//! 	xor PRE
//! 		INT
//! 	POST ?
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{is_valid_feature_name, Feature, FeatureId, FeatureModel, GroupKind, UNASSIGNED};

#[derive(Debug)]
struct Line<'a> {
    number: usize,
    depth: usize,
    keyword: Option<GroupKind>,
    raw_keyword: &'a str,
    name: &'a str,
    optional: bool,
}

fn lex_line(number: usize, raw: &str) -> Result<Line<'_>> {
    let body = raw.trim_start_matches('\t');
    let depth = raw.len() - body.len();
    if body.starts_with(|c: char| c.is_whitespace()) {
        return Err(Error::BadIndent { line: number });
    }
    let mut tokens: Vec<&str> = body.split_whitespace().collect();
    let optional = tokens.len() > 1 && tokens.last() == Some(&"?");
    if optional {
        tokens.pop();
    }
    let (keyword, raw_keyword) = match tokens.as_slice() {
        [kw, _] => match GroupKind::from_keyword(kw) {
            Some(g) => (Some(g), *kw),
            None => {
                return Err(Error::Malformed {
                    line: number,
                    reason: format!("unexpected `{kw}` before the feature name"),
                })
            }
        },
        [_] => (None, ""),
        _ => {
            return Err(Error::Malformed {
                line: number,
                reason: "expected `[or|xor|and] NAME [?]`".into(),
            })
        }
    };
    let name = tokens[tokens.len() - 1];
    if !is_valid_feature_name(name) {
        return Err(Error::Malformed {
            line: number,
            reason: format!("invalid feature name `{name}`"),
        });
    }
    Ok(Line {
        number,
        depth,
        keyword,
        raw_keyword,
        name,
        optional,
    })
}

/// Parses a feature model document. Ids are numbered from 1 in document
/// order; the UNASSIGNED bucket is synthesized as the root's first child when
/// the document does not list it. Every feature starts at version 1.
pub fn parse_feature_model(text: &str) -> Result<FeatureModel> {
    let mut lines = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        lines.push(lex_line(i + 1, raw)?);
    }
    let Some(first) = lines.first() else {
        return Err(Error::EmptyDocument);
    };
    if first.depth != 0 {
        return Err(Error::BadIndent { line: first.number });
    }
    if first.keyword.is_some() {
        return Err(Error::MisplacedGroupKeyword {
            line: first.number,
            keyword: first.raw_keyword.to_string(),
        });
    }
    if first.name == UNASSIGNED {
        return Err(Error::Malformed {
            line: first.number,
            reason: "the root cannot be UNASSIGNED".into(),
        });
    }

    let mut features: BTreeMap<FeatureId, Feature> = BTreeMap::new();
    let mut by_name: BTreeMap<&str, FeatureId> = BTreeMap::new();
    let mut next = 1u64;
    let mut stack: Vec<FeatureId> = Vec::new();
    let mut unassigned = None;

    for line in &lines {
        if line.depth > stack.len() {
            return Err(Error::BadIndent { line: line.number });
        }
        if line.depth == 0 && !stack.is_empty() {
            return Err(Error::Malformed {
                line: line.number,
                reason: "a feature model has exactly one root".into(),
            });
        }
        if by_name.contains_key(line.name) {
            return Err(Error::DuplicateFeatureName(line.name.to_string()));
        }
        stack.truncate(line.depth);
        let parent = stack.last().copied();
        if line.name == UNASSIGNED {
            if line.depth != 1 {
                return Err(Error::Malformed {
                    line: line.number,
                    reason: "UNASSIGNED must be a direct child of the root".into(),
                });
            }
            unassigned = Some(FeatureId(next));
        }
        let id = FeatureId(next);
        next += 1;
        if let Some(p) = parent {
            let pf = features.get_mut(&p).unwrap();
            if let Some(kw) = line.keyword {
                if pf.children.is_empty() {
                    pf.group = kw;
                } else if pf.group != kw {
                    return Err(Error::MisplacedGroupKeyword {
                        line: line.number,
                        keyword: line.raw_keyword.to_string(),
                    });
                }
            }
            pf.children.push(id);
        }
        features.insert(
            id,
            Feature {
                id,
                name: line.name.to_string(),
                optional: line.optional,
                incomplete: false,
                parent,
                children: Vec::new(),
                group: GroupKind::And,
                version: 1,
            },
        );
        by_name.insert(line.name, id);
        stack.push(id);
    }

    let root = FeatureId(1);
    let unassigned = match unassigned {
        Some(u) => u,
        None => {
            let id = FeatureId(next);
            features.insert(
                id,
                Feature {
                    id,
                    name: UNASSIGNED.to_string(),
                    optional: false,
                    incomplete: false,
                    parent: Some(root),
                    children: Vec::new(),
                    group: GroupKind::And,
                    version: 1,
                },
            );
            features.get_mut(&root).unwrap().children.insert(0, id);
            id
        }
    };
    Ok(FeatureModel::from_parts(features, root, unassigned))
}

/// Canonical text of a model: tabs for depth, the group keyword on the first
/// emitted child of a non-`and` group, ` ?` for optional features, and an
/// LF after every line. An empty UNASSIGNED bucket in first position is
/// left out since parsing re-creates it there.
pub fn serialize_feature_model(fm: &FeatureModel) -> String {
    let mut out = String::new();
    emit(fm, fm.root(), 0, None, &mut out);
    out
}

fn emit(fm: &FeatureModel, id: FeatureId, depth: usize, keyword: Option<GroupKind>, out: &mut String) {
    let f = fm.feature(id);
    out.push_str(&"\t".repeat(depth));
    if let Some(kw) = keyword {
        let _ = write!(out, "{} ", kw.keyword());
    }
    out.push_str(&f.name);
    if f.optional {
        out.push_str(" ?");
    }
    out.push('\n');
    let mut first = true;
    for (i, c) in f.children.iter().enumerate() {
        if *c == fm.unassigned() && i == 0 && implicit_unassigned(fm, f) {
            continue;
        }
        let kw = (first && f.group != GroupKind::And).then_some(f.group);
        emit(fm, *c, depth + 1, kw, out);
        first = false;
    }
}

fn implicit_unassigned(fm: &FeatureModel, root: &Feature) -> bool {
    let bucket = fm.feature(fm.unassigned());
    bucket.children.is_empty()
        && !bucket.optional
        && bucket.group == GroupKind::And
        && (root.children.len() > 1 || root.group == GroupKind::And)
}
