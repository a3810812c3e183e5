//! Embedded feature annotations.
//!
//! A marker is a comment leader (`//`, `#` or `<!--`), optionally followed by
//! `~` and whitespace, then one of `&begin[..]`, `&end[..]` or `&line[..]`
//! with a comma-separated feature list. Begin/end pairs must nest and an end
//! must repeat its begin's list exactly.

use crate::error::{Error, Result};
use crate::model::is_valid_feature_name;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanKind {
    Block,
    Line,
}

/// Lines `start..=end` (1-based) annotated with `features`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationSpan {
    pub features: Vec<String>,
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
}

impl AnnotationSpan {
    pub fn contains(&self, other: &AnnotationSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Marker {
    Begin(Vec<String>),
    End(Vec<String>),
    Line(Vec<String>),
}

const LEADERS: [&str; 3] = ["//", "#", "<!--"];
const KEYWORDS: [&str; 3] = ["&begin[", "&end[", "&line["];

fn marker(line: &str, number: usize) -> Result<Option<Marker>> {
    for (pos, _) in line.char_indices() {
        let rest = &line[pos..];
        let Some(leader) = LEADERS.iter().find(|l| rest.starts_with(**l)) else {
            continue;
        };
        let after = rest[leader.len()..].strip_prefix('~').unwrap_or(&rest[leader.len()..]);
        let after = after.trim_start();
        let Some(kw) = KEYWORDS.iter().find(|k| after.starts_with(**k)) else {
            continue;
        };
        let body = &after[kw.len()..];
        let close = body.find(']').ok_or_else(|| Error::Malformed {
            line: number,
            reason: format!("`{}` is not closed by `]`", kw.trim_end_matches('[')),
        })?;
        let features = feature_list(&body[..close], number)?;
        return Ok(Some(match *kw {
            "&begin[" => Marker::Begin(features),
            "&end[" => Marker::End(features),
            _ => Marker::Line(features),
        }));
    }
    Ok(None)
}

fn feature_list(list: &str, number: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim) {
        if !is_valid_feature_name(name) {
            return Err(Error::Malformed {
                line: number,
                reason: format!("invalid feature name `{name}` in annotation"),
            });
        }
        out.push(name.to_string());
    }
    Ok(out)
}

/// Parses every annotation of a text, returning spans ordered by start line
/// with enclosing spans before the spans they contain.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationSpan>> {
    let mut spans = Vec::new();
    let mut open: Vec<(Vec<String>, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        match marker(raw, number)? {
            None => {}
            Some(Marker::Begin(features)) => open.push((features, number)),
            Some(Marker::Line(features)) => spans.push(AnnotationSpan {
                features,
                start: number,
                end: number,
                kind: SpanKind::Line,
            }),
            Some(Marker::End(features)) => match open.last() {
                None => {
                    return Err(Error::UnbalancedAnnotation {
                        line: number,
                        features: features.join(","),
                    })
                }
                Some((top, _)) if *top == features => {
                    let (features, start) = open.pop().unwrap();
                    spans.push(AnnotationSpan {
                        features,
                        start,
                        end: number,
                        kind: SpanKind::Block,
                    });
                }
                Some((top, _)) => {
                    return Err(if open.iter().any(|(f, _)| *f == features) {
                        Error::OverlapWithoutNesting {
                            line: number,
                            found: features.join(","),
                            inner: top.join(","),
                        }
                    } else {
                        Error::MismatchedEnd {
                            line: number,
                            expected: top.join(","),
                            found: features.join(","),
                        }
                    })
                }
            },
        }
    }
    if let Some((features, start)) = open.pop() {
        return Err(Error::UnbalancedAnnotation {
            line: start,
            features: features.join(","),
        });
    }
    spans.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    Ok(spans)
}
