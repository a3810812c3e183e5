//! Parser conformance: random feature-model documents, a fixed annotation
//! corpus with expected outcomes, and group-keyword cases.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use vplat_core::model::GroupKind;
use vplat_core::parse::{parse_annotations, parse_feature_model, serialize_feature_model, SpanKind};

/// A generated model: canonical text plus the group kind expected on each
/// feature, by name.
#[derive(Clone, Debug)]
pub struct FmDoc {
    pub text: String,
    pub groups: Vec<(String, GroupKind)>,
}

#[derive(Clone, Debug)]
struct Node {
    group: GroupKind,
    optional: bool,
    children: Vec<Node>,
}

fn node() -> impl Strategy<Value = Node> {
    let group = prop_oneof![Just(GroupKind::And), Just(GroupKind::Or), Just(GroupKind::Xor)];
    let leaf = (group.clone(), any::<bool>()).prop_map(|(group, optional)| Node { group, optional, children: vec![] });
    leaf.prop_recursive(4, 40, 5, move |inner| {
        (group.clone(), any::<bool>(), proptest::collection::vec(inner, 0..5))
            .prop_map(|(group, optional, children)| Node { group, optional, children })
    })
}

pub fn fm_doc() -> impl Strategy<Value = FmDoc> {
    (proptest::collection::vec(node(), 0..6), prop_oneof![Just(GroupKind::And), Just(GroupKind::Xor)]).prop_map(
        |(children, group)| {
            let root = Node { group, optional: false, children };
            let mut doc = FmDoc { text: String::new(), groups: vec![] };
            let mut next = 0;
            emit(&root, 0, None, &mut next, &mut doc);
            doc
        },
    )
}

fn emit(n: &Node, depth: usize, keyword: Option<GroupKind>, next: &mut usize, doc: &mut FmDoc) {
    let name = if depth == 0 { "ROOT".to_string() } else { format!("F{next}") };
    *next += 1;
    doc.text.push_str(&"\t".repeat(depth));
    if let Some(kw) = keyword {
        doc.text.push_str(kw.keyword());
        doc.text.push(' ');
    }
    doc.text.push_str(&name);
    if n.optional && depth > 0 {
        doc.text.push_str(" ?");
    }
    doc.text.push('\n');
    // Without children a group keyword has nowhere to go.
    let group = if n.children.is_empty() { GroupKind::And } else { n.group };
    doc.groups.push((name, group));
    for (i, c) in n.children.iter().enumerate() {
        let kw = (i == 0 && group != GroupKind::And).then_some(group);
        emit(c, depth + 1, kw, next, doc);
    }
}

/// Canonical text survives parse → serialize unchanged, a second round trip
/// keeps the shape, and every parent carries the group of its first child's
/// keyword.
pub fn fm_round_trip(doc: &FmDoc) -> Result<(), TestCaseError> {
    let fm = parse_feature_model(&doc.text).map_err(|e| TestCaseError::fail(format!("{e}\n{}", doc.text)))?;
    let text = serialize_feature_model(&fm);
    prop_assert_eq!(&text, &doc.text);
    let again = parse_feature_model(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(again.shape(), fm.shape());
    for (name, group) in &doc.groups {
        let id = fm.find(name).ok_or_else(|| TestCaseError::fail(format!("{name} missing")))?;
        prop_assert_eq!(fm.feature(id).group, *group, "group of {}", name);
    }
    Ok(())
}

/// Expected outcome of one annotation document.
#[derive(Clone, Copy, Debug)]
pub enum Expect {
    /// `(start, end, kind)` of every span, in parser order.
    Spans(&'static [(usize, usize, SpanKind)]),
    Error(&'static str),
}

use Expect::{Error as Fails, Spans};
use SpanKind::{Block as B, Line as L};

pub const ANNOTATIONS: &[(&str, &str, Expect)] = &[
    ("empty", "", Spans(&[])),
    ("plain code", "let x = 1;\nlet y = 2;\n", Spans(&[])),
    ("single block", "// &begin[DIV]\nfn d() {}\n// &end[DIV]\n", Spans(&[(1, 3, B)])),
    ("single line", "x = a / b; // &line[DIV]\n", Spans(&[(1, 1, L)])),
    ("tilde leader", "//~&begin[A]\nx\n//~&end[A]\n", Spans(&[(1, 3, B)])),
    ("hash leader", "# &begin[A]\nx\n# &end[A]\n", Spans(&[(1, 3, B)])),
    ("html leader", "<!-- &begin[A] -->\n<p/>\n<!-- &end[A] -->\n", Spans(&[(1, 3, B)])),
    ("feature list", "// &begin[A, B]\nx\n// &end[A,B]\n", Spans(&[(1, 3, B)])),
    ("nested", "//&begin[A]\n//&begin[B]\nx\n//&end[B]\n//&end[A]\n", Spans(&[(1, 5, B), (2, 4, B)])),
    ("siblings", "//&begin[A]\n//&end[A]\n//&begin[B]\n//&end[B]\n", Spans(&[(1, 2, B), (3, 4, B)])),
    (
        "line inside block",
        "//&begin[A]\nx // &line[B]\n//&end[A]\n",
        Spans(&[(1, 3, B), (2, 2, L)]),
    ),
    ("same feature nested", "//&begin[A]\n//&begin[A]\n//&end[A]\n//&end[A]\n", Spans(&[(1, 4, B), (2, 3, B)])),
    ("marker in string", "s = \"&begin[A]\";\n", Spans(&[])),
    ("crlf", "// &begin[A]\r\nx\r\n// &end[A]\r\n", Spans(&[(1, 3, B)])),
    ("dangling end", "x\n// &end[A]\n", Fails("UnbalancedAnnotation")),
    ("unclosed begin", "// &begin[A]\nx\n", Fails("UnbalancedAnnotation")),
    ("unclosed inner", "//&begin[A]\n//&begin[B]\n//&end[B]\n//&begin[C]\n", Fails("UnbalancedAnnotation")),
    ("mismatched end", "// &begin[A]\n// &end[B]\n", Fails("MismatchedEnd")),
    ("end list differs", "// &begin[A, B]\n// &end[B, A]\n", Fails("MismatchedEnd")),
    ("end list shorter", "// &begin[A, B]\n// &end[A]\n", Fails("MismatchedEnd")),
    ("overlap", "//&begin[A]\n//&begin[B]\n//&end[A]\n//&end[B]\n", Fails("OverlapWithoutNesting")),
    (
        "deep overlap",
        "//&begin[A]\n//&begin[B]\n//&begin[C]\n//&end[A]\n",
        Fails("OverlapWithoutNesting"),
    ),
    ("missing bracket", "// &begin[A\n// &end[A]\n", Fails("Malformed")),
    ("empty list", "// &line[]\n", Fails("Malformed")),
    ("bad name", "// &line[A B]\n", Fails("Malformed")),
    ("trailing comma", "// &line[A,]\n", Fails("Malformed")),
];

/// Runs the annotation corpus; returns one message per deviating case.
pub fn annotation_failures() -> Vec<String> {
    let mut out = Vec::new();
    for (name, text, expect) in ANNOTATIONS {
        let got = parse_annotations(text);
        let ok = match (expect, &got) {
            (Spans(want), Ok(spans)) => {
                spans.iter().map(|s| (s.start, s.end, s.kind)).collect::<Vec<_>>() == *want
            }
            (Fails(want), Err(e)) => e.name() == *want,
            _ => false,
        };
        if !ok {
            out.push(format!("{name}: expected {expect:?}, got {got:?}"));
        }
    }
    out
}

/// `(document, feature, expected group)`; an `Err` names the expected error.
pub const GROUPS: &[(&str, &str, Result<GroupKind, &str>)] = &[
    ("R\n\txor A\n\tB\n", "R", Ok(GroupKind::Xor)),
    ("R\n\tor A\n\tB\n\tC\n", "R", Ok(GroupKind::Or)),
    ("R\n\tand A\n\tB\n", "R", Ok(GroupKind::And)),
    ("R\n\tA\n\tB\n", "R", Ok(GroupKind::And)),
    ("R\n\tA\n\t\txor X\n\t\tY\n\tB\n", "A", Ok(GroupKind::Xor)),
    ("R\n\tA\n\t\txor X\n\t\tY\n\tB\n", "R", Ok(GroupKind::And)),
    ("R\n\txor A\n\txor B\n", "R", Ok(GroupKind::Xor)),
    ("R\n\tA\n\txor B\n", "R", Err("MisplacedGroupKeyword")),
    ("R\n\txor A\n\tor B\n", "R", Err("MisplacedGroupKeyword")),
    ("xor R\n\tA\n", "R", Err("MisplacedGroupKeyword")),
    ("R\n\tnor A\n", "R", Err("Malformed")),
];

pub fn group_failures() -> Vec<String> {
    let mut out = Vec::new();
    for (text, feature, expect) in GROUPS {
        let got = parse_feature_model(text).map(|fm| fm.feature(fm.find(feature).unwrap()).group);
        let ok = match (expect, &got) {
            (Ok(want), Ok(g)) => want == g,
            (Err(want), Err(e)) => e.name() == *want,
            _ => false,
        };
        if !ok {
            out.push(format!("{text:?}/{feature}: expected {expect:?}, got {got:?}"));
        }
    }
    out
}
