//! Presence conditions: propositional formulas over feature names.
//!
//! The canonical text form is infix with `|`, `&`, `!`, `true` and `false`,
//! left-associative binary operators and the fewest parentheses that still
//! reproduce the same tree when parsed back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::is_valid_feature_name;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum Pc {
    #[default]
    True,
    False,
    Feature(String),
    Not(Box<Pc>),
    And(Box<Pc>, Box<Pc>),
    Or(Box<Pc>, Box<Pc>),
}

impl Pc {
    pub fn feature(name: impl Into<String>) -> Pc {
        Pc::Feature(name.into())
    }

    pub fn not(pc: Pc) -> Pc {
        Pc::Not(Box::new(pc))
    }

    pub fn and(lhs: Pc, rhs: Pc) -> Pc {
        Pc::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Pc, rhs: Pc) -> Pc {
        Pc::Or(Box::new(lhs), Box::new(rhs))
    }

    /// `F | self`, the mapping rule used when an asset gains a feature.
    pub fn disjoin(&self, feature: &str) -> Pc {
        Pc::or(Pc::feature(feature), self.clone())
    }

    /// Truth-table evaluation; a literal is true iff it is selected.
    pub fn eval<S: AsRef<str> + Ord>(&self, selected: &BTreeSet<S>) -> bool {
        self.eval_with(&|name| selected.iter().any(|s| s.as_ref() == name))
    }

    pub fn eval_with(&self, selected: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Pc::True => true,
            Pc::False => false,
            Pc::Feature(name) => selected(name),
            Pc::Not(inner) => !inner.eval_with(selected),
            Pc::And(l, r) => l.eval_with(selected) && r.eval_with(selected),
            Pc::Or(l, r) => l.eval_with(selected) || r.eval_with(selected),
        }
    }

    /// Feature literals in order of first appearance, without duplicates.
    pub fn features(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            Pc::True | Pc::False => {}
            Pc::Feature(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Pc::Not(inner) => inner.collect(out),
            Pc::And(l, r) | Pc::Or(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Pc::True | Pc::False => false,
            Pc::Feature(n) => n == name,
            Pc::Not(inner) => inner.mentions(name),
            Pc::And(l, r) | Pc::Or(l, r) => l.mentions(name) || r.mentions(name),
        }
    }

    /// Replaces every literal in `names` by `false`, keeping the formula shape.
    pub fn unmap(&self, names: &BTreeSet<String>) -> Pc {
        self.map_literals(&|n| {
            if names.contains(n) {
                Pc::False
            } else {
                Pc::feature(n)
            }
        })
    }

    pub fn rename(&self, renames: &BTreeMap<String, String>) -> Pc {
        self.map_literals(&|n| Pc::feature(renames.get(n).map(String::as_str).unwrap_or(n)))
    }

    fn map_literals(&self, f: &dyn Fn(&str) -> Pc) -> Pc {
        match self {
            Pc::True => Pc::True,
            Pc::False => Pc::False,
            Pc::Feature(n) => f(n),
            Pc::Not(inner) => Pc::not(inner.map_literals(f)),
            Pc::And(l, r) => Pc::and(l.map_literals(f), r.map_literals(f)),
            Pc::Or(l, r) => Pc::or(l.map_literals(f), r.map_literals(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Pc::Or(..) => 1,
            Pc::And(..) => 2,
            Pc::Not(_) => 3,
            _ => 4,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pc::True => f.write_str("true"),
            Pc::False => f.write_str("false"),
            Pc::Feature(n) => f.write_str(n),
            Pc::Not(inner) => {
                f.write_str("!")?;
                write_operand(inner, 3, false, f)
            }
            Pc::And(l, r) => {
                write_operand(l, 2, false, f)?;
                f.write_str(" & ")?;
                write_operand(r, 2, true, f)
            }
            Pc::Or(l, r) => {
                write_operand(l, 1, false, f)?;
                f.write_str(" | ")?;
                write_operand(r, 1, true, f)
            }
        }
    }
}

fn write_operand(pc: &Pc, parent: u8, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let own = pc.precedence();
    if own < parent || (own == parent && right && own < 3) {
        f.write_str("(")?;
        pc.write(f)?;
        f.write_str(")")
    } else {
        pc.write(f)
    }
}

impl fmt::Display for Pc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f)
    }
}

impl FromStr for Pc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pc> {
        let mut parser = Parser {
            text: s,
            chars: s.char_indices().collect(),
            pos: 0,
        };
        let pc = parser.or()?;
        parser.skip_ws();
        if parser.pos < parser.chars.len() {
            return Err(parser.fail("trailing input"));
        }
        Ok(pc)
    }
}

struct Parser<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser<'_> {
    fn fail(&self, reason: &str) -> Error {
        let at = self.chars.get(self.pos).map(|(i, _)| *i).unwrap_or(self.text.len());
        Error::BadPresenceCondition {
            text: self.text.to_string(),
            reason: format!("{reason} at offset {at}"),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.pos).is_some_and(|(_, c)| *c == want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Pc> {
        let mut lhs = self.and()?;
        while self.eat('|') {
            let rhs = self.and()?;
            lhs = Pc::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Pc> {
        let mut lhs = self.unary()?;
        while self.eat('&') {
            let rhs = self.unary()?;
            lhs = Pc::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Pc> {
        if self.eat('!') {
            return Ok(Pc::not(self.unary()?));
        }
        if self.eat('(') {
            let inner = self.or()?;
            if !self.eat(')') {
                return Err(self.fail("expected `)`"));
            }
            return Ok(inner);
        }
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|(_, c)| !c.is_whitespace() && !"|&!()".contains(*c))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.fail("expected a literal"));
        }
        let word: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
        match word.as_str() {
            "true" => Ok(Pc::True),
            "false" => Ok(Pc::False),
            name if is_valid_feature_name(name) => Ok(Pc::feature(name)),
            _ => {
                self.pos = start;
                Err(self.fail("invalid feature name"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(s: &str) -> Pc {
        s.parse().unwrap()
    }

    fn cfg(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn eval_examples() {
        assert!(pc("MULT | true").eval(&cfg(&[])));
        assert!(pc("DIV").eval(&cfg(&["DIV"])));
        assert!(!pc("A & !B").eval(&cfg(&["A", "B"])));
        assert!(!pc("DIV").eval(&cfg(&[])));
    }

    #[test]
    fn disjoin_examples() {
        assert_eq!(Pc::True.disjoin("MULT").to_string(), "MULT | true");
        assert_eq!(pc("DIV").disjoin("INT").to_string(), "INT | DIV");
        assert_eq!(Pc::False.disjoin("F").to_string(), "F | false");
        let original = pc("DIV");
        let _ = original.disjoin("X");
        assert_eq!(original, pc("DIV"));
    }

    #[test]
    fn sequential_disjunction_prints_right_nesting() {
        let block = Pc::True.disjoin("INT").disjoin("FLOAT");
        assert_eq!(block.to_string(), "FLOAT | (INT | true)");
        assert_eq!(pc("FLOAT | (INT | true)"), block);
    }

    #[test]
    fn canonical_parentheses() {
        assert_eq!(pc("(a | b) | c").to_string(), "a | b | c");
        assert_eq!(pc("a & (b | c)").to_string(), "a & (b | c)");
        assert_eq!(pc("!(a & b)").to_string(), "!(a & b)");
        assert_eq!(pc("!!a").to_string(), "!!a");
        assert_eq!(pc("a | b & c").to_string(), "a | b & c");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "a |", "(a", "a b", "a ] b", "&"] {
            let err = bad.parse::<Pc>().unwrap_err();
            assert_eq!(err.name(), "BadPresenceCondition", "{bad}");
        }
    }

    #[test]
    fn unmap_replaces_literals() {
        let names = cfg(&["MULT"]);
        assert_eq!(pc("MULT | ADD").unmap(&names).to_string(), "false | ADD");
    }

    #[test]
    fn features_in_order() {
        assert_eq!(pc("B | A & !B").features(), vec!["B", "A"]);
    }
}
