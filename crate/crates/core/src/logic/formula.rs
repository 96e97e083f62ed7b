use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::parse::{parse_formula, ParseError};

/// A propositional-logic statement.
///
/// Atoms are single upper-case letters. The derived `Ord` is only used to get
/// deterministic iteration order in sets; it carries no logical meaning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(char),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

/// Binding strength used by the printer and the parser; larger binds tighter.
pub(crate) const PREC_IFF: u8 = 1;
pub(crate) const PREC_IMPLIES: u8 = 2;
pub(crate) const PREC_OR: u8 = 3;
pub(crate) const PREC_AND: u8 = 4;
pub(crate) const PREC_NOT: u8 = 5;
pub(crate) const PREC_ATOM: u8 = 6;

impl Formula {
    pub fn atom(letter: char) -> Formula {
        assert!(letter.is_ascii_uppercase(), "atoms are A-Z, got {letter:?}");
        Formula::Atom(letter)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Formula {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        parse_formula(text)
    }

    /// Canonical minimally-parenthesized rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Formula::Atom(_) => PREC_ATOM,
            Formula::Not(_) => PREC_NOT,
            Formula::And(..) => PREC_AND,
            Formula::Or(..) => PREC_OR,
            Formula::Implies(..) => PREC_IMPLIES,
            Formula::Iff(..) => PREC_IFF,
        }
    }

    fn write_to(&self, out: &mut String) {
        match self {
            Formula::Atom(c) => out.push(*c),
            Formula::Not(inner) => {
                out.push('~');
                write_operand(inner, inner.precedence() < PREC_NOT, out);
            }
            Formula::And(l, r) => write_binary(l, r, "&", PREC_AND, Assoc::Left, out),
            Formula::Or(l, r) => write_binary(l, r, "|", PREC_OR, Assoc::Left, out),
            Formula::Implies(l, r) => write_binary(l, r, "->", PREC_IMPLIES, Assoc::Right, out),
            Formula::Iff(l, r) => write_binary(l, r, "<->", PREC_IFF, Assoc::Right, out),
        }
    }

    /// Truth value under an assignment given as a bit set over `A..=Z`.
    pub fn eval(&self, assignment: u32) -> bool {
        match self {
            Formula::Atom(c) => assignment & (1 << (*c as u32 - 'A' as u32)) != 0,
            Formula::Not(f) => !f.eval(assignment),
            Formula::And(l, r) => l.eval(assignment) && r.eval(assignment),
            Formula::Or(l, r) => l.eval(assignment) || r.eval(assignment),
            Formula::Implies(l, r) => !l.eval(assignment) || r.eval(assignment),
            Formula::Iff(l, r) => l.eval(assignment) == r.eval(assignment),
        }
    }

    /// Bit set of the atoms occurring in the formula.
    pub fn atoms(&self) -> u32 {
        match self {
            Formula::Atom(c) => 1 << (*c as u32 - 'A' as u32),
            Formula::Not(f) => f.atoms(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.atoms() | r.atoms()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => 1 + f.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Assoc {
    Left,
    Right,
}

fn write_binary(l: &Formula, r: &Formula, op: &str, prec: u8, assoc: Assoc, out: &mut String) {
    let lp = l.precedence();
    let rp = r.precedence();
    write_operand(l, lp < prec || (lp == prec && assoc == Assoc::Right), out);
    out.push_str(op);
    write_operand(r, rp < prec || (rp == prec && assoc == Assoc::Left), out);
}

fn write_operand(f: &Formula, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        f.write_to(out);
        out.push(')');
    } else {
        f.write_to(out);
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}
