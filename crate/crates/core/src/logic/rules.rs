use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::formula::Formula;

/// The inference and replacement rules available on the rule panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    MP,
    MT,
    HS,
    DS,
    Simp,
    Conj,
    Add,
    DN,
    DeM,
    Impl,
}

impl Rule {
    pub const ALL: [Rule; 10] = [
        Rule::MP,
        Rule::MT,
        Rule::HS,
        Rule::DS,
        Rule::Simp,
        Rule::Conj,
        Rule::Add,
        Rule::DN,
        Rule::DeM,
        Rule::Impl,
    ];

    /// Number of source statements the rule consumes.
    pub fn arity(self) -> usize {
        match self {
            Rule::MP | Rule::MT | Rule::HS | Rule::DS | Rule::Conj => 2,
            Rule::Simp | Rule::Add | Rule::DN | Rule::DeM | Rule::Impl => 1,
        }
    }

    /// Replacement rules rewrite one subformula by a logical equivalence.
    pub fn is_replacement(self) -> bool {
        matches!(self, Rule::DN | Rule::DeM | Rule::Impl)
    }

    /// `Add` can introduce any disjunct, so its output set is not enumerable.
    pub fn is_finitely_productive(self) -> bool {
        self != Rule::Add
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::MP => "MP",
            Rule::MT => "MT",
            Rule::HS => "HS",
            Rule::DS => "DS",
            Rule::Simp => "Simp",
            Rule::Conj => "Conj",
            Rule::Add => "Add",
            Rule::DN => "DN",
            Rule::DeM => "DeM",
            Rule::Impl => "Impl",
        }
    }

    fn usage(self) -> &'static str {
        match self {
            Rule::MP => "MP needs an implication P->Q and its antecedent P, and derives Q",
            Rule::MT => "MT needs an implication P->Q and the negated consequent ~Q, and derives ~P",
            Rule::HS => "HS needs two chained implications P->Q and Q->R, and derives P->R",
            Rule::DS => "DS needs a disjunction P|Q and the negation of one disjunct, and derives the other disjunct",
            Rule::Simp => "Simp needs a conjunction P&Q, and derives P or Q",
            Rule::Conj => "Conj needs two statements P and Q, and derives P&Q",
            Rule::Add => "Add needs a statement P, and derives a disjunction containing P",
            Rule::DN => "DN rewrites one subformula P as ~~P or ~~P as P",
            Rule::DeM => "DeM rewrites one subformula ~(P&Q) as ~P|~Q or ~(P|Q) as ~P&~Q, or the reverse",
            Rule::Impl => "Impl rewrites one subformula P->Q as ~P|Q, or the reverse",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown rule '{0}'")]
pub struct UnknownRule(pub String);

impl FromStr for Rule {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .iter()
            .copied()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Valid,
    InvalidRuleApplication,
    MalformedDerivation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub feedback: String,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.outcome == Outcome::Valid
    }
}

/// Statements obtainable from `sources` by one application of `rule`.
///
/// Returns `None` on an arity mismatch or for `Add`, whose output is unbounded.
/// Binary rules accept their sources in either order.
pub fn apply_rule(rule: Rule, sources: &[Formula]) -> Option<BTreeSet<Formula>> {
    if sources.len() != rule.arity() || !rule.is_finitely_productive() {
        return None;
    }
    let mut out = BTreeSet::new();
    match rule {
        Rule::Simp => {
            if let Formula::And(l, r) = &sources[0] {
                out.insert((**l).clone());
                out.insert((**r).clone());
            }
        }
        Rule::DN => out = rewrite_once(&sources[0], double_negation),
        Rule::DeM => out = rewrite_once(&sources[0], de_morgan),
        Rule::Impl => out = rewrite_once(&sources[0], material_implication),
        Rule::Conj => {
            out.insert(Formula::and(sources[0].clone(), sources[1].clone()));
            out.insert(Formula::and(sources[1].clone(), sources[0].clone()));
        }
        Rule::MP | Rule::MT | Rule::HS | Rule::DS => {
            for (a, b) in [(&sources[0], &sources[1]), (&sources[1], &sources[0])] {
                binary_ordered(rule, a, b, &mut out);
            }
        }
        Rule::Add => unreachable!(),
    }
    Some(out)
}

fn binary_ordered(rule: Rule, first: &Formula, second: &Formula, out: &mut BTreeSet<Formula>) {
    match (rule, first) {
        (Rule::MP, Formula::Implies(p, q)) if **p == *second => {
            out.insert((**q).clone());
        }
        (Rule::MT, Formula::Implies(p, q)) => {
            if let Formula::Not(nq) = second {
                if **nq == **q {
                    out.insert(Formula::not((**p).clone()));
                }
            }
        }
        (Rule::HS, Formula::Implies(p, q)) => {
            if let Formula::Implies(q2, r) = second {
                if q2 == q {
                    out.insert(Formula::implies((**p).clone(), (**r).clone()));
                }
            }
        }
        (Rule::DS, Formula::Or(p, q)) => {
            if let Formula::Not(neg) = second {
                if **neg == **p {
                    out.insert((**q).clone());
                }
                if **neg == **q {
                    out.insert((**p).clone());
                }
            }
        }
        _ => {}
    }
}

fn double_negation(f: &Formula) -> Vec<Formula> {
    let mut alts = vec![Formula::not(Formula::not(f.clone()))];
    if let Formula::Not(inner) = f {
        if let Formula::Not(core) = &**inner {
            alts.push((**core).clone());
        }
    }
    alts
}

fn de_morgan(f: &Formula) -> Vec<Formula> {
    let neg = |x: &Formula| Formula::not(x.clone());
    match f {
        Formula::Not(inner) => match &**inner {
            Formula::And(p, q) => vec![Formula::or(neg(p), neg(q))],
            Formula::Or(p, q) => vec![Formula::and(neg(p), neg(q))],
            _ => vec![],
        },
        Formula::Or(a, b) => match (&**a, &**b) {
            (Formula::Not(p), Formula::Not(q)) => {
                vec![Formula::not(Formula::and((**p).clone(), (**q).clone()))]
            }
            _ => vec![],
        },
        Formula::And(a, b) => match (&**a, &**b) {
            (Formula::Not(p), Formula::Not(q)) => {
                vec![Formula::not(Formula::or((**p).clone(), (**q).clone()))]
            }
            _ => vec![],
        },
        _ => vec![],
    }
}

fn material_implication(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Implies(p, q) => vec![Formula::or(Formula::not((**p).clone()), (**q).clone())],
        Formula::Or(a, q) => match &**a {
            Formula::Not(p) => vec![Formula::implies((**p).clone(), (**q).clone())],
            _ => vec![],
        },
        _ => vec![],
    }
}

/// All formulas obtained by rewriting exactly one subformula occurrence of `f`.
fn rewrite_once(f: &Formula, rewrite: fn(&Formula) -> Vec<Formula>) -> BTreeSet<Formula> {
    let mut out: BTreeSet<Formula> = rewrite(f).into_iter().collect();
    match f {
        Formula::Atom(_) => {}
        Formula::Not(inner) => {
            for x in rewrite_once(inner, rewrite) {
                out.insert(Formula::not(x));
            }
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
            let rebuild = |a: Formula, b: Formula| match f {
                Formula::And(..) => Formula::and(a, b),
                Formula::Or(..) => Formula::or(a, b),
                Formula::Implies(..) => Formula::implies(a, b),
                _ => Formula::iff(a, b),
            };
            for x in rewrite_once(l, rewrite) {
                out.insert(rebuild(x, (**r).clone()));
            }
            for x in rewrite_once(r, rewrite) {
                out.insert(rebuild((**l).clone(), x));
            }
        }
    }
    out
}

/// Checks whether `derived` follows from exactly `sources` by `rule`.
pub fn verify_step(rule: Rule, sources: &[Formula], derived: &Formula) -> Verdict {
    if sources.len() != rule.arity() {
        return Verdict {
            outcome: Outcome::MalformedDerivation,
            feedback: format!(
                "{} takes {} source statement{}, but {} {} selected",
                rule,
                rule.arity(),
                if rule.arity() == 1 { "" } else { "s" },
                sources.len(),
                if sources.len() == 1 { "was" } else { "were" },
            ),
        };
    }
    let valid = match rule {
        Rule::Add => match derived {
            Formula::Or(l, r) => **l == sources[0] || **r == sources[0],
            _ => false,
        },
        _ => apply_rule(rule, sources).is_some_and(|set| set.contains(derived)),
    };
    if valid {
        Verdict { outcome: Outcome::Valid, feedback: String::new() }
    } else {
        let shown: Vec<String> = sources.iter().map(Formula::render).collect();
        Verdict {
            outcome: Outcome::InvalidRuleApplication,
            feedback: format!(
                "{} cannot derive {} from {}. {}.",
                rule,
                derived.render(),
                shown.join(" and "),
                rule.usage()
            ),
        }
    }
}

/// Everything derivable by one application of any finitely-productive rule,
/// using distinct statements as sources of binary rules.
pub fn enumerate_one_step<'a, I>(statements: I) -> BTreeSet<Formula>
where
    I: IntoIterator<Item = &'a Formula>,
{
    let stmts: Vec<&Formula> = statements.into_iter().collect();
    let mut out = BTreeSet::new();
    for rule in Rule::ALL.into_iter().filter(|r| r.is_finitely_productive()) {
        if rule.arity() == 1 {
            for s in &stmts {
                out.extend(apply_rule(rule, &[(*s).clone()]).unwrap_or_default());
            }
        } else {
            for (i, a) in stmts.iter().enumerate() {
                for b in &stmts[i + 1..] {
                    out.extend(apply_rule(rule, &[(*a).clone(), (*b).clone()]).unwrap_or_default());
                }
            }
        }
    }
    out
}

/// Whether `target` is already present or follows in one rule application
/// (including `Add`) from the given statements.
pub fn derivable_in_one_step(statements: &[Formula], target: &Formula) -> bool {
    if statements.contains(target) {
        return true;
    }
    if let Formula::Or(l, r) = target {
        if statements.iter().any(|s| s == &**l || s == &**r) {
            return true;
        }
    }
    enumerate_one_step(statements).contains(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn check(rule: Rule, sources: &[&str], derived: &str) -> Outcome {
        let srcs: Vec<Formula> = sources.iter().map(|s| p(s)).collect();
        verify_step(rule, &srcs, &p(derived)).outcome
    }

    #[test]
    fn walkthrough_steps() {
        assert_eq!(check(Rule::MT, &["C->E", "~E"], "~C"), Outcome::Valid);
        assert_eq!(check(Rule::MP, &["C->E", "~E"], "B"), Outcome::InvalidRuleApplication);
        assert_eq!(check(Rule::Conj, &["B", "~A"], "~A&B"), Outcome::Valid);
        assert_eq!(check(Rule::Simp, &["D&~E"], "D"), Outcome::Valid);
        assert_eq!(check(Rule::Simp, &["D&~E"], "~E"), Outcome::Valid);
        assert_eq!(check(Rule::Impl, &["A->C"], "~A|C"), Outcome::Valid);
        assert_eq!(check(Rule::DS, &["~A|C", "~C"], "~A"), Outcome::Valid);
        assert_eq!(check(Rule::HS, &["A->C", "C->E"], "A->E"), Outcome::Valid);
    }

    #[test]
    fn binary_rules_ignore_source_order() {
        assert_eq!(check(Rule::MT, &["~E", "C->E"], "~C"), Outcome::Valid);
        assert_eq!(check(Rule::MP, &["A", "A->B"], "B"), Outcome::Valid);
        assert_eq!(check(Rule::HS, &["C->E", "A->C"], "A->E"), Outcome::Valid);
        assert_eq!(check(Rule::DS, &["~P", "P|Q"], "Q"), Outcome::Valid);
        assert_eq!(check(Rule::DS, &["P|Q", "~Q"], "P"), Outcome::Valid);
        assert_eq!(check(Rule::Conj, &["B", "~A"], "B&~A"), Outcome::Valid);
    }

    #[test]
    fn arity_mismatch_is_malformed() {
        assert_eq!(check(Rule::MP, &["A->B"], "B"), Outcome::MalformedDerivation);
        assert_eq!(check(Rule::Simp, &["A&B", "C"], "A"), Outcome::MalformedDerivation);
    }

    #[test]
    fn add_is_verification_only() {
        assert_eq!(check(Rule::Add, &["R"], "R|S"), Outcome::Valid);
        assert_eq!(check(Rule::Add, &["R"], "S|R"), Outcome::Valid);
        assert_eq!(check(Rule::Add, &["R"], "S&R"), Outcome::InvalidRuleApplication);
        assert!(apply_rule(Rule::Add, &[p("R")]).is_none());
    }

    #[test]
    fn replacement_rules_rewrite_one_position() {
        assert_eq!(check(Rule::DN, &["A"], "~~A"), Outcome::Valid);
        assert_eq!(check(Rule::DN, &["~~A"], "A"), Outcome::Valid);
        assert_eq!(check(Rule::DN, &["R&S"], "~~(R&S)"), Outcome::Valid);
        assert_eq!(check(Rule::DN, &["R&S"], "~~R&S"), Outcome::Valid);
        assert_eq!(check(Rule::DN, &["R&S"], "~~R&~~S"), Outcome::InvalidRuleApplication);
        assert_eq!(check(Rule::DeM, &["~(A|B)"], "~A&~B"), Outcome::Valid);
        assert_eq!(check(Rule::DeM, &["~A|~B"], "~(A&B)"), Outcome::Valid);
        assert_eq!(check(Rule::DeM, &["C->~(A&B)"], "C->~A|~B"), Outcome::Valid);
        assert_eq!(check(Rule::Impl, &["~A|B"], "A->B"), Outcome::Valid);
        assert_eq!(check(Rule::Impl, &["(A->B)&C"], "(~A|B)&C"), Outcome::Valid);
        assert_eq!(check(Rule::Impl, &["A|B"], "A->B"), Outcome::InvalidRuleApplication);
    }

    #[test]
    fn feedback_names_the_rule() {
        let v = verify_step(Rule::MP, &[p("C->E"), p("~E")], &p("B"));
        assert!(v.feedback.starts_with("MP cannot derive B from C->E and ~E"));
        assert!(verify_step(Rule::MT, &[p("C->E"), p("~E")], &p("~C")).feedback.is_empty());
    }

    #[test]
    fn enumeration_examples() {
        let set = enumerate_one_step(&[p("A"), p("A->B")]);
        assert!(set.contains(&p("B")));
        let set = enumerate_one_step(&[p("D&~E")]);
        assert!(set.contains(&p("D")) && set.contains(&p("~E")));
        let set = enumerate_one_step(&[p("A->B"), p("B->E")]);
        assert!(set.contains(&p("A->E")));
    }

    #[test]
    fn rule_names_roundtrip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert_eq!("simp".parse::<Rule>().unwrap(), Rule::Simp);
        assert!("XYZ".parse::<Rule>().is_err());
    }

    #[test]
    fn derivable_counts_add_and_present() {
        let stmts = [p("R"), p("P->Q")];
        assert!(derivable_in_one_step(&stmts, &p("R|S")));
        assert!(derivable_in_one_step(&stmts, &p("R")));
        assert!(!derivable_in_one_step(&stmts, &p("Q")));
    }
}
