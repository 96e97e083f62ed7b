use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Formula, ProofGraph};

/// Order-independent identity of a problem-solving state: the set of
/// statements present (premises and justified statements) plus whether the
/// conclusion has been derived.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    statements: BTreeSet<String>,
    completed: bool,
}

impl StateKey {
    pub fn new<'a, I>(statements: I, completed: bool) -> Self
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        StateKey { statements: statements.into_iter().map(Formula::render).collect(), completed }
    }

    pub fn statements(&self) -> impl Iterator<Item = &str> {
        self.statements.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn completed(&self) -> bool {
        self.completed
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.statements.contains(&f.render())
    }

    pub fn canonical(&self) -> String {
        let mut s = self.statements.iter().cloned().collect::<Vec<_>>().join(";");
        if self.completed {
            s.push_str(";#done");
        }
        s
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.canonical())
    }
}

/// Key of the workspace's current state; pending assertions are not part of it.
pub fn canonical_state(g: &ProofGraph) -> StateKey {
    StateKey::new(g.statements().iter(), g.is_complete())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{NodeColor, NodeId, Rule};

    fn p(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn fig1() -> ProofGraph {
        ProofGraph::new("fig1", &[p("A->C"), p("B"), p("C->E"), p("D&~E")], p("~A&B"))
    }

    #[test]
    fn derivation_order_does_not_matter() {
        let mut g1 = fig1();
        g1.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        g1.add_justified(p("~E"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        let mut g2 = fig1();
        g2.add_justified(p("~E"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        g2.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        assert_eq!(canonical_state(&g1), canonical_state(&g2));
        assert_ne!(canonical_state(&g1), canonical_state(&fig1()));
    }

    #[test]
    fn premises_only_key_is_shared() {
        assert_eq!(canonical_state(&fig1()), canonical_state(&fig1()));
        assert_eq!(canonical_state(&fig1()).len(), 4);
    }

    #[test]
    fn walkthrough_key_after_three_steps() {
        let mut g = fig1();
        g.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        g.add_justified(p("~E"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        g.add_justified(p("~A|C"), Rule::Impl, vec![NodeId(1)], NodeColor::Plain).unwrap();
        g.add_pending_assertion(p("~C"));
        let expected = StateKey::new(
            ["A->C", "B", "C->E", "D&~E", "D", "~E", "~A|C"].iter().map(|s| p(s)).collect::<Vec<_>>().iter(),
            false,
        );
        assert_eq!(canonical_state(&g), expected);
        assert!(!canonical_state(&g).contains(&p("~C")));
    }
}
