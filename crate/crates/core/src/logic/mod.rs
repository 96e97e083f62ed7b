//! Propositional formulas, the rule panel, and proof workspaces.

mod formula;
mod parse;
mod proof;
mod rules;

pub use formula::Formula;
pub use parse::{parse_formula, ParseError};
pub use proof::{
    GraphError, Justification, NodeColor, NodeId, NodeKind, ProofGraph, ProofNode, SolutionSummary,
};
pub use rules::{
    apply_rule, derivable_in_one_step, enumerate_one_step, verify_step, Outcome, Rule, UnknownRule,
    Verdict,
};
