use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::formula::Formula;
use super::rules::Rule;

/// Handle of a node in a proof workspace.
///
/// Premises are numbered from 1 and later nodes continue the sequence in
/// creation order. The conclusion placeholder always has id 0 and is shown
/// as `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const CONCLUSION: NodeId = NodeId(0);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NodeId::CONCLUSION {
            f.write_str("C")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Premise,
    Derived,
    Conclusion,
    AssertionPending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeColor {
    Green,
    Yellow,
    Gray,
    Cyan,
    #[serde(rename = "None")]
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Justification {
    pub rule: Rule,
    pub sources: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNode {
    pub id: NodeId,
    pub statement: Formula,
    pub kind: NodeKind,
    pub justification: Option<Justification>,
    pub color: NodeColor,
}

impl ProofNode {
    /// Premises and justified statements can serve as sources of later steps.
    pub fn is_established(&self) -> bool {
        match self.kind {
            NodeKind::Premise | NodeKind::Derived => true,
            NodeKind::Conclusion => self.justification.is_some(),
            NodeKind::AssertionPending => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is not justified yet and cannot be used as a source")]
    UnjustifiedSource(NodeId),
    #[error("node {0} is not a pending assertion")]
    NotPending(NodeId),
    #[error("node {0} is already in use")]
    DuplicateId(NodeId),
    #[error("the proof is not complete")]
    IncompleteProof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub complete: bool,
    /// Number of derived statements, present only for complete solutions.
    pub length: Option<usize>,
}

/// One attempt at a problem: premises, conclusion placeholder and every
/// statement the student has derived so far.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofGraph {
    problem: String,
    conclusion: Formula,
    nodes: Vec<ProofNode>,
    next_id: u32,
}

impl ProofGraph {
    pub fn new(problem: impl Into<String>, premises: &[Formula], conclusion: Formula) -> Self {
        let mut nodes: Vec<ProofNode> = premises
            .iter()
            .enumerate()
            .map(|(i, f)| ProofNode {
                id: NodeId(i as u32 + 1),
                statement: f.clone(),
                kind: NodeKind::Premise,
                justification: None,
                color: NodeColor::Plain,
            })
            .collect();
        nodes.push(ProofNode {
            id: NodeId::CONCLUSION,
            statement: conclusion.clone(),
            kind: NodeKind::Conclusion,
            justification: None,
            color: NodeColor::Plain,
        });
        ProofGraph { problem: problem.into(), conclusion, nodes, next_id: premises.len() as u32 + 1 }
    }

    pub fn problem(&self) -> &str {
        &self.problem
    }

    pub fn conclusion(&self) -> &Formula {
        &self.conclusion
    }

    pub fn nodes(&self) -> &[ProofNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&ProofNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn node_mut(&mut self, id: NodeId) -> Option<&mut ProofNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn premises(&self) -> impl Iterator<Item = &ProofNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Premise)
    }

    pub fn pending_assertions(&self) -> impl Iterator<Item = &ProofNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::AssertionPending)
    }

    /// Premises plus every justified statement, in creation order.
    pub fn statements(&self) -> Vec<Formula> {
        self.nodes.iter().filter(|n| n.is_established()).map(|n| n.statement.clone()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.node(NodeId::CONCLUSION).is_some_and(|n| n.justification.is_some())
    }

    /// Looks up source statements, rejecting unknown or unjustified nodes.
    pub fn source_statements(&self, sources: &[NodeId]) -> Result<Vec<Formula>, GraphError> {
        sources
            .iter()
            .map(|&id| {
                let node = self.node(id).ok_or(GraphError::UnknownNode(id))?;
                if node.is_established() {
                    Ok(node.statement.clone())
                } else {
                    Err(GraphError::UnjustifiedSource(id))
                }
            })
            .collect()
    }

    /// Records a verified step and returns the node that now holds `statement`.
    ///
    /// Deriving the conclusion justifies the placeholder; deriving the content
    /// of a pending assertion turns that node into an ordinary derived node.
    pub fn add_justified(
        &mut self,
        statement: Formula,
        rule: Rule,
        sources: Vec<NodeId>,
        color: NodeColor,
    ) -> Result<NodeId, GraphError> {
        self.source_statements(&sources)?;
        let justification = Justification { rule, sources };
        if statement == self.conclusion && !self.is_complete() {
            self.nodes.retain(|n| !(n.kind == NodeKind::AssertionPending && n.statement == statement));
            let node = self.node_mut(NodeId::CONCLUSION).expect("conclusion node always present");
            node.justification = Some(justification);
            return Ok(NodeId::CONCLUSION);
        }
        if let Some(node) = self
            .nodes
            .iter_mut()
            .find(|n| n.kind == NodeKind::AssertionPending && n.statement == statement)
        {
            node.kind = NodeKind::Derived;
            node.justification = Some(justification);
            node.color = color;
            return Ok(node.id);
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.push(ProofNode {
            id,
            statement,
            kind: NodeKind::Derived,
            justification: Some(justification),
            color,
        });
        Ok(id)
    }

    /// Re-inserts a derived node under a known id, e.g. when rebuilding an
    /// attempt from its event log. Id 0 justifies the conclusion.
    pub fn restore_justified(
        &mut self,
        id: NodeId,
        statement: Formula,
        rule: Rule,
        sources: Vec<NodeId>,
    ) -> Result<(), GraphError> {
        self.source_statements(&sources)?;
        let justification = Some(Justification { rule, sources });
        if id == NodeId::CONCLUSION {
            self.node_mut(id).expect("conclusion node always present").justification = justification;
            return Ok(());
        }
        if self.node(id).is_some() {
            return Err(GraphError::DuplicateId(id));
        }
        self.nodes.push(ProofNode {
            id,
            statement,
            kind: NodeKind::Derived,
            justification,
            color: NodeColor::Plain,
        });
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    pub fn add_pending_assertion(&mut self, statement: Formula) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.push(ProofNode {
            id,
            statement,
            kind: NodeKind::AssertionPending,
            justification: None,
            color: NodeColor::Cyan,
        });
        id
    }

    pub fn remove_pending_assertion(&mut self, id: NodeId) -> Result<ProofNode, GraphError> {
        let idx = self.nodes.iter().position(|n| n.id == id).ok_or(GraphError::UnknownNode(id))?;
        if self.nodes[idx].kind != NodeKind::AssertionPending {
            return Err(GraphError::NotPending(id));
        }
        Ok(self.nodes.remove(idx))
    }

    /// Clears every derived and pending node; premises and the conclusion stay.
    /// Ids keep increasing so a restarted attempt never reuses an old id.
    pub fn restart(&mut self) {
        self.nodes.retain(|n| matches!(n.kind, NodeKind::Premise | NodeKind::Conclusion));
        if let Some(c) = self.node_mut(NodeId::CONCLUSION) {
            c.justification = None;
        }
    }

    /// Nodes the completed solution depends on: the conclusion and the
    /// transitive closure of its justification sources.
    pub fn needed_set(&self) -> Result<BTreeSet<NodeId>, GraphError> {
        if !self.is_complete() {
            return Err(GraphError::IncompleteProof);
        }
        let by_id: HashMap<NodeId, &ProofNode> = self.nodes.iter().map(|n| (n.id, n)).collect();
        let mut needed = BTreeSet::new();
        let mut stack = vec![NodeId::CONCLUSION];
        while let Some(id) = stack.pop() {
            if !needed.insert(id) {
                continue;
            }
            if let Some(j) = by_id.get(&id).and_then(|n| n.justification.as_ref()) {
                stack.extend(j.sources.iter().copied());
            }
        }
        Ok(needed)
    }

    pub fn summary(&self) -> SolutionSummary {
        let complete = self.is_complete();
        let length = complete.then(|| {
            self.nodes.iter().filter(|n| n.kind == NodeKind::Derived).count() + 1
        });
        SolutionSummary { complete, length }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn fig1() -> ProofGraph {
        ProofGraph::new("fig1", &[p("A->C"), p("B"), p("C->E"), p("D&~E")], p("~A&B"))
    }

    #[test]
    fn fresh_graph_is_incomplete() {
        let g = fig1();
        assert_eq!(g.summary(), SolutionSummary { complete: false, length: None });
        assert_eq!(g.needed_set(), Err(GraphError::IncompleteProof));
        assert_eq!(g.statements().len(), 4);
    }

    #[test]
    fn one_step_proof_needs_everything() {
        let mut g = ProofGraph::new("t", &[p("A->B"), p("A")], p("B"));
        g.add_justified(p("B"), Rule::MP, vec![NodeId(1), NodeId(2)], NodeColor::Plain).unwrap();
        let needed = g.needed_set().unwrap();
        assert_eq!(needed, g.nodes().iter().map(|n| n.id).collect());
        assert_eq!(g.summary().length, Some(1));
    }

    #[test]
    fn pending_assertion_cannot_be_a_source() {
        let mut g = fig1();
        let a = g.add_pending_assertion(p("A->E"));
        assert_eq!(
            g.add_justified(p("~A"), Rule::Simp, vec![a], NodeColor::Plain),
            Err(GraphError::UnjustifiedSource(a))
        );
        assert_eq!(
            g.add_justified(p("D"), Rule::Simp, vec![NodeId(42)], NodeColor::Plain),
            Err(GraphError::UnknownNode(NodeId(42)))
        );
    }

    #[test]
    fn justifying_assertion_converts_node() {
        let mut g = fig1();
        let a = g.add_pending_assertion(p("A->E"));
        assert_eq!(a, NodeId(5));
        let id = g.add_justified(p("A->E"), Rule::HS, vec![NodeId(1), NodeId(3)], NodeColor::Green).unwrap();
        assert_eq!(id, a);
        let node = g.node(a).unwrap();
        assert_eq!(node.kind, NodeKind::Derived);
        assert_eq!(node.color, NodeColor::Green);
        assert_eq!(g.pending_assertions().count(), 0);
    }

    #[test]
    fn restart_keeps_premises_and_conclusion() {
        let mut g = fig1();
        g.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
        g.add_pending_assertion(p("~E"));
        g.restart();
        assert_eq!(g.nodes().len(), 5);
        assert!(g.nodes().iter().all(|n| matches!(n.kind, NodeKind::Premise | NodeKind::Conclusion)));
        let next = g.add_pending_assertion(p("~E"));
        assert_eq!(next, NodeId(7));
    }

    #[test]
    fn removing_non_pending_fails() {
        let mut g = fig1();
        assert_eq!(g.remove_pending_assertion(NodeId(1)), Err(GraphError::NotPending(NodeId(1))));
        let a = g.add_pending_assertion(p("D"));
        assert!(g.remove_pending_assertion(a).is_ok());
    }
}
