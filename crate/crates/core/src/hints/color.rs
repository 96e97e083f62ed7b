use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::network::replay_trace;
use super::trace::SolutionTrace;
use super::HintError;
use crate::logic::{Formula, NodeColor, NodeId, ProofGraph};

/// Fraction of needed occurrences at or above which a node is shown green.
pub const GREEN_THRESHOLD: f64 = 0.2;

/// Per-statement share of prior complete solutions in which the statement
/// was needed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    solutions: u32,
    needed: HashMap<String, u32>,
}

impl NodeStats {
    pub fn from_traces(
        premises: &[Formula],
        conclusion: &Formula,
        traces: &[&SolutionTrace],
    ) -> Result<Self, HintError> {
        let mut stats = NodeStats::default();
        for (i, trace) in traces.iter().enumerate() {
            // Validates the trace before it is replayed into a workspace.
            replay_trace(premises, conclusion, trace, i)?;
            let mut g = ProofGraph::new(trace.problem.clone(), premises, conclusion.clone());
            for step in &trace.steps {
                let sources: Vec<NodeId> = step
                    .sources
                    .iter()
                    .map(|s| {
                        g.nodes()
                            .iter()
                            .find(|n| n.is_established() && &n.statement == s)
                            .map(|n| n.id)
                            .expect("replay_trace checked source availability")
                    })
                    .collect();
                g.add_justified(step.derived.clone(), step.rule, sources, NodeColor::Plain)
                    .expect("sources are established");
                if g.is_complete() {
                    break;
                }
            }
            stats.record_solution(&g)?;
        }
        Ok(stats)
    }

    pub fn record_solution(&mut self, g: &ProofGraph) -> Result<(), HintError> {
        let needed = g.needed_set().map_err(|_| HintError::IncompleteSolution(g.problem().to_string()))?;
        let mut seen = HashSet::new();
        for id in needed {
            let stmt = g.node(id).expect("needed ids exist").statement.render();
            if seen.insert(stmt.clone()) {
                *self.needed.entry(stmt).or_insert(0) += 1;
            }
        }
        self.solutions += 1;
        Ok(())
    }

    pub fn solutions(&self) -> u32 {
        self.solutions
    }

    pub fn needed_fraction(&self, statement: &Formula) -> f64 {
        if self.solutions == 0 {
            return 0.0;
        }
        f64::from(self.needed.get(&statement.render()).copied().unwrap_or(0)) / f64::from(self.solutions)
    }

    pub fn color(&self, statement: &Formula) -> NodeColor {
        node_color(self.needed_fraction(statement))
    }
}

pub fn node_color(needed_fraction: f64) -> NodeColor {
    if needed_fraction <= 0.0 {
        NodeColor::Gray
    } else if needed_fraction >= GREEN_THRESHOLD {
        NodeColor::Green
    } else {
        NodeColor::Yellow
    }
}
