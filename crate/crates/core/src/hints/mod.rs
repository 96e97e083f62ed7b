//! Data-driven next-step hints built from prior solution traces.

mod color;
mod network;
mod state;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use color::{node_color, NodeStats, GREEN_THRESHOLD};
pub use network::{
    build_network, HintContent, InteractionNetwork, StateInfo, Transition, ValueParams,
};
pub use state::{canonical_state, StateKey};
pub use trace::{parse_corpus, write_corpus, SolutionTrace, TraceStep};

use crate::logic::Formula;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HintError {
    #[error("trace {trace}, step {step}: {reason}")]
    InvalidTrace { trace: usize, step: usize, reason: String },
    #[error("network for problem {0} has no completed state")]
    NoGoalState(String),
    #[error("no hint source found for problem {0}")]
    NoHintSource(String),
    #[error("solution for problem {0} is not complete")]
    IncompleteSolution(String),
    #[error("trace corpus line {line}: {message}")]
    CorpusSyntax { line: usize, message: String },
}

/// Everything the tutor needs to give hints and color nodes for one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HintModel {
    pub network: InteractionNetwork,
    pub stats: NodeStats,
}

impl HintModel {
    pub fn build(
        problem: &str,
        premises: &[Formula],
        conclusion: &Formula,
        expert: &SolutionTrace,
        traces: &[SolutionTrace],
        params: &ValueParams,
    ) -> Result<Self, HintError> {
        let network = build_network(problem, premises, conclusion, traces, expert)?.value_iterate(params)?;
        let all: Vec<&SolutionTrace> = std::iter::once(expert).chain(traces).collect();
        let stats = NodeStats::from_traces(premises, conclusion, &all)?;
        Ok(HintModel { network, stats })
    }

    pub fn hint(&self, history: &[StateKey]) -> Result<HintContent, HintError> {
        self.network.hint_lookup(history)
    }
}
