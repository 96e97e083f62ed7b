use serde::{Deserialize, Serialize};

use crate::logic::{Formula, NodeId, Rule};
use crate::policy::{Condition, HintKind, Timestamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intro,
    Pretest,
    Training,
    Posttest,
    Done,
}

/// One line of a session's append-only log. Field order is the serialized
/// key order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub seq: u64,
    pub t: Timestamp,
    pub session: String,
    pub phase: Phase,
    /// Training level, `None` outside training.
    pub level: Option<u8>,
    pub problem: Option<String>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    SessionStarted { student: String, condition: Condition, seed: u64 },
    ProblemStarted { premises: Vec<Formula>, conclusion: Formula },
    ExampleViewed,
    StepValid { rule: Rule, sources: Vec<NodeId>, statement: Formula, node: NodeId },
    StepError { rule: Rule, sources: Vec<NodeId>, statement: Formula, feedback: String },
    HintGiven { hint: u32, hint_kind: HintKind, statement: Formula, node: Option<NodeId> },
    HintJustified { hint: u32, node: NodeId },
    Skip { skips_used: u8 },
    Restart,
    ProblemComplete { length: usize },
    AssertionDeleted { hint: u32, node: NodeId },
    SessionComplete,
}

impl InteractionEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Parses a line-delimited log, skipping blank lines.
pub fn parse_log(text: &str) -> Result<Vec<InteractionEvent>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| InteractionEvent::from_json_line(l).map_err(|e| (i + 1, e)))
        .collect()
}

pub fn write_log(events: &[InteractionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}
