//! The study procedure for one student: phases, problem sequencing, step
//! submission and the append-only event log.

mod bank;
mod engine;
mod events;

use thiserror::Error;

pub use bank::{
    Curriculum, Level, Problem, ProblemBank, INTRO_EXAMPLES, POSTTEST_PROBLEMS, PRETEST_PROBLEMS,
    SKIPS_PER_LEVEL, SOLVES_PER_LEVEL, TRAINING_LEVELS,
};
pub use engine::{Attempt, ProblemView, Session, SessionSnapshot, StepOutcome};
pub use events::{parse_log, write_log, EventKind, InteractionEvent, Phase};

use crate::hints::HintError;
use crate::logic::{NodeId, ParseError};
use crate::policy::Timestamp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("problem bank is incomplete: {}", .0.join("; "))]
    BankIncomplete(Vec<String>),
    #[error("invalid problem bank: {0}")]
    InvalidBank(String),
    #[error("{op} is not available during the {phase:?} phase")]
    WrongPhase { op: &'static str, phase: Phase },
    #[error("malformed formula: {0}")]
    MalformedFormula(ParseError),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is not a pending assertion")]
    NotPending(NodeId),
    #[error("no more skips are allowed on this level")]
    SkipLimitReached,
    #[error("there is no other problem to skip to")]
    NoAlternativeProblem,
    #[error("clock went backwards: {now} is before {last}")]
    ClockRegression { last: Timestamp, now: Timestamp },
    #[error(transparent)]
    Hint(#[from] HintError),
    #[error("replay diverged at event {seq}: {reason}")]
    ReplayDiverged { seq: u64, reason: String },
}
