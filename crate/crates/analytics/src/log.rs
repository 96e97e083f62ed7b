//! Rebuilds problem attempts and hint outcomes from one session's log.

use tutor_core::logic::{Formula, NodeId, ProofGraph};
use tutor_core::policy::{Condition, HintKind, Timestamp};
use tutor_core::session::{EventKind, InteractionEvent, Phase};

use crate::AnalyticsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttemptEnd {
    Completed,
    Restarted,
    Skipped,
    Viewed,
    /// The log stops while the attempt is open.
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HintRecord {
    pub id: u32,
    pub kind: HintKind,
    pub statement: Formula,
    pub given_at: Timestamp,
    pub justified: bool,
    pub needed: bool,
}

/// One continuous try at a problem, from its start or a restart until it
/// is completed, restarted, or skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct AttemptRecord {
    pub problem: String,
    pub phase: Phase,
    pub level: Option<u8>,
    pub started: Timestamp,
    pub ended: Timestamp,
    pub end: AttemptEnd,
    pub graph: ProofGraph,
    pub valid_steps: usize,
    pub error_steps: usize,
    pub length: Option<usize>,
    pub hints: Vec<HintRecord>,
    /// Valid steps as (seq, node, statement), in order.
    steps: Vec<(u64, NodeId, Formula)>,
    hint_seqs: Vec<u64>,
}

impl AttemptRecord {
    fn new(problem: String, phase: Phase, level: Option<u8>, t: Timestamp, graph: ProofGraph) -> Self {
        AttemptRecord {
            problem,
            phase,
            level,
            started: t,
            ended: t,
            end: AttemptEnd::Open,
            graph,
            valid_steps: 0,
            error_steps: 0,
            length: None,
            hints: Vec::new(),
            steps: Vec::new(),
            hint_seqs: Vec::new(),
        }
    }

    /// Marks hints justified when a later step in this attempt derived the
    /// same statement, and needed when such a node supports the conclusion.
    fn settle_hints(&mut self) {
        let needed = self.graph.needed_set().ok();
        for (hint, &seq) in self.hints.iter_mut().zip(&self.hint_seqs) {
            let later: Vec<NodeId> = self
                .steps
                .iter()
                .filter(|(s, _, f)| *s > seq && *f == hint.statement)
                .map(|(_, id, _)| *id)
                .collect();
            hint.justified = !later.is_empty();
            hint.needed = hint.justified
                && needed.as_ref().is_some_and(|set| later.iter().any(|id| set.contains(id)));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionLog {
    pub session: String,
    pub student: String,
    pub condition: Condition,
    pub events: Vec<InteractionEvent>,
    pub attempts: Vec<AttemptRecord>,
}

pub fn reconstruct(events: &[InteractionEvent]) -> Result<SessionLog, AnalyticsError> {
    let first = events.first().ok_or(AnalyticsError::EmptyLog)?;
    let corrupt = |e: &InteractionEvent, reason: String| AnalyticsError::CorruptLog { seq: e.seq, reason };
    let EventKind::SessionStarted { student, condition, .. } = &first.kind else {
        return Err(corrupt(first, "log must start with SessionStarted".into()));
    };
    for w in events.windows(2) {
        if w[1].session != first.session {
            return Err(corrupt(&w[1], "events from more than one session".into()));
        }
        if w[1].t < w[0].t {
            return Err(corrupt(&w[1], "timestamp goes backwards".into()));
        }
        if w[1].seq != w[0].seq + 1 {
            return Err(corrupt(&w[1], "sequence gap".into()));
        }
    }

    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut open: Option<AttemptRecord> = None;
    let mut initial: Option<ProofGraph> = None;
    let mut close = |a: Option<AttemptRecord>, end: AttemptEnd, t: Timestamp| {
        if let Some(mut a) = a {
            a.end = end;
            a.ended = t;
            a.settle_hints();
            attempts.push(a);
        }
    };

    for e in events {
        match &e.kind {
            EventKind::SessionStarted { .. } | EventKind::SessionComplete => {}
            EventKind::ProblemStarted { premises, conclusion } => {
                close(open.take(), AttemptEnd::Open, e.t);
                let problem = e.problem.clone().ok_or_else(|| corrupt(e, "problem id missing".into()))?;
                let graph = ProofGraph::new(problem.clone(), premises, conclusion.clone());
                initial = Some(graph.clone());
                open = Some(AttemptRecord::new(problem, e.phase, e.level, e.t, graph));
            }
            EventKind::ExampleViewed => close(open.take(), AttemptEnd::Viewed, e.t),
            EventKind::Restart => {
                close(open.take(), AttemptEnd::Restarted, e.t);
                let graph = initial.clone().ok_or_else(|| corrupt(e, "restart before any problem".into()))?;
                let problem = graph.problem().to_string();
                open = Some(AttemptRecord::new(problem, e.phase, e.level, e.t, graph));
            }
            EventKind::Skip { .. } => close(open.take(), AttemptEnd::Skipped, e.t),
            EventKind::ProblemComplete { length } => {
                let a = open.as_mut().ok_or_else(|| corrupt(e, "completion outside an attempt".into()))?;
                a.length = Some(*length);
                close(open.take(), AttemptEnd::Completed, e.t);
            }
            EventKind::StepValid { rule, sources, statement, node } => {
                let a = open.as_mut().ok_or_else(|| corrupt(e, "step outside an attempt".into()))?;
                a.graph
                    .restore_justified(*node, statement.clone(), *rule, sources.clone())
                    .map_err(|err| corrupt(e, err.to_string()))?;
                a.valid_steps += 1;
                a.steps.push((e.seq, *node, statement.clone()));
            }
            EventKind::StepError { .. } => {
                open.as_mut().ok_or_else(|| corrupt(e, "step outside an attempt".into()))?.error_steps += 1;
            }
            EventKind::HintGiven { hint, hint_kind, statement, .. } => {
                let a = open.as_mut().ok_or_else(|| corrupt(e, "hint outside an attempt".into()))?;
                a.hints.push(HintRecord {
                    id: *hint,
                    kind: *hint_kind,
                    statement: statement.clone(),
                    given_at: e.t,
                    justified: false,
                    needed: false,
                });
                a.hint_seqs.push(e.seq);
            }
            EventKind::HintJustified { .. } | EventKind::AssertionDeleted { .. } => {}
        }
    }
    let last_t = events.last().map(|e| e.t).unwrap_or_default();
    close(open.take(), AttemptEnd::Open, last_t);

    Ok(SessionLog {
        session: first.session.clone(),
        student: student.clone(),
        condition: *condition,
        events: events.to_vec(),
        attempts,
    })
}
