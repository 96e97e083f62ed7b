use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::bank::{
    Curriculum, Level, Problem, INTRO_EXAMPLES, POSTTEST_PROBLEMS, PRETEST_PROBLEMS, SKIPS_PER_LEVEL,
    SOLVES_PER_LEVEL, TRAINING_LEVELS,
};
use super::events::{EventKind, InteractionEvent, Phase};
use super::SessionError;
use crate::hints::{canonical_state, StateKey};
use crate::logic::{
    verify_step, Formula, GraphError, NodeColor, NodeId, Outcome, ProofGraph, ProofNode, Rule, Verdict,
};
use crate::policy::{AssertionDecision, Condition, HintEvent, HintKind, PolicyState, Timestamp};

/// The problem currently on screen.
#[derive(Clone, Debug, PartialEq)]
pub struct Attempt {
    pub problem: String,
    pub graph: ProofGraph,
    /// Canonical states since the last (re)start, oldest first.
    pub history: Vec<StateKey>,
    pub restarts: u32,
}

#[derive(Clone, Debug, PartialEq, Default)]
struct Progress {
    attempted: BTreeSet<String>,
    solved: BTreeSet<String>,
    skipped: BTreeSet<String>,
    skips: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepOutcome {
    pub verdict: Verdict,
    pub node: Option<NodeId>,
    pub justified_hint: Option<u32>,
    pub assertion: Option<HintEvent>,
    pub problem_complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemView {
    pub id: String,
    pub rank: u32,
    pub rules: Vec<Rule>,
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

/// Read-only projection of a session for clients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub student: String,
    pub condition: Condition,
    pub phase: Phase,
    pub level: Option<u8>,
    pub problem: Option<ProblemView>,
    pub nodes: Vec<ProofNode>,
    pub pending_hint: Option<HintEvent>,
    pub message: Option<String>,
    pub skips_used: u8,
    pub can_skip: bool,
    pub can_restart: bool,
    pub can_request_hint: bool,
    pub solved_in_level: usize,
    pub problems_completed: usize,
    pub clock: Timestamp,
}

#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    student: String,
    seed: u64,
    curriculum: Arc<Curriculum>,
    phase: Phase,
    level: u8,
    progress: Progress,
    attempt: Option<Attempt>,
    policy: PolicyState,
    feedback: Option<String>,
    completed: usize,
    events: Vec<InteractionEvent>,
}

impl PartialEq for Session {
    /// Compares everything except the shared curriculum and the RNG stream
    /// position, which are covered by the event log.
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.student == other.student
            && self.seed == other.seed
            && self.phase == other.phase
            && self.level == other.level
            && self.progress == other.progress
            && self.attempt == other.attempt
            && self.policy.pending() == other.policy.pending()
            && self.policy.consecutive_run() == other.policy.consecutive_run()
            && self.policy.last_activity() == other.policy.last_activity()
            && self.feedback == other.feedback
            && self.completed == other.completed
            && self.events == other.events
    }
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        student: impl Into<String>,
        condition: Condition,
        seed: u64,
        curriculum: Arc<Curriculum>,
        now: Timestamp,
    ) -> Result<Self, SessionError> {
        let missing = curriculum.bank().missing_slots();
        if !missing.is_empty() {
            return Err(SessionError::BankIncomplete(missing));
        }
        let student = student.into();
        let mut s = Session {
            id: id.into(),
            student: student.clone(),
            seed,
            curriculum,
            phase: Phase::Intro,
            level: 0,
            progress: Progress::default(),
            attempt: None,
            policy: PolicyState::new(condition, seed, now),
            feedback: None,
            completed: 0,
            events: Vec::new(),
        };
        s.log(now, EventKind::SessionStarted { student, condition, seed });
        s.start_next(now)?;
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn student(&self) -> &str {
        &self.student
    }

    pub fn condition(&self) -> Condition {
        self.policy.condition()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Current training level, 1-based; `None` outside training.
    pub fn level(&self) -> Option<u8> {
        (self.phase == Phase::Training).then_some(self.level)
    }

    pub fn attempt(&self) -> Option<&Attempt> {
        self.attempt.as_ref()
    }

    pub fn problem(&self) -> Option<&Problem> {
        self.attempt.as_ref().and_then(|a| self.curriculum.bank().get(&a.problem))
    }

    pub fn curriculum(&self) -> &Arc<Curriculum> {
        &self.curriculum
    }

    pub fn pending_hint(&self) -> Option<&HintEvent> {
        self.policy.pending()
    }

    pub fn consecutive_assertions(&self) -> u8 {
        self.policy.consecutive_run()
    }

    pub fn skips_used(&self) -> u8 {
        self.progress.skips
    }

    pub fn problems_completed(&self) -> usize {
        self.completed
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn clock(&self) -> Timestamp {
        self.events.last().map(|e| e.t).unwrap_or_default()
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let problem = self.problem().map(|p| ProblemView {
            id: p.id.clone(),
            rank: p.rank,
            rules: p.rules.clone(),
            premises: p.premises.clone(),
            conclusion: p.conclusion.clone(),
        });
        let pending = self.policy.pending().cloned();
        let message = self.feedback.clone().or_else(|| {
            pending.as_ref().filter(|h| h.kind == HintKind::Message).map(HintEvent::message_text)
        });
        SessionSnapshot {
            id: self.id.clone(),
            student: self.student.clone(),
            condition: self.condition(),
            phase: self.phase,
            level: self.level(),
            problem,
            nodes: self.attempt.as_ref().map(|a| a.graph.nodes().to_vec()).unwrap_or_default(),
            pending_hint: pending,
            message,
            skips_used: self.progress.skips,
            can_skip: self.phase == Phase::Training && self.progress.skips < SKIPS_PER_LEVEL,
            can_restart: self.is_solving(),
            can_request_hint: self.phase == Phase::Training,
            solved_in_level: self.progress.solved.len(),
            problems_completed: self.completed,
            clock: self.clock(),
        }
    }

    fn is_solving(&self) -> bool {
        matches!(self.phase, Phase::Pretest | Phase::Training | Phase::Posttest) && self.attempt.is_some()
    }

    fn level_key(&self) -> Option<Level> {
        match self.phase {
            Phase::Intro => Some(Level::Intro),
            Phase::Pretest => Some(Level::Pretest),
            Phase::Training => Some(Level::Training(self.level)),
            Phase::Posttest => Some(Level::Posttest),
            Phase::Done => None,
        }
    }

    fn log(&mut self, now: Timestamp, kind: EventKind) {
        let event = InteractionEvent {
            seq: self.events.len() as u64,
            t: now,
            session: self.id.clone(),
            phase: self.phase,
            level: self.level(),
            problem: self.attempt.as_ref().map(|a| a.problem.clone()),
            kind,
        };
        self.events.push(event);
    }

    fn check_clock(&self, now: Timestamp) -> Result<(), SessionError> {
        let last = self.clock();
        if now < last {
            return Err(SessionError::ClockRegression { last, now });
        }
        Ok(())
    }

    fn begin(&mut self, now: Timestamp) -> Result<(), SessionError> {
        self.check_clock(now)?;
        self.feedback = None;
        Ok(())
    }

    fn require_solving(&self, op: &'static str) -> Result<(), SessionError> {
        if self.is_solving() {
            Ok(())
        } else {
            Err(SessionError::WrongPhase { op, phase: self.phase })
        }
    }

    fn require_training(&self, op: &'static str) -> Result<(), SessionError> {
        if self.phase == Phase::Training && self.attempt.is_some() {
            Ok(())
        } else {
            Err(SessionError::WrongPhase { op, phase: self.phase })
        }
    }

    fn level_problems(&self) -> Vec<&Problem> {
        self.level_key().map(|l| self.curriculum.bank().level(l)).unwrap_or_default()
    }

    fn quota(&self) -> usize {
        match self.phase {
            Phase::Intro => INTRO_EXAMPLES,
            Phase::Pretest => PRETEST_PROBLEMS,
            Phase::Training => SOLVES_PER_LEVEL,
            Phase::Posttest => POSTTEST_PROBLEMS,
            Phase::Done => 0,
        }
    }

    /// Next problem of the current level. Fixed-order phases go easiest
    /// first; training goes hardest-unattempted first, then back to skipped
    /// problems.
    fn pick_next(&self) -> Option<String> {
        let problems = self.level_problems();
        if self.phase != Phase::Training {
            return problems.iter().find(|p| !self.progress.solved.contains(&p.id)).map(|p| p.id.clone());
        }
        let unattempted = problems.iter().rev().find(|p| !self.progress.attempted.contains(&p.id));
        let retry = || {
            problems
                .iter()
                .rev()
                .find(|p| self.progress.skipped.contains(&p.id) && !self.progress.solved.contains(&p.id))
        };
        unattempted.or_else(retry).map(|p| p.id.clone())
    }

    fn pick_easier(&self, current: &Problem) -> Option<String> {
        let problems = self.level_problems();
        let open = |p: &&&Problem| !self.progress.attempted.contains(&p.id);
        problems
            .iter()
            .rev()
            .filter(open)
            .find(|p| p.rank < current.rank)
            .or_else(|| problems.iter().rev().find(open))
            .or_else(|| {
                problems.iter().rev().find(|p| {
                    p.id != current.id
                        && self.progress.skipped.contains(&p.id)
                        && !self.progress.solved.contains(&p.id)
                })
            })
            .map(|p| p.id.clone())
    }

    fn start_problem(&mut self, id: String, now: Timestamp) {
        let p = self.curriculum.bank().get(&id).expect("sequenced ids come from the bank").clone();
        let mut graph = ProofGraph::new(p.id.clone(), &p.premises, p.conclusion.clone());
        if self.phase == Phase::Intro {
            play_worked_example(&mut graph, &p);
        }
        let history = vec![canonical_state(&graph)];
        self.progress.attempted.insert(id.clone());
        self.attempt = Some(Attempt { problem: id, graph, history, restarts: 0 });
        self.policy.clear_pending();
        self.policy.touch(now);
        self.log(now, EventKind::ProblemStarted { premises: p.premises, conclusion: p.conclusion });
    }

    /// Loads the next problem, moving to later phases as quotas are met.
    fn start_next(&mut self, now: Timestamp) -> Result<(), SessionError> {
        loop {
            if self.phase == Phase::Done {
                self.attempt = None;
                self.log(now, EventKind::SessionComplete);
                return Ok(());
            }
            if self.progress.solved.len() < self.quota() {
                let id = self.pick_next().ok_or(SessionError::NoAlternativeProblem)?;
                self.start_problem(id, now);
                return Ok(());
            }
            self.progress = Progress::default();
            self.attempt = None;
            (self.phase, self.level) = match (self.phase, self.level) {
                (Phase::Intro, _) => (Phase::Pretest, 0),
                (Phase::Pretest, _) => (Phase::Training, 1),
                (Phase::Training, n) if n < TRAINING_LEVELS => (Phase::Training, n + 1),
                (Phase::Training, _) => (Phase::Posttest, 0),
                (Phase::Posttest, _) | (Phase::Done, _) => (Phase::Done, 0),
            };
        }
    }

    /// Moves past the current worked example.
    pub fn advance_example(&mut self, now: Timestamp) -> Result<(), SessionError> {
        self.begin(now)?;
        if self.phase != Phase::Intro {
            return Err(SessionError::WrongPhase { op: "advance_example", phase: self.phase });
        }
        self.log(now, EventKind::ExampleViewed);
        let id = self.attempt.as_ref().expect("intro always shows an example").problem.clone();
        self.progress.solved.insert(id);
        self.start_next(now)
    }

    pub fn submit_step(
        &mut self,
        sources: &[NodeId],
        rule: Rule,
        derived: &str,
        now: Timestamp,
    ) -> Result<StepOutcome, SessionError> {
        self.begin(now)?;
        self.require_solving("submit_step")?;
        let statement: Formula = derived.parse().map_err(SessionError::MalformedFormula)?;
        let attempt = self.attempt.as_ref().expect("solving implies an attempt");
        let verdict = match attempt.graph.source_statements(sources) {
            Ok(stmts) => verify_step(rule, &stmts, &statement),
            Err(GraphError::UnjustifiedSource(id)) => Verdict {
                outcome: Outcome::MalformedDerivation,
                feedback: format!("Node {id} is not justified yet, so it cannot be used as a source."),
            },
            Err(GraphError::UnknownNode(id)) => return Err(SessionError::UnknownNode(id)),
            Err(e) => unreachable!("source lookup only fails on unknown or unjustified nodes: {e}"),
        };
        if !verdict.is_valid() {
            self.policy.touch(now);
            self.feedback = Some(verdict.feedback.clone());
            self.log(
                now,
                EventKind::StepError {
                    rule,
                    sources: sources.to_vec(),
                    statement,
                    feedback: verdict.feedback.clone(),
                },
            );
            return Ok(StepOutcome {
                verdict,
                node: None,
                justified_hint: None,
                assertion: None,
                problem_complete: false,
            });
        }

        let color = if self.phase == Phase::Training {
            self.curriculum.model(&attempt.problem).map_or(NodeColor::Plain, |m| m.stats.color(&statement))
        } else {
            NodeColor::Plain
        };
        let attempt = self.attempt.as_mut().expect("solving implies an attempt");
        let node = attempt
            .graph
            .add_justified(statement.clone(), rule, sources.to_vec(), color)
            .expect("sources were checked above");
        let state = canonical_state(&attempt.graph);
        if attempt.history.last() != Some(&state) {
            attempt.history.push(state);
        }
        let complete = attempt.graph.is_complete();
        let length = attempt.graph.summary().length;
        self.log(now, EventKind::StepValid { rule, sources: sources.to_vec(), statement: statement.clone(), node });

        let justified = self.policy.resolve_justification(&statement, now);
        if let Some(h) = &justified {
            self.log(now, EventKind::HintJustified { hint: h.id, node });
        }
        let mut outcome = StepOutcome {
            verdict,
            node: Some(node),
            justified_hint: justified.map(|h| h.id),
            assertion: None,
            problem_complete: complete,
        };

        if complete {
            self.log(now, EventKind::ProblemComplete { length: length.expect("complete graphs have a length") });
            self.completed += 1;
            let id = self.attempt.as_ref().expect("still active").problem.clone();
            self.progress.solved.insert(id);
            self.start_next(now)?;
        } else if self.phase == Phase::Training && self.condition() == Condition::Assertions {
            outcome.assertion = self.maybe_assert(now);
        }
        Ok(outcome)
    }

    fn maybe_assert(&mut self, now: Timestamp) -> Option<HintEvent> {
        let attempt = self.attempt.as_ref()?;
        let content = self.curriculum.model(&attempt.problem)?.hint(&attempt.history).ok()?;
        let AssertionDecision::Issue(mut hint) = self.policy.schedule_assertion(content, now) else {
            return None;
        };
        let attempt = self.attempt.as_mut().expect("checked above");
        let node = attempt.graph.add_pending_assertion(hint.content.statement.clone());
        self.policy.set_pending_node(node);
        hint.node = Some(node);
        self.log(
            now,
            EventKind::HintGiven {
                hint: hint.id,
                hint_kind: HintKind::Assertion,
                statement: hint.content.statement.clone(),
                node: Some(node),
            },
        );
        Some(hint)
    }

    /// On-demand hint; training only.
    pub fn request_hint(&mut self, now: Timestamp) -> Result<HintEvent, SessionError> {
        self.begin(now)?;
        self.require_training("request_hint")?;
        let attempt = self.attempt.as_ref().expect("training implies an attempt");
        let model = self
            .curriculum
            .model(&attempt.problem)
            .ok_or_else(|| crate::hints::HintError::NoHintSource(attempt.problem.clone()))?;
        let content = model.hint(&attempt.history)?;
        let hint = self.policy.request_hint(content, now);
        self.feedback = Some(hint.message_text());
        self.log(
            now,
            EventKind::HintGiven {
                hint: hint.id,
                hint_kind: HintKind::OnDemand,
                statement: hint.content.statement.clone(),
                node: None,
            },
        );
        Ok(hint)
    }

    /// Advances the clock without student action; may issue a Message.
    pub fn tick(&mut self, now: Timestamp) -> Result<Option<HintEvent>, SessionError> {
        self.check_clock(now)?;
        if self.phase != Phase::Training {
            return Ok(None);
        }
        let Some(attempt) = self.attempt.as_ref() else { return Ok(None) };
        let model = self.curriculum.model(&attempt.problem);
        let history = &attempt.history;
        let Some(hint) = self.policy.check_inactivity(now, || model.and_then(|m| m.hint(history).ok())) else {
            return Ok(None);
        };
        self.feedback = None;
        self.log(
            now,
            EventKind::HintGiven {
                hint: hint.id,
                hint_kind: HintKind::Message,
                statement: hint.content.statement.clone(),
                node: None,
            },
        );
        Ok(Some(hint))
    }

    pub fn skip_problem(&mut self, now: Timestamp) -> Result<(), SessionError> {
        self.begin(now)?;
        self.require_training("skip_problem")?;
        if self.progress.skips >= SKIPS_PER_LEVEL {
            return Err(SessionError::SkipLimitReached);
        }
        let current = self.problem().expect("training implies a problem").clone();
        let target = self.pick_easier(&current).ok_or(SessionError::NoAlternativeProblem)?;
        self.progress.skips += 1;
        self.progress.skipped.insert(current.id);
        self.log(now, EventKind::Skip { skips_used: self.progress.skips });
        self.start_problem(target, now);
        Ok(())
    }

    pub fn restart_problem(&mut self, now: Timestamp) -> Result<(), SessionError> {
        self.begin(now)?;
        self.require_solving("restart_problem")?;
        let attempt = self.attempt.as_mut().expect("solving implies an attempt");
        attempt.graph.restart();
        attempt.history = vec![canonical_state(&attempt.graph)];
        attempt.restarts += 1;
        self.policy.clear_pending();
        self.policy.touch(now);
        self.log(now, EventKind::Restart);
        Ok(())
    }

    pub fn delete_assertion(&mut self, node: NodeId, now: Timestamp) -> Result<(), SessionError> {
        self.begin(now)?;
        self.require_solving("delete_assertion")?;
        let attempt = self.attempt.as_mut().expect("solving implies an attempt");
        attempt.graph.remove_pending_assertion(node).map_err(|e| match e {
            GraphError::UnknownNode(id) => SessionError::UnknownNode(id),
            _ => SessionError::NotPending(node),
        })?;
        let hint = match self.policy.pending() {
            Some(p) if p.node == Some(node) => self.policy.clear_pending().map(|p| p.id),
            _ => None,
        };
        self.policy.touch(now);
        self.log(now, EventKind::AssertionDeleted { hint: hint.unwrap_or(0), node });
        Ok(())
    }

    /// Rebuilds a session by re-executing the commands recorded in `events`
    /// and checks that the regenerated log matches line for line.
    pub fn replay(curriculum: Arc<Curriculum>, events: &[InteractionEvent]) -> Result<Self, SessionError> {
        let diverged = |seq: u64, reason: String| SessionError::ReplayDiverged { seq, reason };
        let first = events.first().ok_or_else(|| diverged(0, "empty log".into()))?;
        let EventKind::SessionStarted { student, condition, seed } = &first.kind else {
            return Err(diverged(first.seq, "log does not start with SessionStarted".into()));
        };
        let mut s = Session::create(first.session.clone(), student.clone(), *condition, *seed, curriculum, first.t)?;
        let mut i = s.events.len();
        if events.len() < i || s.events[..] != events[..i] {
            return Err(diverged(first.seq, "session start differs from the log".into()));
        }
        while i < events.len() {
            let e = &events[i];
            match &e.kind {
                EventKind::ExampleViewed => s.advance_example(e.t)?,
                EventKind::StepValid { rule, sources, statement, .. }
                | EventKind::StepError { rule, sources, statement, .. } => {
                    s.submit_step(sources, *rule, &statement.render(), e.t)?;
                }
                EventKind::HintGiven { hint_kind: HintKind::OnDemand, .. } => {
                    s.request_hint(e.t)?;
                }
                EventKind::HintGiven { hint_kind: HintKind::Message, .. } => {
                    s.tick(e.t)?;
                }
                EventKind::Skip { .. } => s.skip_problem(e.t)?,
                EventKind::Restart => s.restart_problem(e.t)?,
                EventKind::AssertionDeleted { node, .. } => s.delete_assertion(*node, e.t)?,
                other => return Err(diverged(e.seq, format!("unexpected {other:?}"))),
            }
            let produced = s.events.len();
            if produced > events.len() || s.events[i..produced] != events[i..produced] {
                return Err(diverged(e.seq, "regenerated events differ from the log".into()));
            }
            if produced == i {
                return Err(diverged(e.seq, "command produced no events".into()));
            }
            i = produced;
        }
        Ok(s)
    }
}

/// Fills a worked example's workspace with its scripted solution.
fn play_worked_example(graph: &mut ProofGraph, p: &Problem) {
    for step in &p.expert {
        let sources: Vec<NodeId> = step
            .sources
            .iter()
            .filter_map(|s| graph.nodes().iter().find(|n| n.is_established() && &n.statement == s).map(|n| n.id))
            .collect();
        if graph.add_justified(step.derived.clone(), step.rule, sources, NodeColor::Plain).is_err() {
            break;
        }
    }
}
