//! Headless simulated students driving sessions on a virtual clock.

use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{enumerate_one_step, verify_step, Formula, NodeId, ProofGraph, Rule};
use crate::policy::{Condition, Timestamp};
use crate::session::{Curriculum, Phase, Session, SessionError};

/// Server sweep period for inactivity checks.
pub const SWEEP_MS: u64 = 5_000;
const MAX_ACTIONS: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    FollowHints,
    IgnoreHints,
    Random,
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "followhints" | "follow" => Ok(AgentKind::FollowHints),
            "ignorehints" | "ignore" => Ok(AgentKind::IgnoreHints),
            "random" => Ok(AgentKind::Random),
            _ => Err(format!("unknown policy '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Uniform think time range in seconds for ordinary actions.
    pub think_secs: (u64, u64),
    pub long_pause_prob: f64,
    pub long_pause_secs: (u64, u64),
    pub error_rate: f64,
    pub hint_request_rate: f64,
    pub skip_rate: f64,
    pub restart_rate: f64,
    /// Random agent: chance of a random legal derivation instead of a plan step.
    pub explore: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            think_secs: (5, 40),
            long_pause_prob: 0.15,
            long_pause_secs: (60, 200),
            error_rate: 0.12,
            hint_request_rate: 0.05,
            skip_rate: 0.02,
            restart_rate: 0.02,
            explore: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionMix {
    All(Condition),
    /// Even-numbered sessions get Assertions, odd ones Messages.
    Alternating,
}

impl FromStr for ConditionMix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mixed" | "alternating" | "both" => Ok(ConditionMix::Alternating),
            other => other.parse().map(ConditionMix::All),
        }
    }
}

impl ConditionMix {
    pub fn for_session(self, index: usize) -> Condition {
        match self {
            ConditionMix::All(c) => c,
            ConditionMix::Alternating if index.is_multiple_of(2) => Condition::Assertions,
            ConditionMix::Alternating => Condition::Messages,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n: usize,
    pub conditions: ConditionMix,
    pub agent: AgentKind,
    pub seed: u64,
    pub params: AgentParams,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("session {session}: {source}")]
    Engine { session: String, source: SessionError },
    #[error("session {0} did not finish within the action budget")]
    Stuck(String),
}

pub fn session_id(index: usize) -> String {
    format!("s{index:04}")
}

/// Runs `config.n` complete sessions. Each session's outcome depends only on
/// the cohort seed and its index.
pub fn simulate_cohort(curriculum: &Arc<Curriculum>, config: &CohortConfig) -> Result<Vec<Session>, SimError> {
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.n).map(|_| seeder.gen()).collect();
    seeds
        .into_iter()
        .enumerate()
        .map(|(i, seed)| {
            simulate_session(
                curriculum,
                &session_id(i),
                &format!("student-{i:04}"),
                config.conditions.for_session(i),
                config.agent,
                &config.params,
                seed,
            )
        })
        .collect()
}

pub fn simulate_session(
    curriculum: &Arc<Curriculum>,
    id: &str,
    student: &str,
    condition: Condition,
    agent: AgentKind,
    params: &AgentParams,
    seed: u64,
) -> Result<Session, SimError> {
    let engine = |source| SimError::Engine { session: id.to_string(), source };
    let mut session = Session::create(id, student, condition, seed, curriculum.clone(), Timestamp(0)).map_err(engine)?;
    let mut student = Student { kind: agent, params: *params, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0fa_9e27), target: None };
    let mut now = 0u64;
    for _ in 0..MAX_ACTIONS {
        if session.is_done() {
            return Ok(session);
        }
        let act_at = now + student.think_ms();
        let mut sweep = (now / SWEEP_MS + 1) * SWEEP_MS;
        while sweep <= act_at {
            session.tick(Timestamp(sweep)).map_err(engine)?;
            sweep += SWEEP_MS;
        }
        now = act_at;
        student.act(&mut session, Timestamp(now)).map_err(engine)?;
    }
    Err(SimError::Stuck(id.to_string()))
}

struct Student {
    kind: AgentKind,
    params: AgentParams,
    rng: ChaCha8Rng,
    /// Content of the last on-demand hint still worth following.
    target: Option<Formula>,
}

impl Student {
    fn think_ms(&mut self) -> u64 {
        let (lo, hi) = if self.rng.gen_bool(self.params.long_pause_prob) {
            self.params.long_pause_secs
        } else {
            self.params.think_secs
        };
        self.rng.gen_range(lo * 1000..=hi * 1000)
    }

    fn act(&mut self, s: &mut Session, now: Timestamp) -> Result<(), SessionError> {
        if s.phase() == Phase::Intro {
            return s.advance_example(now);
        }
        let training = s.phase() == Phase::Training;
        let graph = &s.attempt().expect("solving phases have an attempt").graph;
        let has_work = graph.nodes().len() > graph.premises().count() + 1;

        if self.rng.gen_bool(self.params.error_rate) {
            let (rule, sources, derived) = self.mistake(graph);
            s.submit_step(&sources, rule, &derived.render(), now)?;
            return Ok(());
        }
        if training && s.skips_used() < crate::session::SKIPS_PER_LEVEL && self.rng.gen_bool(self.params.skip_rate) {
            match s.skip_problem(now) {
                Ok(()) | Err(SessionError::NoAlternativeProblem) => {
                    self.target = None;
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        }
        if has_work && self.rng.gen_bool(self.params.restart_rate) {
            self.target = None;
            return s.restart_problem(now);
        }
        if training && self.rng.gen_bool(self.params.hint_request_rate) {
            let hint = s.request_hint(now)?;
            self.target = Some(hint.content.statement);
            return Ok(());
        }

        let (rule, sources, derived) = self.next_derivation(s);
        let problem = s.problem().map(|p| p.id.clone());
        s.submit_step(&sources, rule, &derived.render(), now)?;
        if s.problem().map(|p| p.id.clone()) != problem
            || self.target.as_ref().is_some_and(|t| s.attempt().is_some_and(|a| a.graph.statements().contains(t)))
        {
            self.target = None;
        }
        Ok(())
    }

    fn mistake(&mut self, graph: &ProofGraph) -> (Rule, Vec<NodeId>, Formula) {
        let established: Vec<NodeId> = graph.nodes().iter().filter(|n| n.is_established()).map(|n| n.id).collect();
        let rule = *Rule::ALL.choose(&mut self.rng).expect("rules exist");
        let sources: Vec<NodeId> = (0..rule.arity()).map(|_| *established.choose(&mut self.rng).expect("premises exist")).collect();
        let first = graph.node(sources[0]).expect("chosen from graph").statement.clone();
        (rule, sources, Formula::not(first))
    }

    fn next_derivation(&mut self, s: &Session) -> (Rule, Vec<NodeId>, Formula) {
        let graph = &s.attempt().expect("solving phases have an attempt").graph;
        if self.kind == AgentKind::FollowHints {
            let wanted = s.pending_hint().map(|h| h.content.statement.clone()).or_else(|| self.target.clone());
            if let Some(step) = wanted.and_then(|w| find_derivation(graph, &w)) {
                return step;
            }
        }
        if self.kind == AgentKind::Random && self.rng.gen_bool(self.params.explore) {
            let present = graph.statements();
            let options: Vec<Formula> =
                enumerate_one_step(present.iter()).into_iter().filter(|f| !present.contains(f)).collect();
            if let Some(step) = options.choose(&mut self.rng).and_then(|f| find_derivation(graph, f)) {
                return step;
            }
        }
        plan_step(s).expect("the expert plan always has a next step")
    }
}

/// Next unmet step of the current problem's expert solution.
pub fn plan_step(s: &Session) -> Option<(Rule, Vec<NodeId>, Formula)> {
    let problem = s.problem()?;
    let graph = &s.attempt()?.graph;
    let present = graph.statements();
    problem.expert.iter().filter(|st| !present.contains(&st.derived)).find_map(|st| {
        let sources = st.sources.iter().map(|f| established_id(graph, f)).collect::<Option<Vec<_>>>()?;
        Some((st.rule, sources, st.derived.clone()))
    })
}

fn established_id(graph: &ProofGraph, f: &Formula) -> Option<NodeId> {
    graph.nodes().iter().find(|n| n.is_established() && &n.statement == f).map(|n| n.id)
}

/// Some rule application deriving `target` from established nodes.
pub fn find_derivation(graph: &ProofGraph, target: &Formula) -> Option<(Rule, Vec<NodeId>, Formula)> {
    let mut nodes: Vec<(NodeId, &Formula)> = Vec::new();
    for n in graph.nodes().iter().filter(|n| n.is_established()) {
        if !nodes.iter().any(|(_, f)| *f == &n.statement) {
            nodes.push((n.id, &n.statement));
        }
    }
    for rule in Rule::ALL {
        match rule.arity() {
            1 => {
                for (id, f) in &nodes {
                    if verify_step(rule, &[(*f).clone()], target).is_valid() {
                        return Some((rule, vec![*id], target.clone()));
                    }
                }
            }
            _ => {
                for (i, (a, fa)) in nodes.iter().enumerate() {
                    for (j, (b, fb)) in nodes.iter().enumerate() {
                        if i != j && verify_step(rule, &[(*fa).clone(), (*fb).clone()], target).is_valid() {
                            return Some((rule, vec![*a, *b], target.clone()));
                        }
                    }
                }
            }
        }
    }
    None
}
