//! The interaction network: canonical states observed in prior solutions,
//! scored with value iteration and queried for next-step hints.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::StateKey;
use super::trace::SolutionTrace;
use super::HintError;
use crate::logic::{verify_step, Formula};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueParams {
    pub goal_reward: f64,
    pub step_cost: f64,
    pub discount: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for ValueParams {
    fn default() -> Self {
        ValueParams { goal_reward: 100.0, step_cost: 1.0, discount: 0.9, epsilon: 1e-6, max_iters: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateInfo {
    pub key: StateKey,
    pub goal: bool,
    pub value: f64,
    /// Number of trace visits, for diagnostics only.
    pub visits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    /// The statement added by this step.
    pub derived: Formula,
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintContent {
    pub statement: Formula,
    pub source_state: StateKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionNetwork {
    problem: String,
    states: Vec<StateInfo>,
    #[serde(skip)]
    index: HashMap<StateKey, usize>,
    transitions: Vec<Transition>,
    #[serde(skip)]
    outgoing: Vec<Vec<usize>>,
    /// Largest value change of each value-iteration sweep.
    sweep_deltas: Vec<f64>,
}

impl InteractionNetwork {
    pub fn new(problem: impl Into<String>) -> Self {
        InteractionNetwork {
            problem: problem.into(),
            states: Vec::new(),
            index: HashMap::new(),
            transitions: Vec::new(),
            outgoing: Vec::new(),
            sweep_deltas: Vec::new(),
        }
    }

    pub fn problem(&self) -> &str {
        &self.problem
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn sweep_deltas(&self) -> &[f64] {
        &self.sweep_deltas
    }

    pub fn state_index(&self, key: &StateKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn value_of(&self, key: &StateKey) -> Option<f64> {
        self.state_index(key).map(|i| self.states[i].value)
    }

    /// Adds a state if unseen and returns its index. A goal flag, once set, sticks.
    pub fn add_state(&mut self, key: StateKey, goal: bool) -> usize {
        if let Some(&i) = self.index.get(&key) {
            self.states[i].goal |= goal;
            self.states[i].visits += 1;
            return i;
        }
        let i = self.states.len();
        self.index.insert(key.clone(), i);
        self.states.push(StateInfo { key, goal, value: 0.0, visits: 1 });
        self.outgoing.push(Vec::new());
        i
    }

    pub fn add_transition(&mut self, from: usize, to: usize, derived: Formula) {
        if let Some(&t) = self.outgoing[from].iter().find(|&&t| self.transitions[t].to == to) {
            self.transitions[t].count += 1;
            return;
        }
        self.outgoing[from].push(self.transitions.len());
        self.transitions.push(Transition { from, to, derived, count: 1 });
    }

    pub fn successors(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[state].iter().map(move |&t| &self.transitions[t])
    }

    fn predecessors_count(&self) -> Vec<usize> {
        let mut counts = vec![0; self.states.len()];
        for t in &self.transitions {
            counts[t.to] += 1;
        }
        counts
    }

    /// Bellman backups until the largest per-sweep change drops below epsilon.
    ///
    /// States that cannot reach a goal are pinned at negative infinity and
    /// excluded from the sweeps so every remaining value stays finite.
    pub fn value_iterate(mut self, params: &ValueParams) -> Result<Self, HintError> {
        if !self.states.iter().any(|s| s.goal) {
            return Err(HintError::NoGoalState(self.problem.clone()));
        }
        let n = self.states.len();
        let mut reaches_goal: Vec<bool> = self.states.iter().map(|s| s.goal).collect();
        loop {
            let mut changed = false;
            for t in &self.transitions {
                if reaches_goal[t.to] && !reaches_goal[t.from] {
                    reaches_goal[t.from] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut values: Vec<f64> = (0..n)
            .map(|i| {
                if self.states[i].goal {
                    params.goal_reward
                } else if reaches_goal[i] {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        self.sweep_deltas.clear();
        for _ in 0..params.max_iters {
            let mut next = values.clone();
            let mut delta: f64 = 0.0;
            for i in 0..n {
                if self.states[i].goal || !reaches_goal[i] {
                    continue;
                }
                let best = self
                    .successors(i)
                    .filter(|t| reaches_goal[t.to])
                    .map(|t| -params.step_cost + params.discount * values[t.to])
                    .fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - values[i]).abs());
                next[i] = best;
            }
            values = next;
            self.sweep_deltas.push(delta);
            if delta < params.epsilon {
                break;
            }
        }
        for (s, v) in self.states.iter_mut().zip(values) {
            s.value = v;
        }
        Ok(self)
    }

    /// Hint for the newest state in `history`, rolling back through earlier
    /// states until one known to the network leads somewhere new.
    ///
    /// From a known state the best successor is chosen: highest value, ties to
    /// the lexicographically smallest rendered statement. Successors whose
    /// statement is already in the newest state are walked through, so the
    /// returned statement is never one the student already has.
    pub fn hint_lookup(&self, history: &[StateKey]) -> Result<HintContent, HintError> {
        let no_hint = || HintError::NoHintSource(self.problem.clone());
        let current = history.last().ok_or_else(no_hint)?;
        for key in history.iter().rev() {
            let Some(mut at) = self.state_index(key) else { continue };
            for _ in 0..self.states.len() {
                if let Some(t) = self.best_successor(at, |t| !current.contains(&t.derived)) {
                    return Ok(HintContent { statement: t.derived.clone(), source_state: key.clone() });
                }
                match self.best_successor(at, |_| true) {
                    Some(t) => at = t.to,
                    None => break,
                }
            }
        }
        Err(no_hint())
    }

    fn best_successor<F>(&self, state: usize, keep: F) -> Option<&Transition>
    where
        F: Fn(&Transition) -> bool,
    {
        self.successors(state)
            .filter(|t| self.states[t.to].value.is_finite() && keep(t))
            .map(|t| (self.states[t.to].value, t.derived.render(), t))
            .reduce(|a, b| match b.0.partial_cmp(&a.0) {
                Some(std::cmp::Ordering::Greater) => b,
                Some(std::cmp::Ordering::Equal) if b.1 < a.1 => b,
                _ => a,
            })
            .map(|(_, _, t)| t)
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let preds = self.predecessors_count();
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 && preds[i] == 0 {
                return Err(format!("state {} has no predecessor", s.key));
            }
        }
        Ok(())
    }

    /// Debug dump: one line per state with value, goal flag and statements,
    /// then one line per transition.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# network {}: {} states, {} transitions", self.problem, self.states.len(), self.transitions.len());
        for (i, s) in self.states.iter().enumerate() {
            let _ = writeln!(out, "state\t{i}\t{:.6}\t{}\t{}", s.value, if s.goal { "goal" } else { "-" }, s.key.canonical());
        }
        for t in &self.transitions {
            let _ = writeln!(out, "edge\t{}\t{}\t{}\t{}", t.from, t.to, t.derived, t.count);
        }
        out
    }

    /// Rebuilds lookup tables after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.states.iter().enumerate().map(|(i, s)| (s.key.clone(), i)).collect();
        self.outgoing = vec![Vec::new(); self.states.len()];
        for (ti, t) in self.transitions.iter().enumerate() {
            self.outgoing[t.from].push(ti);
        }
    }
}

/// Replays one trace from the premises and returns its successive states
/// together with the statement added at each state change.
pub(crate) fn replay_trace(
    premises: &[Formula],
    conclusion: &Formula,
    trace: &SolutionTrace,
    trace_index: usize,
) -> Result<Vec<(StateKey, Option<Formula>)>, HintError> {
    let mut present: Vec<Formula> = premises.to_vec();
    let mut completed = false;
    let mut states = vec![(StateKey::new(present.iter(), false), None)];
    for (step_index, step) in trace.steps.iter().enumerate() {
        let invalid = |reason: String| HintError::InvalidTrace { trace: trace_index, step: step_index + 1, reason };
        if completed {
            return Err(invalid("step after the conclusion was derived".into()));
        }
        if let Some(missing) = step.sources.iter().find(|s| !present.contains(s)) {
            return Err(invalid(format!("source {missing} is not available")));
        }
        let verdict = verify_step(step.rule, &step.sources, &step.derived);
        if !verdict.is_valid() {
            return Err(invalid(verdict.feedback));
        }
        if present.contains(&step.derived) {
            continue;
        }
        present.push(step.derived.clone());
        completed = step.derived == *conclusion;
        states.push((StateKey::new(present.iter(), completed), Some(step.derived.clone())));
    }
    if !completed {
        return Err(HintError::InvalidTrace {
            trace: trace_index,
            step: trace.steps.len(),
            reason: "trace does not derive the conclusion".into(),
        });
    }
    Ok(states)
}

/// Builds the network for one problem from prior complete solutions, seeded
/// with the expert solution so the initial state always has a successor.
pub fn build_network(
    problem: &str,
    premises: &[Formula],
    conclusion: &Formula,
    traces: &[SolutionTrace],
    expert: &SolutionTrace,
) -> Result<InteractionNetwork, HintError> {
    let mut net = InteractionNetwork::new(problem);
    for (i, trace) in std::iter::once(expert).chain(traces).enumerate() {
        let states = replay_trace(premises, conclusion, trace, i)?;
        let mut prev: Option<usize> = None;
        for (key, derived) in states {
            let goal = key.completed();
            let idx = net.add_state(key, goal);
            if let (Some(p), Some(d)) = (prev, derived) {
                net.add_transition(p, idx, d);
            }
            prev = Some(idx);
        }
    }
    Ok(net)
}
