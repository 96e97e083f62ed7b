//! When hints are delivered: on request, after inactivity (Messages), or
//! attached to verified steps (Assertions).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hints::HintContent;
use crate::logic::{Formula, NodeId};

/// Milliseconds on the session clock.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn from_secs(s: u64) -> Self {
        Timestamp(s * 1000)
    }

    pub fn millis_since(self, earlier: Timestamp) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

pub const INACTIVITY_MS: u64 = 60_000;
pub const MAX_CONSECUTIVE_ASSERTIONS: u8 = 2;
pub const ASSERTION_PROMPT: &str = "Try to justify the added goal";

pub fn derive_prompt(statement: &Formula) -> String {
    format!("Try to derive {}", statement.render())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    Assertions,
    Messages,
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "assertions" | "assertion" => Ok(Condition::Assertions),
            "messages" | "message" => Ok(Condition::Messages),
            other => Err(format!("unknown condition '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HintKind {
    OnDemand,
    Message,
    Assertion,
}

impl HintKind {
    pub fn is_unsolicited(self) -> bool {
        self != HintKind::OnDemand
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintEvent {
    pub id: u32,
    pub kind: HintKind,
    pub content: HintContent,
    pub issued_at: Timestamp,
    pub justified_at: Option<Timestamp>,
    /// Workspace node carrying an Assertion.
    pub node: Option<NodeId>,
}

impl HintEvent {
    pub fn message_text(&self) -> String {
        match self.kind {
            HintKind::Assertion => ASSERTION_PROMPT.to_string(),
            _ => derive_prompt(&self.content.statement),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssertionDecision {
    Issue(HintEvent),
    Skip,
}

/// Hint-delivery state of one session.
#[derive(Clone, Debug)]
pub struct PolicyState {
    condition: Condition,
    consecutive_run: u8,
    pending: Option<HintEvent>,
    last_activity: Timestamp,
    rng: ChaCha8Rng,
    next_hint_id: u32,
}

impl PolicyState {
    pub fn new(condition: Condition, seed: u64, now: Timestamp) -> Self {
        PolicyState {
            condition,
            consecutive_run: 0,
            pending: None,
            last_activity: now,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_hint_id: 1,
        }
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn consecutive_run(&self) -> u8 {
        self.consecutive_run
    }

    pub fn pending(&self) -> Option<&HintEvent> {
        self.pending.as_ref()
    }

    pub fn last_activity(&self) -> Timestamp {
        self.last_activity
    }

    pub fn touch(&mut self, now: Timestamp) {
        self.last_activity = self.last_activity.max(now);
    }

    fn new_event(&mut self, kind: HintKind, content: HintContent, now: Timestamp) -> HintEvent {
        let id = self.next_hint_id;
        self.next_hint_id += 1;
        HintEvent { id, kind, content, issued_at: now, justified_at: None, node: None }
    }

    /// Coin flip for an Assertion after a verified step, subject to the
    /// run-length and one-pending limits. Issuing makes the hint pending.
    pub fn schedule_assertion(&mut self, hint: HintContent, now: Timestamp) -> AssertionDecision {
        if self.condition != Condition::Assertions {
            return AssertionDecision::Skip;
        }
        let heads = self.rng.gen_bool(0.5);
        if !heads || self.pending.is_some() || self.consecutive_run >= MAX_CONSECUTIVE_ASSERTIONS {
            self.consecutive_run = 0;
            return AssertionDecision::Skip;
        }
        self.consecutive_run += 1;
        let event = self.new_event(HintKind::Assertion, hint, now);
        self.pending = Some(event.clone());
        AssertionDecision::Issue(event)
    }

    /// Attaches the workspace node that displays the pending Assertion.
    pub fn set_pending_node(&mut self, node: NodeId) {
        if let Some(p) = self.pending.as_mut() {
            p.node = Some(node);
        }
    }

    /// Issues a Message once the student has been idle for a full minute and
    /// nothing unsolicited is pending. `hint` is only consulted when a
    /// Message is due.
    pub fn check_inactivity<F>(&mut self, now: Timestamp, hint: F) -> Option<HintEvent>
    where
        F: FnOnce() -> Option<HintContent>,
    {
        if self.condition != Condition::Messages
            || self.pending.is_some()
            || now.millis_since(self.last_activity) < INACTIVITY_MS
        {
            return None;
        }
        let content = hint()?;
        let event = self.new_event(HintKind::Message, content, now);
        self.pending = Some(event.clone());
        Some(event)
    }

    /// On-demand hint; never becomes the pending unsolicited hint.
    pub fn request_hint(&mut self, hint: HintContent, now: Timestamp) -> HintEvent {
        self.touch(now);
        self.new_event(HintKind::OnDemand, hint, now)
    }

    /// Called after every verified step. Returns the pending hint if the step
    /// derived its content.
    pub fn resolve_justification(&mut self, verified: &Formula, now: Timestamp) -> Option<HintEvent> {
        self.touch(now);
        if self.pending.as_ref().is_some_and(|p| &p.content.statement == verified) {
            let mut done = self.pending.take().expect("checked above");
            done.justified_at = Some(now);
            return Some(done);
        }
        None
    }

    /// Drops the pending hint (restart, skip, new problem, or deletion).
    pub fn clear_pending(&mut self) -> Option<HintEvent> {
        self.pending.take()
    }
}
