use std::collections::BTreeSet;

use tutor_core::policy::{Condition, HintKind};
use tutor_core::session::{EventKind, InteractionEvent, Phase, POSTTEST_PROBLEMS, PRETEST_PROBLEMS};

use crate::log::{AttemptEnd, SessionLog};
use crate::AnalyticsError;

/// Longest inter-event gap credited as working time.
pub const GAP_CAP_MS: u64 = 300_000;

fn capped_gap(a: &InteractionEvent, b: &InteractionEvent) -> u64 {
    b.t.millis_since(a.t).min(GAP_CAP_MS)
}

fn minutes(ms: u64) -> f64 {
    ms as f64 / 60_000.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HintCounts {
    pub given: usize,
    pub justified: usize,
    pub needed: usize,
}

impl HintCounts {
    /// Justified over given; `None` without hints.
    pub fn hjr(&self) -> Option<f64> {
        (self.given > 0).then(|| self.justified as f64 / self.given as f64)
    }

    /// Needed over given; `None` without hints.
    pub fn hnr(&self) -> Option<f64> {
        (self.given > 0).then(|| self.needed as f64 / self.given as f64)
    }

    fn add(&mut self, other: HintCounts) {
        self.given += other.given;
        self.justified += other.justified;
        self.needed += other.needed;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HintMetrics {
    pub on_demand: HintCounts,
    pub message: HintCounts,
    pub assertion: HintCounts,
}

impl HintMetrics {
    pub fn kind(&self, kind: HintKind) -> HintCounts {
        match kind {
            HintKind::OnDemand => self.on_demand,
            HintKind::Message => self.message,
            HintKind::Assertion => self.assertion,
        }
    }

    /// Messages and Assertions pooled.
    pub fn unsolicited(&self) -> HintCounts {
        let mut c = self.message;
        c.add(self.assertion);
        c
    }

    pub fn total(&self) -> HintCounts {
        let mut c = self.unsolicited();
        c.add(self.on_demand);
        c
    }
}

/// Hint outcomes over all training attempts.
pub fn hint_metrics(log: &SessionLog) -> HintMetrics {
    let mut m = HintMetrics::default();
    for a in log.attempts.iter().filter(|a| a.phase == Phase::Training) {
        for h in &a.hints {
            let c = match h.kind {
                HintKind::OnDemand => &mut m.on_demand,
                HintKind::Message => &mut m.message,
                HintKind::Assertion => &mut m.assertion,
            };
            c.given += 1;
            c.justified += usize::from(h.justified);
            c.needed += usize::from(h.needed);
        }
    }
    let t = m.total();
    assert!(t.needed <= t.justified && t.justified <= t.given, "hint count ordering violated");
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerformanceMetrics {
    pub problems_solved: usize,
    /// Mean solution length over solved problems, in nodes.
    pub avg_length: f64,
    pub time_minutes: f64,
    pub valid_steps: usize,
    pub error_steps: usize,
    pub accuracy: f64,
}

impl PerformanceMetrics {
    pub fn applications(&self) -> usize {
        self.valid_steps + self.error_steps
    }

    /// Minutes per rule application.
    pub fn time_per_step(&self) -> f64 {
        if self.applications() == 0 {
            0.0
        } else {
            self.time_minutes / self.applications() as f64
        }
    }
}

pub fn performance_metrics(log: &SessionLog, phase: Phase) -> Result<PerformanceMetrics, AnalyticsError> {
    let required = match phase {
        Phase::Pretest => PRETEST_PROBLEMS,
        Phase::Posttest => POSTTEST_PROBLEMS,
        _ => 0,
    };
    let attempts: Vec<_> = log.attempts.iter().filter(|a| a.phase == phase).collect();
    let lengths: Vec<usize> = attempts.iter().filter(|a| a.end == AttemptEnd::Completed).filter_map(|a| a.length).collect();
    if lengths.len() < required {
        return Err(AnalyticsError::IncompletePhase { phase, solved: lengths.len(), required });
    }
    let time_ms: u64 = log
        .events
        .windows(2)
        .filter(|w| w[0].phase == phase && w[1].phase == phase)
        .map(|w| capped_gap(&w[0], &w[1]))
        .sum();
    let valid_steps: usize = attempts.iter().map(|a| a.valid_steps).sum();
    let error_steps: usize = attempts.iter().map(|a| a.error_steps).sum();
    let total = valid_steps + error_steps;
    Ok(PerformanceMetrics {
        problems_solved: lengths.len(),
        avg_length: if lengths.is_empty() { 0.0 } else { lengths.iter().sum::<usize>() as f64 / lengths.len() as f64 },
        time_minutes: minutes(time_ms),
        valid_steps,
        error_steps,
        accuracy: if total == 0 { 1.0 } else { valid_steps as f64 / total as f64 },
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EffortMetrics {
    /// Capped time on training problems the student never solved.
    pub unsolved_minutes: f64,
    /// Restarts on training problems the student eventually solved.
    pub restarts: usize,
}

pub fn effort_metrics(log: &SessionLog) -> EffortMetrics {
    let solved: BTreeSet<&str> = log
        .events
        .iter()
        .filter(|e| e.phase == Phase::Training && matches!(e.kind, EventKind::ProblemComplete { .. }))
        .filter_map(|e| e.problem.as_deref())
        .collect();
    let unsolved = |e: &InteractionEvent| {
        e.phase == Phase::Training && e.problem.as_deref().is_some_and(|p| !solved.contains(p))
    };
    // Each gap belongs to the problem of the event that ends it.
    let unsolved_ms: u64 = log.events.windows(2).filter(|w| unsolved(&w[1])).map(|w| capped_gap(&w[0], &w[1])).sum();
    let restarts = log
        .events
        .iter()
        .filter(|e| e.phase == Phase::Training && matches!(e.kind, EventKind::Restart))
        .filter(|e| e.problem.as_deref().is_some_and(|p| solved.contains(p)))
        .count();
    EffortMetrics { unsolved_minutes: minutes(unsolved_ms), restarts }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudentMetrics {
    pub session: String,
    pub student: String,
    pub condition: Condition,
    pub hints: HintMetrics,
    pub pretest: Result<PerformanceMetrics, AnalyticsError>,
    pub posttest: Result<PerformanceMetrics, AnalyticsError>,
    pub effort: EffortMetrics,
}

pub fn student_metrics(log: &SessionLog) -> StudentMetrics {
    StudentMetrics {
        session: log.session.clone(),
        student: log.student.clone(),
        condition: log.condition,
        hints: hint_metrics(log),
        pretest: performance_metrics(log, Phase::Pretest),
        posttest: performance_metrics(log, Phase::Posttest),
        effort: effort_metrics(log),
    }
}
