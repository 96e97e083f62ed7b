use tutor_analytics::{
    effort_metrics, hint_metrics, performance_metrics, reconstruct, AnalyticsError, AttemptEnd, HintCounts,
};
use tutor_core::logic::{Formula, NodeId, Rule};
use tutor_core::policy::{Condition, HintKind, Timestamp};
use tutor_core::session::{EventKind, InteractionEvent, Phase};

struct LogBuilder {
    events: Vec<InteractionEvent>,
    phase: Phase,
    problem: Option<String>,
}

fn f(s: &str) -> Formula {
    s.parse().unwrap()
}

fn ids(v: &[u32]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId(i)).collect()
}

impl LogBuilder {
    fn new() -> Self {
        let mut b = LogBuilder { events: Vec::new(), phase: Phase::Intro, problem: None };
        b.push(0, EventKind::SessionStarted { student: "stu".into(), condition: Condition::Assertions, seed: 1 });
        b
    }

    fn push(&mut self, secs: u64, kind: EventKind) -> &mut Self {
        self.events.push(InteractionEvent {
            seq: self.events.len() as u64,
            t: Timestamp::from_secs(secs),
            session: "c1".into(),
            phase: self.phase,
            level: (self.phase == Phase::Training).then_some(1),
            problem: self.problem.clone(),
            kind,
        });
        self
    }

    fn start(&mut self, secs: u64, phase: Phase, id: &str, premises: &[&str], conclusion: &str) -> &mut Self {
        self.phase = phase;
        self.problem = Some(id.into());
        let premises = premises.iter().map(|p| f(p)).collect();
        self.push(secs, EventKind::ProblemStarted { premises, conclusion: f(conclusion) })
    }

    fn valid(&mut self, secs: u64, rule: Rule, src: &[u32], stmt: &str, node: u32) -> &mut Self {
        self.push(secs, EventKind::StepValid { rule, sources: ids(src), statement: f(stmt), node: NodeId(node) })
    }

    fn error(&mut self, secs: u64, rule: Rule, src: &[u32], stmt: &str) -> &mut Self {
        self.push(secs, EventKind::StepError { rule, sources: ids(src), statement: f(stmt), feedback: "no".into() })
    }

    fn hint(&mut self, secs: u64, id: u32, kind: HintKind, stmt: &str, node: Option<u32>) -> &mut Self {
        self.push(secs, EventKind::HintGiven { hint: id, hint_kind: kind, statement: f(stmt), node: node.map(NodeId) })
    }
}

/// Two pretest problems, one training problem solved after a restart, and
/// two training problems skipped after four minutes each.
fn crafted() -> Vec<InteractionEvent> {
    let mut b = LogBuilder::new();
    b.start(0, Phase::Pretest, "p1", &["A->B", "A"], "B")
        .error(30, Rule::MP, &[1, 2], "C")
        .valid(60, Rule::MP, &[1, 2], "B", 0)
        .push(60, EventKind::ProblemComplete { length: 1 })
        .start(60, Phase::Pretest, "p2", &["A&B"], "B&A")
        .valid(760, Rule::Simp, &[1], "A", 3)
        .valid(800, Rule::Simp, &[1], "B", 4)
        .valid(820, Rule::Conj, &[4, 3], "B&A", 0)
        .push(820, EventKind::ProblemComplete { length: 3 })
        .start(820, Phase::Training, "t1", &["A->B", "A", "C&D"], "B")
        .hint(840, 1, HintKind::OnDemand, "B", None)
        .valid(850, Rule::Simp, &[3], "C", 4)
        .hint(850, 2, HintKind::Assertion, "D", Some(5))
        .valid(870, Rule::Simp, &[3], "D", 5)
        .push(870, EventKind::HintJustified { hint: 2, node: NodeId(5) })
        .hint(870, 3, HintKind::Assertion, "B", Some(6))
        .push(900, EventKind::Restart)
        .hint(960, 4, HintKind::Message, "B", None)
        .valid(980, Rule::MP, &[1, 2], "B", 0)
        .push(980, EventKind::HintJustified { hint: 4, node: NodeId(0) })
        .push(980, EventKind::ProblemComplete { length: 1 })
        .start(980, Phase::Training, "t2", &["A"], "A|B")
        .error(1100, Rule::DN, &[1], "B")
        .push(1220, EventKind::Skip { skips_used: 1 })
        .start(1220, Phase::Training, "t3", &["A", "A->B"], "B|C")
        .push(1280, EventKind::Restart)
        .push(1460, EventKind::Skip { skips_used: 2 });
    b.events
}

#[test]
fn hint_counts_match_hand_tally() {
    let log = reconstruct(&crafted()).unwrap();
    let m = hint_metrics(&log);
    assert_eq!(m.on_demand, HintCounts { given: 1, justified: 0, needed: 0 });
    // Assertion D is justified but outside the conclusion's support.
    assert_eq!(m.assertion, HintCounts { given: 2, justified: 1, needed: 0 });
    assert_eq!(m.message, HintCounts { given: 1, justified: 1, needed: 1 });
    let total = m.total();
    assert_eq!(total, HintCounts { given: 4, justified: 2, needed: 1 });
    assert_eq!(total.hjr(), Some(0.5));
    assert_eq!(total.hnr(), Some(0.25));
    assert_eq!(m.unsolicited().hjr(), Some(2.0 / 3.0));
}

#[test]
fn attempts_split_on_restart_and_skip() {
    let log = reconstruct(&crafted()).unwrap();
    let ends: Vec<(&str, AttemptEnd)> = log.attempts.iter().map(|a| (a.problem.as_str(), a.end)).collect();
    assert_eq!(
        ends,
        vec![
            ("p1", AttemptEnd::Completed),
            ("p2", AttemptEnd::Completed),
            ("t1", AttemptEnd::Restarted),
            ("t1", AttemptEnd::Completed),
            ("t2", AttemptEnd::Skipped),
            ("t3", AttemptEnd::Restarted),
            ("t3", AttemptEnd::Skipped),
        ]
    );
}

#[test]
fn pretest_performance_with_capped_gap() {
    let log = reconstruct(&crafted()).unwrap();
    let p = performance_metrics(&log, Phase::Pretest).unwrap();
    // Gaps 30+30+0+0+min(700,300)+40+20+0 seconds.
    assert!((p.time_minutes - 7.0).abs() < 1e-12);
    assert_eq!(p.avg_length, 2.0);
    assert_eq!((p.valid_steps, p.error_steps), (4, 1));
    assert_eq!(p.accuracy, 0.8);
}

#[test]
fn effort_counts_unsolved_time_and_solved_restarts() {
    let log = reconstruct(&crafted()).unwrap();
    let e = effort_metrics(&log);
    assert!((e.unsolved_minutes - 8.0).abs() < 1e-12);
    // The restart on t3 does not count: t3 was never solved.
    assert_eq!(e.restarts, 1);
}

#[test]
fn missing_posttest_is_incomplete() {
    let log = reconstruct(&crafted()).unwrap();
    assert_eq!(
        performance_metrics(&log, Phase::Posttest),
        Err(AnalyticsError::IncompletePhase { phase: Phase::Posttest, solved: 0, required: 4 })
    );
}

#[test]
fn no_skips_no_restarts_means_no_effort() {
    let mut b = LogBuilder::new();
    b.start(0, Phase::Training, "t1", &["A->B", "A"], "B")
        .valid(20, Rule::MP, &[1, 2], "B", 0)
        .push(20, EventKind::ProblemComplete { length: 1 });
    let e = effort_metrics(&reconstruct(&b.events).unwrap());
    assert_eq!((e.unsolved_minutes, e.restarts), (0.0, 0));
}

#[test]
fn zero_accuracy_errors_give_perfect_accuracy() {
    let mut b = LogBuilder::new();
    b.start(0, Phase::Pretest, "p1", &["A->B", "A"], "B")
        .valid(20, Rule::MP, &[1, 2], "B", 0)
        .push(20, EventKind::ProblemComplete { length: 1 })
        .start(20, Phase::Pretest, "p2", &["A"], "A|B")
        .valid(50, Rule::Add, &[1], "A|B", 0)
        .push(50, EventKind::ProblemComplete { length: 1 });
    let p = performance_metrics(&reconstruct(&b.events).unwrap(), Phase::Pretest).unwrap();
    assert_eq!(p.accuracy, 1.0);
    assert!((p.time_minutes - 50.0 / 60.0).abs() < 1e-12);
}

#[test]
fn corrupt_logs_are_rejected() {
    let mut events = crafted();
    events[5].t = Timestamp(0);
    assert!(matches!(reconstruct(&events), Err(AnalyticsError::CorruptLog { .. })));
    let mut events = crafted();
    if let EventKind::StepValid { sources, .. } = &mut events[3].kind {
        *sources = vec![NodeId(9)];
    }
    assert!(matches!(reconstruct(&events), Err(AnalyticsError::CorruptLog { .. })));
    assert_eq!(reconstruct(&[]), Err(AnalyticsError::EmptyLog));
}
