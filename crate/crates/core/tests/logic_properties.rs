use std::collections::BTreeSet;

use proptest::prelude::*;
use tutor_core::logic::{
    apply_rule, verify_step, Formula, NodeColor, NodeId, NodeKind, ProofGraph, Rule,
};

pub fn formula_strategy(max_depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = (0u8..6).prop_map(|i| Formula::Atom((b'A' + i) as char));
    leaf.prop_recursive(max_depth, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::iff(l, r)),
        ]
    })
}

/// Truth-table entailment over every assignment of the atoms involved.
fn entails(sources: &[Formula], target: &Formula) -> bool {
    let atoms = sources.iter().fold(target.atoms(), |acc, f| acc | f.atoms());
    let positions: Vec<u32> = (0..26).filter(|b| atoms & (1 << b) != 0).collect();
    (0u32..(1 << positions.len())).all(|mask| {
        let assignment = positions
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .fold(0u32, |acc, (_, b)| acc | (1 << b));
        !sources.iter().all(|s| s.eval(assignment)) || target.eval(assignment)
    })
}

fn rule_strategy() -> impl Strategy<Value = Rule> {
    proptest::sample::select(Rule::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn render_parse_roundtrip(f in formula_strategy(6)) {
        let text = f.render();
        let back = Formula::parse(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(back.render(), text);
    }

    #[test]
    fn verified_steps_are_truth_table_sound(
        rule in rule_strategy(),
        a in formula_strategy(3),
        b in formula_strategy(3),
        noise in formula_strategy(3),
    ) {
        let sources: Vec<Formula> = if rule.arity() == 1 { vec![a] } else { vec![a, b] };
        let mut candidates: Vec<Formula> = apply_rule(rule, &sources).unwrap_or_default().into_iter().collect();
        candidates.push(noise.clone());
        candidates.push(Formula::or(sources[0].clone(), noise));
        for d in candidates {
            let verdict = verify_step(rule, &sources, &d);
            if verdict.is_valid() {
                prop_assert!(entails(&sources, &d), "{rule} {:?} |- {} is unsound", sources, d);
            }
            if rule.is_finitely_productive() {
                let produced = apply_rule(rule, &sources).unwrap();
                prop_assert_eq!(verdict.is_valid(), produced.contains(&d));
            }
        }
    }

    #[test]
    fn structured_sources_are_sound(p in formula_strategy(2), q in formula_strategy(2), r in formula_strategy(2)) {
        // Shapes that actually fire the binary rules.
        let cases = vec![
            (Rule::MP, vec![Formula::implies(p.clone(), q.clone()), p.clone()]),
            (Rule::MT, vec![Formula::implies(p.clone(), q.clone()), Formula::not(q.clone())]),
            (Rule::HS, vec![Formula::implies(p.clone(), q.clone()), Formula::implies(q.clone(), r.clone())]),
            (Rule::DS, vec![Formula::or(p.clone(), q.clone()), Formula::not(p.clone())]),
            (Rule::DS, vec![Formula::or(p.clone(), q.clone()), Formula::not(q.clone())]),
            (Rule::DeM, vec![Formula::not(Formula::and(p.clone(), q.clone()))]),
            (Rule::DeM, vec![Formula::and(Formula::not(p.clone()), Formula::not(q.clone()))]),
            (Rule::Impl, vec![Formula::or(Formula::not(p.clone()), r.clone())]),
        ];
        for (rule, sources) in cases {
            let produced = apply_rule(rule, &sources).unwrap();
            prop_assert!(!produced.is_empty());
            for d in produced {
                prop_assert!(verify_step(rule, &sources, &d).is_valid());
                prop_assert!(entails(&sources, &d));
            }
        }
    }
}

/// Deletion-cascade definition of a needed node: removing it, and every node
/// whose justification references a removed node, leaves the proof incomplete.
fn needed_by_deletion(g: &ProofGraph) -> BTreeSet<NodeId> {
    let ids: Vec<NodeId> = g.nodes().iter().map(|n| n.id).collect();
    ids.iter()
        .copied()
        .filter(|&victim| {
            let mut removed: BTreeSet<NodeId> = [victim].into();
            loop {
                let before = removed.len();
                for n in g.nodes() {
                    if let Some(j) = &n.justification {
                        if j.sources.iter().any(|s| removed.contains(s)) {
                            removed.insert(n.id);
                        }
                    }
                }
                if removed.len() == before {
                    break;
                }
            }
            removed.contains(&NodeId::CONCLUSION)
        })
        .collect()
}

fn random_dag(premises: usize, derived: &[(usize, usize, bool)], conclusion_srcs: (usize, usize)) -> ProofGraph {
    let prem: Vec<Formula> = (0..premises).map(|i| Formula::Atom((b'A' + i as u8) as char)).collect();
    let mut g = ProofGraph::new("dag", &prem, Formula::atom('Z'));
    let mut established: Vec<NodeId> = (1..=premises as u32).map(NodeId).collect();
    for (i, &(x, y, binary)) in derived.iter().enumerate() {
        let a = established[x % established.len()];
        let b = established[y % established.len()];
        let sources = if binary && a != b { vec![a, b] } else { vec![a] };
        let id = NodeId((premises + i + 1) as u32);
        // Statements are irrelevant to the dependency structure.
        let stmt = Formula::not(Formula::Atom((b'A' + (i % 20) as u8) as char));
        g.restore_justified(id, stmt, Rule::Simp, sources).unwrap();
        established.push(id);
    }
    let a = established[conclusion_srcs.0 % established.len()];
    let b = established[conclusion_srcs.1 % established.len()];
    let sources = if a == b { vec![a] } else { vec![a, b] };
    g.restore_justified(NodeId::CONCLUSION, Formula::atom('Z'), Rule::Conj, sources).unwrap();
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn needed_set_matches_deletion_oracle(
        premises in 1usize..6,
        derived in proptest::collection::vec((0usize..100, 0usize..100, any::<bool>()), 0..12),
        concl in (0usize..100, 0usize..100),
    ) {
        let g = random_dag(premises, &derived, concl);
        let needed = g.needed_set().unwrap();
        prop_assert_eq!(&needed, &needed_by_deletion(&g));
        let all: BTreeSet<NodeId> = g.nodes().iter().map(|n| n.id).collect();
        prop_assert!(needed.is_subset(&all));
        prop_assert!(needed.contains(&NodeId::CONCLUSION));

        // Appending a node nothing depends on leaves the needed set alone.
        let mut extended = g.clone();
        let next = NodeId(g.nodes().iter().map(|n| n.id.0).max().unwrap() + 1);
        extended.restore_justified(next, Formula::atom('Y'), Rule::DN, vec![NodeId(1)]).unwrap();
        prop_assert_eq!(extended.needed_set().unwrap(), needed);
    }
}

fn p(s: &str) -> Formula {
    s.parse().unwrap()
}

/// Replays the six-step sample solution through the workspace.
fn sample_solution() -> ProofGraph {
    let mut g = ProofGraph::new("fig1", &[p("A->C"), p("B"), p("C->E"), p("D&~E")], p("~A&B"));
    let steps: [(&str, Rule, &[u32]); 6] = [
        ("D", Rule::Simp, &[4]),
        ("~E", Rule::Simp, &[4]),
        ("~A|C", Rule::Impl, &[1]),
        ("~C", Rule::MT, &[3, 6]),
        ("~A", Rule::DS, &[7, 8]),
        ("~A&B", Rule::Conj, &[2, 9]),
    ];
    for (stmt, rule, srcs) in steps {
        let sources: Vec<NodeId> = srcs.iter().map(|&i| NodeId(i)).collect();
        let src_f = g.source_statements(&sources).unwrap();
        assert!(verify_step(rule, &src_f, &p(stmt)).is_valid(), "{rule} -> {stmt}");
        g.add_justified(p(stmt), rule, sources, NodeColor::Plain).unwrap();
    }
    g
}

#[test]
fn sample_solution_needed_nodes_exclude_d() {
    let g = sample_solution();
    assert_eq!(g.summary().length, Some(6));
    let needed = g.needed_set().unwrap();
    let expected: BTreeSet<NodeId> = [1, 2, 3, 4, 6, 7, 8, 9, 0].into_iter().map(NodeId).collect();
    assert_eq!(needed, expected);
    assert_eq!(g.node(NodeId(5)).unwrap().statement, p("D"));
}

#[test]
fn unneeded_extra_nodes_still_count_toward_length() {
    let mut g = ProofGraph::new("fig1", &[p("A->C"), p("B"), p("C->E"), p("D&~E")], p("~A&B"));
    // Two detours via Simp on the premise before the same six steps.
    g.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
    g.add_justified(p("~E"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
    g.add_justified(p("~E"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
    g.add_justified(p("D"), Rule::Simp, vec![NodeId(4)], NodeColor::Plain).unwrap();
    g.add_justified(p("~A|C"), Rule::Impl, vec![NodeId(1)], NodeColor::Plain).unwrap();
    g.add_justified(p("~C"), Rule::MT, vec![NodeId(3), NodeId(6)], NodeColor::Plain).unwrap();
    g.add_justified(p("~A"), Rule::DS, vec![NodeId(9), NodeId(10)], NodeColor::Plain).unwrap();
    g.add_justified(p("~A&B"), Rule::Conj, vec![NodeId(2), NodeId(11)], NodeColor::Plain).unwrap();
    assert_eq!(g.summary().length, Some(8));
    let needed = g.needed_set().unwrap();
    assert!(!needed.contains(&NodeId(7)) && !needed.contains(&NodeId(8)) && !needed.contains(&NodeId(5)));
    assert_eq!(g.nodes().iter().filter(|n| n.kind == NodeKind::Derived).count(), 7);
}
