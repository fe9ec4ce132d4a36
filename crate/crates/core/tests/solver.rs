mod common;

use common::*;
use po_energy::belief::{self, BeliefFunction};
use po_energy::fullobs;
use po_energy::game::{ActionId, StateId};
use po_energy::solver::{
    build_for_strategy, build_lazy, build_safety_game, build_with, check_control_invariant, decide,
    solve_safety, Limits, NodeStatus, Reuse, SafetyGame, Verdict,
};

fn verdict(g: &po_energy::Game, c0: u64) -> Verdict {
    decide(g, c0, Limits::unlimited()).unwrap().verdict
}

#[test]
fn blind_distinguishing_game_is_lost_for_small_credits() {
    let g = distinguishing_game(true);
    for c0 in 0..=5 {
        assert_eq!(verdict(&g, c0), Verdict::Lose, "c0 = {c0}");
        // independent confirmation: every word of this length fails
        assert!(adam_wins_within(&g, c0, 2 * c0 as usize + 3), "c0 = {c0}");
    }
}

#[test]
fn blind_distinguishing_game_beliefs() {
    let g = distinguishing_game(true);
    let s1 = ActionId(0);
    let (a, b) = (StateId(0), StateId(1));
    let f = belief::initial_belief(&g, 1);
    let f1 = belief::successors(&g, &f, s1).remove(0);
    assert_eq!(f1, BeliefFunction::from_i64(&[(a, 1), (b, 1)]));
    let f2 = belief::successors(&g, &f1, s1).remove(0);
    assert_eq!(f2, BeliefFunction::from_i64(&[(a, 1), (b, 0)]));
    let f3 = belief::successors(&g, &f2, s1).remove(0);
    assert_eq!(f3, BeliefFunction::from_i64(&[(a, 1), (b, -1)]));
    // every branch ends in a negative leaf
    let h = build_safety_game(&g, 1, Limits::unlimited()).unwrap();
    assert!(h.leaves().all(|n| h.node(n).status == NodeStatus::NegativeLeaf
        || matches!(h.node(n).status, NodeStatus::Shared { .. })));
    assert!(!solve_safety(&h).contains(h.root()));
}

#[test]
fn observing_the_state_wins_the_distinguishing_game() {
    let g = distinguishing_game(false);
    assert_eq!(verdict(&g, 0), Verdict::Win);
    assert_eq!(fullobs::decide_fullobs(&g, 0).unwrap(), Verdict::Win);
}

#[test]
fn all_zero_weights_short_circuit() {
    let g = loop_game(&[0, 0]);
    let r = decide(&g, 0, Limits::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Win);
    assert_eq!(r.nodes_built, 0);
    assert_eq!(r.control_parameter, 1);
}

#[test]
fn report_serializes() {
    let g = loop_game(&[0, -1]);
    let r = decide(&g, 2, Limits::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["verdict"], "Win");
    assert_eq!(v["control_parameter"], 2 + 1 + 1);
    assert!(v["elapsed_ms"].is_u64());
}

/// Full trees of the suite that fit in `max_nodes`; asserts most do.
fn full_trees(seed: u64, count: usize, max_nodes: usize) -> Vec<(po_energy::Game, u64, SafetyGame)> {
    let limits = Limits { max_nodes: Some(max_nodes), max_time: None };
    let out: Vec<_> = suite(seed, count)
        .into_iter()
        .filter_map(|(g, c0)| build_safety_game(&g, c0, limits).ok().map(|h| (g, c0, h)))
        .collect();
    assert!(out.len() * 10 >= count * 9, "only {} of {count} trees fit", out.len());
    out
}

#[test]
fn branches_never_repeat_a_dominated_belief() {
    for (g, _, h) in full_trees(11, 150, 20_000) {
        for leaf in h.leaves() {
            let vectors: Vec<_> = h
                .path(leaf)
                .into_iter()
                .filter(|&n| !belief::is_negative(h.belief(n)))
                .map(|n| belief::encode_vector(&g, h.belief(n)).unwrap())
                .collect();
            // the last element may be the subsumed leaf itself
            let interior = if matches!(h.node(leaf).status, NodeStatus::SubsumedLeaf { .. }) {
                vectors.len() - 1
            } else {
                vectors.len()
            };
            for j in 0..interior {
                for i in 0..j {
                    assert!(!vectors[i].le(&vectors[j]), "branch to {leaf} repeats");
                }
            }
        }
    }
}

#[test]
fn trees_are_controlled() {
    for (g, c0, h) in full_trees(12, 150, 20_000) {
        assert!(check_control_invariant(&h, &g, c0));
    }
    for (g, c0) in suite(12, 150) {
        let h = build_lazy(&g, c0, Limits::unlimited()).unwrap();
        assert!(check_control_invariant(&h, &g, c0));
    }
}

#[test]
fn sharing_and_lazy_visits_never_change_a_verdict() {
    let limits = Limits { max_nodes: Some(20_000), max_time: None };
    let mut compared = 0;
    for (g, c0) in suite(13, 240) {
        let Ok(plain) = build_with(&g, c0, limits, Reuse::Off) else {
            continue;
        };
        let closed = build_with(&g, c0, Limits::unlimited(), Reuse::Closed).unwrap();
        let shared = build_with(&g, c0, Limits::unlimited(), Reuse::Covered).unwrap();
        let lazy = build_lazy(&g, c0, Limits::unlimited()).unwrap();
        let for_strategy = build_for_strategy(&g, c0, Limits::unlimited()).unwrap();
        compared += 1;
        assert!(plain.len() >= closed.len());
        assert!(closed.len() >= shared.len());
        assert!(shared.len() >= lazy.len());
        assert!(for_strategy.nodes().iter().all(|n| !for_strategy.is_contextual(n.id)));
        assert!(plain
            .nodes()
            .iter()
            .all(|n| !matches!(n.status, NodeStatus::Shared { .. })));
        let want = solve_safety(&plain).contains(0);
        let text = po_energy::game::serialize_game(&g);
        assert_eq!(solve_safety(&shared).contains(0), want, "{text}");
        assert_eq!(solve_safety(&lazy).contains(0), want, "{text}");
        assert_eq!(solve_safety(&closed).contains(0), want, "{text}");
        assert_eq!(solve_safety(&for_strategy).contains(0), want, "{text}");
    }
    assert!(compared >= 200, "{compared}");
}

#[test]
fn more_credit_never_hurts() {
    for (g, c0) in suite(14, 150) {
        if verdict(&g, c0) == Verdict::Win {
            assert_eq!(verdict(&g, c0 + 1), Verdict::Win);
            assert_eq!(verdict(&g, c0 + 3), Verdict::Win);
        }
    }
}

#[test]
fn agrees_with_brute_force_bounds() {
    let (mut wins, mut losses) = (0, 0);
    for (g, c0) in suite(15, 150) {
        let v = verdict(&g, c0);
        if adam_wins_within(&g, c0, 8) {
            assert_eq!(v, Verdict::Lose);
            losses += 1;
        }
        let cap = c0 as i64 + 2 * g.num_states() as i64 * g.w_max() as i64;
        if eve_wins_truncated(&g, c0, cap, 200_000) == Some(true) {
            assert_eq!(v, Verdict::Win);
            wins += 1;
        }
    }
    // both sides of the sandwich must actually be exercised
    assert!(wins > 20 && losses > 20, "wins {wins}, losses {losses}");
}

#[test]
fn construction_is_deterministic() {
    for (g, c0, a) in full_trees(16, 30, 20_000) {
        let b = build_safety_game(&g, c0, Limits::unlimited()).unwrap();
        assert_eq!(a.len(), b.len());
        for n in 0..a.len() {
            assert_eq!(a.node(n).status, b.node(n).status);
            assert_eq!(a.belief(n), b.belief(n));
        }
    }
}

#[test]
fn children_follow_alphabet_then_observation_order() {
    for (g, _, h) in full_trees(17, 60, 20_000) {
        for node in h.nodes() {
            if node.status != NodeStatus::Interior {
                continue;
            }
            let mut expected = Vec::new();
            for a in g.action_ids() {
                expected.extend(belief::successors(&g, h.belief(node.id), a));
                let kids: Vec<_> = h.children(node.id, a).collect();
                assert!(!kids.is_empty());
                for &c in &kids {
                    assert_eq!(h.node(c).parent, Some(node.id));
                    assert_eq!(h.node(c).incoming_action, Some(a));
                }
            }
            let got: Vec<BeliefFunction> = g
                .action_ids()
                .flat_map(|a| h.children(node.id, a))
                .map(|c| h.belief(c).clone())
                .collect();
            assert_eq!(got, expected);
        }
    }
}

#[test]
fn node_invariants_hold() {
    for (_, _, h) in full_trees(18, 90, 20_000) {
        for node in h.nodes() {
            let f = h.belief(node.id);
            assert_eq!(node.status == NodeStatus::NegativeLeaf, belief::is_negative(f));
            match node.status {
                NodeStatus::SubsumedLeaf { ancestor } => {
                    assert!(h.ancestors(node.id).any(|a| a == ancestor));
                    assert!(belief::leq(h.belief(ancestor), f));
                }
                NodeStatus::Shared { original } => {
                    assert!(h.ancestors(node.id).all(|a| a != original));
                    assert_eq!(h.belief(original), f);
                    assert_eq!(h.node(original).status, NodeStatus::Interior);
                }
                NodeStatus::Frontier => panic!("complete trees have no frontier"),
                _ => {}
            }
        }
    }
}
