mod common;

use common::*;
use po_energy::belief::{self, BeliefFunction};
use po_energy::game::{parse_game, serialize_game, StateId};
use proptest::prelude::*;

/// A belief over `n` states given by an optional value per state.
fn belief_from(cells: &[Option<i64>]) -> Option<BeliefFunction> {
    let pairs: Vec<(StateId, i64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (StateId::from(i), v)))
        .collect();
    (!pairs.is_empty()).then(|| BeliefFunction::from_i64(&pairs))
}

fn order_oracle(f: &[Option<i64>], h: &[Option<i64>]) -> bool {
    f.iter().zip(h).all(|(a, b)| match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x <= y,
        _ => false,
    })
}

fn cells(n: usize) -> impl Strategy<Value = Vec<Option<i64>>> {
    prop::collection::vec(prop::option::weighted(0.7, 0..=4i64), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn order_matches_vector_encoding((a, b) in (1..=4usize).prop_flat_map(|n| (cells(n), cells(n)))) {
        let n = a.len();
        let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let edges: Vec<_> = names.iter().map(|q| (q.clone(), "s".to_string(), q.clone(), 0)).collect();
        let g = po_energy::Game::from_names(&names, "q0", &["s".to_string()], &edges, None).unwrap();
        let (Some(f), Some(h)) = (belief_from(&a), belief_from(&b)) else { return Ok(()) };
        let ef = belief::encode_vector(&g, &f).unwrap();
        let eh = belief::encode_vector(&g, &h).unwrap();
        prop_assert_eq!(belief::leq(&f, &h), order_oracle(&a, &b));
        prop_assert_eq!(belief::leq(&f, &h), ef.le(&eh));
    }
}

#[test]
fn successors_match_direct_computation() {
    for (g, c0) in suite(21, 120) {
        let mut frontier = vec![belief::initial_belief(&g, c0)];
        for _ in 0..3 {
            let mut next = Vec::new();
            for f in &frontier {
                let k: Knowledge = f
                    .entries()
                    .iter()
                    .map(|(q, v)| (q.0, i64::try_from(v.to_bigint()).unwrap()))
                    .collect();
                for a in g.action_ids() {
                    let got = belief::successors(&g, f, a);
                    let want: Vec<BeliefFunction> = knowledge_successors(&g, &k, a, None)
                        .into_iter()
                        .map(|k| {
                            let pairs: Vec<_> = k.into_iter().map(|(q, v)| (StateId(q), v)).collect();
                            BeliefFunction::from_i64(&pairs)
                        })
                        .collect();
                    assert_eq!(got, want);
                    next.extend(got);
                }
            }
            frontier = next;
        }
    }
}

fn partition(blocks: &[Vec<StateId>]) -> Vec<Vec<StateId>> {
    let mut out: Vec<Vec<StateId>> = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort();
            b
        })
        .collect();
    out.sort();
    out
}

#[test]
fn game_files_round_trip() {
    for (g, _) in suite(22, 90) {
        let text = serialize_game(&g);
        let back = parse_game(&text).unwrap();
        assert_eq!(serialize_game(&back), text);
        assert_eq!(back.transitions(), g.transitions());
        assert_eq!(partition(back.observations()), partition(g.observations()));
        assert_eq!(back.initial(), g.initial());
    }
}
