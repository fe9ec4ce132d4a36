//! Shared test helpers: seeded random games and brute-force oracles that do
//! not go through the library's belief code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use po_energy::game::{ActionId, Game, GameBuilder, StateId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visibility {
    Full,
    Blind,
    Partial,
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

pub fn edge(s: &str, a: &str, d: &str, w: i64) -> (String, String, String, i64) {
    (s.into(), a.into(), d.into(), w)
}

/// A total game with `1..=max_states` states, `1..=max_actions` actions,
/// one or two successors per pair and weights in `[-w, w]`.
pub fn random_game<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_actions: usize,
    w: i64,
    vis: Visibility,
) -> Game {
    let n = rng.gen_range(1..=max_states);
    let k = rng.gen_range(1..=max_actions);
    let mut b = GameBuilder::new();
    for i in 0..n {
        b.add_state(format!("q{i}")).unwrap();
    }
    for a in 0..k {
        b.add_action(format!("s{a}")).unwrap();
    }
    for q in 0..n {
        for a in 0..k {
            let fanout = rng.gen_range(1..=2.min(n));
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            for &t in &targets[..fanout] {
                b.edge(StateId::from(q), ActionId::from(a), StateId::from(t), rng.gen_range(-w..=w));
            }
        }
    }
    match vis {
        Visibility::Full => {
            for q in 0..n {
                b.observation(vec![StateId::from(q)]);
            }
        }
        Visibility::Blind => {
            b.blind();
        }
        Visibility::Partial => {
            let blocks = rng.gen_range(1..=n);
            let mut parts: Vec<Vec<StateId>> = vec![Vec::new(); blocks];
            // every block gets one state first so none is empty
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for (i, &q) in order.iter().enumerate() {
                let slot = if i < blocks { i } else { rng.gen_range(0..blocks) };
                parts[slot].push(StateId::from(q));
            }
            for p in parts {
                b.observation(p);
            }
        }
    }
    b.build().unwrap()
}

/// Random games of all three kinds in turn, each with a credit in `0..=5`:
/// full observation with up to 6 states, blind and partial with up to 4.
pub fn suite(seed: u64, count: usize) -> Vec<(Game, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let vis = [Visibility::Full, Visibility::Blind, Visibility::Partial][i % 3];
            let max_states = if vis == Visibility::Full { 6 } else { 4 };
            let g = random_game(&mut rng, max_states, 3, 3, vis);
            (g, (i % 6) as u64)
        })
        .collect()
}

/// Knowledge of Eve as least energy per possible state.
pub type Knowledge = BTreeMap<u32, i64>;

fn observation_index(g: &Game) -> Vec<usize> {
    let mut obs = vec![0; g.num_states()];
    for (i, block) in g.observations().iter().enumerate() {
        for q in block {
            obs[q.index()] = i;
        }
    }
    obs
}

/// Successor knowledge per revealed observation, computed straight from the
/// transition list.
pub fn knowledge_successors(g: &Game, k: &Knowledge, a: ActionId, cap: Option<i64>) -> Vec<Knowledge> {
    let obs = observation_index(g);
    let mut next: BTreeMap<u32, i64> = BTreeMap::new();
    for t in g.transitions() {
        if t.action != a {
            continue;
        }
        if let Some(&v) = k.get(&t.src.0) {
            let e = v + t.weight;
            let slot = next.entry(t.dst.0).or_insert(e);
            *slot = (*slot).min(e);
        }
    }
    let mut by_obs: BTreeMap<usize, Knowledge> = BTreeMap::new();
    for (q, v) in next {
        let v = cap.map_or(v, |c| v.min(c));
        by_obs.entry(obs[q as usize]).or_default().insert(q, v);
    }
    by_obs.into_values().collect()
}

fn negative(k: &Knowledge) -> bool {
    k.values().any(|&v| v < 0)
}

/// True when Adam can force a negative energy level within `depth` rounds
/// whatever observation-based strategy Eve uses.
pub fn adam_wins_within(g: &Game, c0: u64, depth: usize) -> bool {
    fn go(g: &Game, k: &Knowledge, depth: usize, memo: &mut HashMap<(Knowledge, usize), bool>) -> bool {
        if negative(k) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        if let Some(&v) = memo.get(&(k.clone(), depth)) {
            return v;
        }
        let res = g.action_ids().all(|a| {
            knowledge_successors(g, k, a, None)
                .iter()
                .any(|s| go(g, s, depth - 1, memo))
        });
        memo.insert((k.clone(), depth), res);
        res
    }
    let k: Knowledge = [(g.initial().0, c0 as i64)].into_iter().collect();
    go(g, &k, depth, &mut HashMap::new())
}

/// True when Eve wins the game in which every energy above `cap` is
/// truncated to `cap`. Truncation only lowers energies, so a win here is a
/// win in the real game. `None` when more than `max_nodes` truncated
/// knowledge states are reachable.
pub fn eve_wins_truncated(g: &Game, c0: u64, cap: i64, max_nodes: usize) -> Option<bool> {
    let init: Knowledge = [(g.initial().0, (c0 as i64).min(cap))].into_iter().collect();
    let mut ids: HashMap<Knowledge, usize> = HashMap::new();
    let mut nodes: Vec<Knowledge> = Vec::new();
    // succ[n][a] = successor node ids
    let mut succ: Vec<Vec<Vec<usize>>> = Vec::new();
    ids.insert(init.clone(), 0);
    nodes.push(init);
    let mut i = 0;
    while i < nodes.len() {
        if nodes.len() > max_nodes {
            return None;
        }
        let k = nodes[i].clone();
        let mut row = Vec::new();
        if !negative(&k) {
            for a in g.action_ids() {
                let mut out = Vec::new();
                for s in knowledge_successors(g, &k, a, Some(cap)) {
                    let id = *ids.entry(s.clone()).or_insert_with(|| {
                        nodes.push(s);
                        nodes.len() - 1
                    });
                    out.push(id);
                }
                row.push(out);
            }
        }
        succ.push(row);
        i += 1;
    }
    let mut good: Vec<bool> = nodes.iter().map(|k| !negative(k)).collect();
    loop {
        let mut changed = false;
        for n in 0..nodes.len() {
            if good[n] && !succ[n].iter().any(|out| out.iter().all(|&s| good[s])) {
                good[n] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Some(good[0])
}

/// Every word of length `len` over the alphabet; each paired with the least
/// energy level any play reaches while following it.
pub fn blind_word_minima(g: &Game, c0: u64, len: usize) -> Vec<(Vec<ActionId>, i64)> {
    let mut out = Vec::new();
    let mut word = Vec::new();
    fn go(
        g: &Game,
        states: &BTreeMap<u32, i64>,
        low: i64,
        len: usize,
        word: &mut Vec<ActionId>,
        out: &mut Vec<(Vec<ActionId>, i64)>,
    ) {
        if word.len() == len {
            out.push((word.clone(), low));
            return;
        }
        for a in g.action_ids() {
            let mut next: BTreeMap<u32, i64> = BTreeMap::new();
            for t in g.transitions() {
                if t.action == a {
                    if let Some(&v) = states.get(&t.src.0) {
                        let e = v + t.weight;
                        let slot = next.entry(t.dst.0).or_insert(e);
                        *slot = (*slot).min(e);
                    }
                }
            }
            let m = next.values().copied().min().unwrap_or(low).min(low);
            word.push(a);
            go(g, &next, m, len, word, out);
            word.pop();
        }
    }
    let start: BTreeMap<u32, i64> = [(g.initial().0, c0 as i64)].into_iter().collect();
    go(g, &start, c0 as i64, len, &mut word, &mut out);
    out
}

/// The two-state game where each letter is safe in exactly one state:
/// `s1` loops at 0 in `a` and at -1 in `b`, `s2` the other way round, and
/// both letters may move `a` to `b` for free.
pub fn distinguishing_game(blind: bool) -> Game {
    let obs = [names(&["a"]), names(&["b"])];
    Game::from_names(
        &names(&["a", "b"]),
        "a",
        &names(&["s1", "s2"]),
        &[
            edge("a", "s1", "a", 0),
            edge("a", "s1", "b", 0),
            edge("b", "s1", "b", -1),
            edge("a", "s2", "a", -1),
            edge("a", "s2", "b", 0),
            edge("b", "s2", "b", 0),
        ],
        if blind { None } else { Some(&obs) },
    )
    .unwrap()
}

pub fn loop_game(weights: &[i64]) -> Game {
    let actions: Vec<String> = (1..=weights.len()).map(|i| format!("s{i}")).collect();
    let edges: Vec<_> = actions
        .iter()
        .zip(weights)
        .map(|(a, &w)| edge("q", a, "q", w))
        .collect();
    Game::from_names(&names(&["q"]), "q", &actions, &edges, None).unwrap()
}

pub fn distinct<T: std::hash::Hash + Eq + Clone>(items: &[T]) -> usize {
    items.iter().cloned().collect::<HashSet<_>>().len()
}
