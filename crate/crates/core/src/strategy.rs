//! Finite-state controllers for Eve and adversarial simulation.
//!
//! A controller only ever sees observations, never states, so any controller
//! expressed through [`Controller`] is observation-based.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{self, BeliefFunction};
use crate::energy::Energy;
use crate::game::{ActionId, Game, ObservationId, StateId};
use crate::solver::{NodeId, NodeStatus, SafetyGame, WinningSet};

/// An observation-based strategy with a finite or infinite state space.
pub trait Controller {
    type State: Clone + Ord;

    fn start(&self) -> Self::State;

    /// The next action, or `None` when the controller has nothing more to
    /// play (simulation ends).
    fn action(&self, s: &Self::State) -> Option<ActionId>;

    /// Memory update after the action from `s` revealed observation `o`.
    fn observe(&self, s: &Self::State, o: ObservationId) -> Option<Self::State>;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("the root of the safety game is not winning")]
    RootNotWinning,
    #[error("no transition for action {action} from state {state}")]
    NoTransition { state: String, action: String },
    #[error("controller has no move for observation {observation} at step {step}")]
    ControllerStuck { step: usize, observation: u32 },
    #[error("malformed strategy: {0}")]
    Malformed(String),
    #[error("node {0} reuses a verdict that depends on its ancestors; build the tree with closed reuse")]
    ContextualLeaf(NodeId),
}

/// Controller read off a solved safety game. Its memory is a tree node;
/// subsumed leaves jump back to their ancestor and shared leaves to the node
/// they share a belief with, so every reachable memory state is interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MealyStrategy {
    start: NodeId,
    nodes: Vec<NodeId>,
    output: BTreeMap<NodeId, ActionId>,
    step: BTreeMap<(NodeId, ObservationId), NodeId>,
}

fn canonical(h: &SafetyGame, n: NodeId) -> NodeId {
    match h.node(n).status {
        NodeStatus::SubsumedLeaf { ancestor } => ancestor,
        NodeStatus::Shared { original } => original,
        _ => n,
    }
}

pub fn extract_strategy(
    g: &Game,
    h: &SafetyGame,
    winning: &WinningSet,
) -> Result<MealyStrategy, StrategyError> {
    if !winning.contains(h.root()) {
        return Err(StrategyError::RootNotWinning);
    }
    let mut output = BTreeMap::new();
    let mut step = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut todo = vec![h.root()];
    seen.insert(h.root());
    while let Some(n) = todo.pop() {
        debug_assert_eq!(h.node(n).status, NodeStatus::Interior);
        let action = g
            .action_ids()
            .find(|&a| h.children(n, a).all(|c| winning.contains(c)))
            .expect("winning interior node has a safe action");
        output.insert(n, action);
        for c in h.children(n, action) {
            if h.is_contextual(c) {
                return Err(StrategyError::ContextualLeaf(c));
            }
            let q = h.belief(c).support().next().expect("nonempty support");
            let o = g.observation_of(q).expect("observation partition");
            let next = canonical(h, c);
            step.insert((n, o), next);
            if seen.insert(next) {
                todo.push(next);
            }
        }
    }
    Ok(MealyStrategy {
        start: h.root(),
        nodes: seen.into_iter().collect(),
        output,
        step,
    })
}

impl MealyStrategy {
    pub fn start_node(&self) -> NodeId {
        self.start
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn output(&self, n: NodeId) -> Option<ActionId> {
        self.output.get(&n).copied()
    }

    pub fn next(&self, n: NodeId, o: ObservationId) -> Option<NodeId> {
        self.step.get(&(n, o)).copied()
    }

    pub fn to_file(&self, g: &Game) -> StrategyFile {
        StrategyFile {
            start: self.start,
            nodes: self.nodes.clone(),
            output: self
                .output
                .iter()
                .map(|(&node, &a)| OutputEntry {
                    node,
                    action: g.action_name(a).to_string(),
                })
                .collect(),
            step: self
                .step
                .iter()
                .map(|(&(node, o), &next)| StepEntry {
                    node,
                    observation: o.0,
                    next,
                })
                .collect(),
        }
    }

    pub fn from_file(file: &StrategyFile, g: &Game) -> Result<Self, StrategyError> {
        let nodes: BTreeSet<NodeId> = file.nodes.iter().copied().collect();
        let known = |n: NodeId| {
            if nodes.contains(&n) {
                Ok(n)
            } else {
                Err(StrategyError::Malformed(format!("node {n} is not listed")))
            }
        };
        known(file.start)?;
        let mut output = BTreeMap::new();
        for e in &file.output {
            let a = g
                .action_id(&e.action)
                .map_err(|err| StrategyError::Malformed(err.to_string()))?;
            output.insert(known(e.node)?, a);
        }
        let mut step = BTreeMap::new();
        for e in &file.step {
            if e.observation as usize >= g.observations().len() {
                return Err(StrategyError::Malformed(format!(
                    "observation {} out of range",
                    e.observation
                )));
            }
            step.insert((known(e.node)?, ObservationId(e.observation)), known(e.next)?);
        }
        Ok(MealyStrategy {
            start: file.start,
            nodes: nodes.into_iter().collect(),
            output,
            step,
        })
    }

    pub fn to_dot(&self, g: &Game) -> String {
        let mut out = String::from("digraph strategy {\n");
        for &n in &self.nodes {
            let action = self.output(n).map_or("-", |a| g.action_name(a));
            let shape = if n == self.start { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  n{n} [label=\"{n}/{action}\", shape={shape}];");
        }
        for (&(n, o), &m) in &self.step {
            let _ = writeln!(out, "  n{n} -> n{m} [label=\"o{}\"];", o.0);
        }
        out.push_str("}\n");
        out
    }
}

impl Controller for MealyStrategy {
    type State = NodeId;

    fn start(&self) -> NodeId {
        self.start
    }

    fn action(&self, s: &NodeId) -> Option<ActionId> {
        self.output(*s)
    }

    fn observe(&self, s: &NodeId, o: ObservationId) -> Option<NodeId> {
        self.next(*s, o)
    }
}

/// Serialized form of a [`MealyStrategy`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub start: NodeId,
    pub nodes: Vec<NodeId>,
    pub output: Vec<OutputEntry>,
    pub step: Vec<StepEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    pub node: NodeId,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEntry {
    pub node: NodeId,
    pub observation: u32,
    pub next: NodeId,
}

/// A fixed word `prefix · cycle^ω`, ignoring observations. With an empty
/// cycle the controller stops after the prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordStrategy {
    pub prefix: Vec<ActionId>,
    pub cycle: Vec<ActionId>,
}

impl WordStrategy {
    pub fn new(prefix: Vec<ActionId>, cycle: Vec<ActionId>) -> Self {
        WordStrategy { prefix, cycle }
    }

    pub fn constant(a: ActionId) -> Self {
        WordStrategy {
            prefix: Vec::new(),
            cycle: vec![a],
        }
    }

    pub fn from_names(g: &Game, prefix: &[&str], cycle: &[&str]) -> Result<Self, crate::game::GameError> {
        let ids = |ws: &[&str]| ws.iter().map(|w| g.action_id(w)).collect::<Result<Vec<_>, _>>();
        Ok(WordStrategy {
            prefix: ids(prefix)?,
            cycle: ids(cycle)?,
        })
    }

    fn letter(&self, i: usize) -> Option<ActionId> {
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(i - self.prefix.len()) % self.cycle.len()])
        }
    }
}

impl Controller for WordStrategy {
    // position in the word, folded onto the cycle so the state space is finite
    type State = usize;

    fn start(&self) -> usize {
        0
    }

    fn action(&self, s: &usize) -> Option<ActionId> {
        self.letter(*s)
    }

    fn observe(&self, s: &usize, _o: ObservationId) -> Option<usize> {
        let next = s + 1;
        if next >= self.prefix.len() + self.cycle.len() && !self.cycle.is_empty() {
            Some(self.prefix.len() + (next - self.prefix.len()) % self.cycle.len())
        } else {
            Some(next)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adversary {
    /// Uniform choice among the transitions enabled by Eve's action.
    Random { seed: u64 },
    /// Tracks Eve's belief and picks the transition whose resulting belief
    /// has the least minimum; ties go to the lower concrete energy.
    Greedy,
    /// Every resolution up to the given number of rounds; reports the worst.
    Exhaustive { depth: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationResult {
    /// Least energy level over all prefixes, the empty one included, without
    /// the initial credit.
    pub min_energy_seen: i128,
    pub steps: usize,
    pub violated: bool,
    /// Round after which the credit first went negative.
    pub first_violation: Option<usize>,
    /// Least energy level with which each visited state was reached.
    #[serde(skip)]
    pub min_energy_at: BTreeMap<StateId, i128>,
}

impl SimulationResult {
    fn new() -> Self {
        SimulationResult {
            min_energy_seen: 0,
            steps: 0,
            violated: false,
            first_violation: None,
            min_energy_at: BTreeMap::new(),
        }
    }

    fn record(&mut self, c0: u64, round: usize, q: StateId, energy: i128) {
        self.min_energy_seen = self.min_energy_seen.min(energy);
        let e = self.min_energy_at.entry(q).or_insert(energy);
        *e = (*e).min(energy);
        if energy + i128::from(c0) < 0 && !self.violated {
            self.violated = true;
            self.first_violation = Some(round);
        }
    }
}

/// Plays `ctrl` against `adversary` for up to `max_steps` rounds from the
/// initial state with credit `c0`.
pub fn simulate<C: Controller>(
    g: &Game,
    c0: u64,
    ctrl: &C,
    adversary: Adversary,
    max_steps: usize,
) -> Result<SimulationResult, StrategyError> {
    match adversary {
        Adversary::Random { seed } => simulate_random(g, c0, ctrl, seed, max_steps),
        Adversary::Greedy => simulate_greedy(g, c0, ctrl, max_steps),
        Adversary::Exhaustive { depth } => simulate_exhaustive(g, c0, ctrl, depth.min(max_steps)),
    }
}

fn no_transition(g: &Game, q: StateId, a: ActionId) -> StrategyError {
    StrategyError::NoTransition {
        state: g.state_name(q).to_string(),
        action: g.action_name(a).to_string(),
    }
}

fn observation(g: &Game, q: StateId) -> ObservationId {
    g.observation_of(q).expect("observation partition")
}

fn simulate_random<C: Controller>(
    g: &Game,
    c0: u64,
    ctrl: &C,
    seed: u64,
    max_steps: usize,
) -> Result<SimulationResult, StrategyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = SimulationResult::new();
    let (mut q, mut s, mut energy) = (g.initial(), ctrl.start(), 0i128);
    res.record(c0, 0, q, 0);
    for round in 1..=max_steps {
        let Some(a) = ctrl.action(&s) else { break };
        let &(next, w) = g
            .successors(q, a)
            .choose(&mut rng)
            .ok_or_else(|| no_transition(g, q, a))?;
        q = next;
        energy += w as i128;
        res.steps = round;
        res.record(c0, round, q, energy);
        let o = observation(g, q);
        s = ctrl.observe(&s, o).ok_or(StrategyError::ControllerStuck {
            step: round,
            observation: o.0,
        })?;
    }
    Ok(res)
}

fn simulate_greedy<C: Controller>(
    g: &Game,
    c0: u64,
    ctrl: &C,
    max_steps: usize,
) -> Result<SimulationResult, StrategyError> {
    let mut res = SimulationResult::new();
    let (mut q, mut s, mut energy) = (g.initial(), ctrl.start(), 0i128);
    let mut know: BeliefFunction = belief::initial_belief(g, c0);
    res.record(c0, 0, q, 0);
    for round in 1..=max_steps {
        let Some(a) = ctrl.action(&s) else { break };
        let options = g.successors(q, a);
        if options.is_empty() {
            return Err(no_transition(g, q, a));
        }
        let succs = belief::successors(g, &know, a);
        let belief_for = |p: StateId| {
            let o = observation(g, p);
            succs
                .iter()
                .find(|f| f.support().next().and_then(|r| g.observation_of(r)) == Some(o))
                .expect("the true state lies in some successor belief")
        };
        let &(next, w) = options
            .iter()
            .min_by(|x, y| {
                let fx: &Energy = belief_for(x.0).min_value();
                let fy: &Energy = belief_for(y.0).min_value();
                fx.cmp(fy).then(x.1.cmp(&y.1))
            })
            .expect("nonempty");
        know = belief_for(next).clone();
        q = next;
        energy += w as i128;
        res.steps = round;
        res.record(c0, round, q, energy);
        let o = observation(g, q);
        s = ctrl.observe(&s, o).ok_or(StrategyError::ControllerStuck {
            step: round,
            observation: o.0,
        })?;
    }
    Ok(res)
}

fn simulate_exhaustive<C: Controller>(
    g: &Game,
    c0: u64,
    ctrl: &C,
    depth: usize,
) -> Result<SimulationResult, StrategyError> {
    let mut res = SimulationResult::new();
    // the future of a play depends only on (state, controller memory), so
    // keeping the least energy per pair preserves the worst case
    let mut layer: BTreeMap<(StateId, C::State), i128> = BTreeMap::new();
    layer.insert((g.initial(), ctrl.start()), 0);
    res.record(c0, 0, g.initial(), 0);
    for round in 1..=depth {
        let mut next_layer: BTreeMap<(StateId, C::State), i128> = BTreeMap::new();
        for ((q, s), energy) in &layer {
            let Some(a) = ctrl.action(s) else { continue };
            let options = g.successors(*q, a);
            if options.is_empty() {
                return Err(no_transition(g, *q, a));
            }
            for &(p, w) in options {
                let e = energy + w as i128;
                res.record(c0, round, p, e);
                let o = observation(g, p);
                let t = ctrl.observe(s, o).ok_or(StrategyError::ControllerStuck {
                    step: round,
                    observation: o.0,
                })?;
                let slot = next_layer.entry((p, t)).or_insert(e);
                *slot = (*slot).min(e);
            }
        }
        if next_layer.is_empty() {
            break;
        }
        res.steps = round;
        layer = next_layer;
    }
    Ok(res)
}
