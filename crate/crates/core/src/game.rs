//! Weighted games with partial observation: the data model, its structural
//! invariants, and the JSON game file format.
//!
//! A game is a finite automaton `(Q, q0, Σ, Δ, w, Obs)`. Eve picks an action,
//! Adam resolves the nondeterminism, and Eve only learns the observation
//! (partition block) of the new state. Declaration order of states and actions
//! is significant: it is the canonical order used everywhere else.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(u32::try_from(i).expect("identifier index overflows u32"))
            }
        }
    };
}

id_type!(
    /// Position of a state in declaration order.
    StateId
);
id_type!(
    /// Position of an action in the alphabet.
    ActionId
);
id_type!(
    /// Position of an observation block in declaration order.
    ObservationId
);

pub type StateSet = BTreeSet<StateId>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: StateId,
    pub action: ActionId,
    pub dst: StateId,
    pub weight: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameKind {
    Blind,
    FullObservation,
    General,
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared state `{0}`")]
    UnknownState(String),
    #[error("undeclared action `{0}`")]
    UnknownAction(String),
    #[error("state id {0} out of range")]
    StateOutOfRange(u32),
    #[error("action id {0} out of range")]
    ActionOutOfRange(u32),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("identifiers must be nonempty")]
    EmptyIdentifier,
    #[error("game has no states")]
    NoStates,
    #[error("invalid game: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A broken structural invariant, naming the offending element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A state belongs to no observation.
    Unobserved { state: String },
    /// A state belongs to more than one observation.
    MultiplyObserved { state: String, blocks: usize },
    EmptyObservation { index: usize },
    /// Some `(state, action)` pair has no successor.
    NotTotal { state: String, action: String },
    DuplicateTransition {
        src: String,
        action: String,
        dst: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unobserved { state } => {
                write!(f, "partition violated: state {state} is in no observation")
            }
            Violation::MultiplyObserved { state, blocks } => write!(
                f,
                "partition violated: state {state} is in {blocks} observations"
            ),
            Violation::EmptyObservation { index } => {
                write!(f, "partition violated: observation #{index} is empty")
            }
            Violation::NotTotal { state, action } => {
                write!(f, "relation not total at ({state},{action})")
            }
            Violation::DuplicateTransition { src, action, dst } => {
                write!(f, "duplicate transition ({src},{action},{dst})")
            }
        }
    }
}

/// Incremental construction of a [`Game`] by identifiers.
///
/// Names must be unique and nonempty. Totality, the partition property and
/// duplicate triples are not checked here; see [`validate`].
#[derive(Clone, Debug, Default)]
pub struct GameBuilder {
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    alphabet: Vec<String>,
    action_index: HashMap<String, ActionId>,
    initial: Option<StateId>,
    transitions: Vec<Transition>,
    observations: Vec<Vec<StateId>>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> Result<StateId, GameError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GameError::EmptyIdentifier);
        }
        if self.state_index.contains_key(&name) {
            return Err(GameError::DuplicateState(name));
        }
        let id = StateId::from(self.states.len());
        self.state_index.insert(name.clone(), id);
        self.states.push(name);
        Ok(id)
    }

    pub fn add_action(&mut self, name: impl Into<String>) -> Result<ActionId, GameError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GameError::EmptyIdentifier);
        }
        if self.action_index.contains_key(&name) {
            return Err(GameError::DuplicateAction(name));
        }
        let id = ActionId::from(self.alphabet.len());
        self.action_index.insert(name.clone(), id);
        self.alphabet.push(name);
        Ok(id)
    }

    pub fn state_id(&self, name: &str) -> Result<StateId, GameError> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownState(name.to_string()))
    }

    pub fn action_id(&self, name: &str) -> Result<ActionId, GameError> {
        self.action_index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownAction(name.to_string()))
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.alphabet.len()).map(ActionId::from)
    }

    pub fn set_initial(&mut self, q: StateId) -> &mut Self {
        self.initial = Some(q);
        self
    }

    pub fn edge(&mut self, src: StateId, action: ActionId, dst: StateId, weight: i64) -> &mut Self {
        self.transitions.push(Transition {
            src,
            action,
            dst,
            weight,
        });
        self
    }

    pub fn has_edge(&self, src: StateId, action: ActionId) -> bool {
        self.transitions
            .iter()
            .any(|t| t.src == src && t.action == action)
    }

    pub fn observation(&mut self, block: Vec<StateId>) -> &mut Self {
        self.observations.push(block);
        self
    }

    /// One observation containing every declared state.
    pub fn blind(&mut self) -> &mut Self {
        self.observations = vec![(0..self.states.len()).map(StateId::from).collect()];
        self
    }

    pub fn build(self) -> Result<Game, GameError> {
        if self.states.is_empty() {
            return Err(GameError::NoStates);
        }
        let n = self.states.len() as u32;
        let k = self.alphabet.len() as u32;
        let check_state = |q: StateId| {
            if q.0 < n {
                Ok(())
            } else {
                Err(GameError::StateOutOfRange(q.0))
            }
        };
        let initial = self.initial.unwrap_or(StateId(0));
        check_state(initial)?;
        for t in &self.transitions {
            check_state(t.src)?;
            check_state(t.dst)?;
            if t.action.0 >= k {
                return Err(GameError::ActionOutOfRange(t.action.0));
            }
        }
        for block in &self.observations {
            for &q in block {
                check_state(q)?;
            }
        }
        Ok(Game::assemble(self, initial))
    }
}

/// A weighted game with partial observation. Immutable once built.
#[derive(Clone, Debug)]
pub struct Game {
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    alphabet: Vec<String>,
    action_index: HashMap<String, ActionId>,
    initial: StateId,
    transitions: Vec<Transition>,
    observations: Vec<Vec<StateId>>,
    obs_of: Vec<Option<ObservationId>>,
    // successor lists indexed by `state * |Σ| + action`
    succ: Vec<Vec<(StateId, i64)>>,
}

impl PartialEq for Game {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states
            && self.alphabet == other.alphabet
            && self.initial == other.initial
            && self.transitions == other.transitions
            && self.observations == other.observations
    }
}

impl Eq for Game {}

impl Game {
    fn assemble(b: GameBuilder, initial: StateId) -> Game {
        let n = b.states.len();
        let k = b.alphabet.len();
        let mut obs_of = vec![None; n];
        for (i, block) in b.observations.iter().enumerate() {
            for &q in block {
                if obs_of[q.index()].is_none() {
                    obs_of[q.index()] = Some(ObservationId::from(i));
                }
            }
        }
        let mut succ = vec![Vec::new(); n * k];
        for t in &b.transitions {
            succ[t.src.index() * k + t.action.index()].push((t.dst, t.weight));
        }
        Game {
            states: b.states,
            state_index: b.state_index,
            alphabet: b.alphabet,
            action_index: b.action_index,
            initial,
            transitions: b.transitions,
            observations: b.observations,
            obs_of,
            succ,
        }
    }

    /// Builds a game from named components, the shape of the file format.
    pub fn from_names(
        states: &[String],
        initial: &str,
        alphabet: &[String],
        transitions: &[(String, String, String, i64)],
        observations: Option<&[Vec<String>]>,
    ) -> Result<Game, GameError> {
        let mut b = GameBuilder::new();
        for s in states {
            b.add_state(s.clone())?;
        }
        for a in alphabet {
            b.add_action(a.clone())?;
        }
        let q0 = b.state_id(initial)?;
        b.set_initial(q0);
        for (src, a, dst, w) in transitions {
            let (src, a, dst) = (b.state_id(src)?, b.action_id(a)?, b.state_id(dst)?);
            b.edge(src, a, dst, *w);
        }
        match observations {
            None => {
                b.blind();
            }
            Some(blocks) => {
                for block in blocks {
                    let ids = block
                        .iter()
                        .map(|s| b.state_id(s))
                        .collect::<Result<Vec<_>, _>>()?;
                    b.observation(ids);
                }
            }
        }
        b.build()
    }

    /// A builder pre-populated with this game's content.
    pub fn to_builder(&self) -> GameBuilder {
        GameBuilder {
            states: self.states.clone(),
            state_index: self.state_index.clone(),
            alphabet: self.alphabet.clone(),
            action_index: self.action_index.clone(),
            initial: Some(self.initial),
            transitions: self.transitions.clone(),
            observations: self.observations.clone(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.alphabet.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId::from)
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.alphabet.len()).map(ActionId::from)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn observations(&self) -> &[Vec<StateId>] {
        &self.observations
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q.index()]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.alphabet[a.index()]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId, GameError> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownState(name.to_string()))
    }

    pub fn action_id(&self, name: &str) -> Result<ActionId, GameError> {
        self.action_index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownAction(name.to_string()))
    }

    /// Observation block of `q`. `None` only for games violating the partition.
    pub fn observation_of(&self, q: StateId) -> Option<ObservationId> {
        self.obs_of.get(q.index()).copied().flatten()
    }

    /// The `a`-successors of `q` with their weights, in declaration order.
    pub fn successors(&self, q: StateId, a: ActionId) -> &[(StateId, i64)] {
        &self.succ[q.index() * self.alphabet.len() + a.index()]
    }

    /// Largest absolute transition weight.
    pub fn w_max(&self) -> u64 {
        self.transitions
            .iter()
            .map(|t| t.weight.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_blind(&self) -> bool {
        self.observations.len() == 1 && self.observations[0].len() == self.states.len()
    }

    pub fn is_full_observation(&self) -> bool {
        self.observations.len() == self.states.len()
            && self.observations.iter().all(|b| b.len() == 1)
    }

    /// Blind takes precedence for one-state games, which are both.
    pub fn kind(&self) -> GameKind {
        if self.is_blind() {
            GameKind::Blind
        } else if self.is_full_observation() {
            GameKind::FullObservation
        } else {
            GameKind::General
        }
    }

    pub fn is_total(&self) -> bool {
        self.succ.iter().all(|s| !s.is_empty())
    }

    fn check_state(&self, q: StateId) -> Result<(), GameError> {
        if q.index() < self.states.len() {
            Ok(())
        } else {
            Err(GameError::StateOutOfRange(q.0))
        }
    }

    fn check_action(&self, a: ActionId) -> Result<(), GameError> {
        if a.index() < self.alphabet.len() {
            Ok(())
        } else {
            Err(GameError::ActionOutOfRange(a.0))
        }
    }
}

/// Lists every broken structural invariant of `g`; empty means valid.
pub fn validate(g: &Game) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut count = vec![0usize; g.num_states()];
    for (i, block) in g.observations.iter().enumerate() {
        if block.is_empty() {
            out.push(Violation::EmptyObservation { index: i });
        }
        for &q in block {
            count[q.index()] += 1;
        }
    }
    for q in g.state_ids() {
        let state = g.state_name(q).to_string();
        match count[q.index()] {
            0 => out.push(Violation::Unobserved { state }),
            1 => {}
            blocks => out.push(Violation::MultiplyObserved { state, blocks }),
        }
    }
    for q in g.state_ids() {
        for a in g.action_ids() {
            if g.successors(q, a).is_empty() {
                out.push(Violation::NotTotal {
                    state: g.state_name(q).to_string(),
                    action: g.action_name(a).to_string(),
                });
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for t in &g.transitions {
        if !seen.insert((t.src, t.action, t.dst)) {
            out.push(Violation::DuplicateTransition {
                src: g.state_name(t.src).to_string(),
                action: g.action_name(t.action).to_string(),
                dst: g.state_name(t.dst).to_string(),
            });
        }
    }
    out
}

/// `post_σ(s)`: every state reachable from some state of `s` by one `σ`-edge.
pub fn post_sigma(g: &Game, s: &StateSet, action: ActionId) -> Result<StateSet, GameError> {
    g.check_action(action)?;
    let mut out = StateSet::new();
    for &q in s {
        g.check_state(q)?;
        out.extend(g.successors(q, action).iter().map(|&(d, _)| d));
    }
    Ok(out)
}

/// Routes every missing `(q, σ)` to one fresh sink carrying `sink_weight`
/// self-loops. Total games are returned unchanged.
///
/// The sink joins the single block of a blind game and gets its own
/// singleton observation otherwise. Edges into the sink also weigh
/// `sink_weight`.
pub fn make_total(g: &Game, sink_weight: i64) -> Game {
    if g.is_total() {
        return g.clone();
    }
    let blind = g.is_blind();
    let mut b = g.to_builder();
    let mut name = String::from("bot");
    while g.state_index.contains_key(&name) {
        name.push('\'');
    }
    let sink = b.add_state(name).expect("fresh sink name");
    for q in g.state_ids() {
        for a in g.action_ids() {
            if g.successors(q, a).is_empty() {
                b.edge(q, a, sink, sink_weight);
            }
        }
    }
    for a in g.action_ids() {
        b.edge(sink, a, sink, sink_weight);
    }
    if blind {
        b.observations[0].push(sink);
    } else {
        b.observation(vec![sink]);
    }
    b.build().expect("total completion keeps references valid")
}

// ---------------------------------------------------------------------------
// File format

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ObservationsRepr {
    Keyword(String),
    Blocks(Vec<Vec<String>>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    states: Vec<String>,
    initial: String,
    alphabet: Vec<String>,
    transitions: Vec<(String, String, String, i64)>,
    observations: ObservationsRepr,
}

/// Parses a game document and rejects it unless it passes [`validate`].
pub fn parse_game(text: &str) -> Result<Game, GameError> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| GameError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let blocks = match &file.observations {
        ObservationsRepr::Keyword(k) if k == "blind" => None,
        ObservationsRepr::Keyword(k) => {
            return Err(GameError::Syntax {
                line: 0,
                column: 0,
                message: format!("`observations` must be an array of arrays or \"blind\", got \"{k}\""),
            })
        }
        ObservationsRepr::Blocks(b) => Some(b.as_slice()),
    };
    let g = Game::from_names(
        &file.states,
        &file.initial,
        &file.alphabet,
        &file.transitions,
        blocks,
    )?;
    let violations = validate(&g);
    if violations.is_empty() {
        Ok(g)
    } else {
        Err(GameError::Invalid(violations))
    }
}

/// Serializes to the game file format; blind games use the `"blind"` shorthand.
pub fn serialize_game(g: &Game) -> String {
    let observations = if g.is_blind() {
        ObservationsRepr::Keyword("blind".into())
    } else {
        ObservationsRepr::Blocks(
            g.observations
                .iter()
                .map(|b| b.iter().map(|&q| g.state_name(q).to_string()).collect())
                .collect(),
        )
    };
    let file = GameFile {
        states: g.states.clone(),
        initial: g.state_name(g.initial).to_string(),
        alphabet: g.alphabet.clone(),
        transitions: g
            .transitions
            .iter()
            .map(|t| {
                (
                    g.state_name(t.src).to_string(),
                    g.action_name(t.action).to_string(),
                    g.state_name(t.dst).to_string(),
                    t.weight,
                )
            })
            .collect(),
        observations,
    };
    serde_json::to_string_pretty(&file).expect("game serializes")
}
