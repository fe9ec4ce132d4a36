//! Belief functions: Eve's knowledge after an observation history, recorded
//! as the least energy level over all consistent prefixes ending in each
//! state of the current support.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::energy::Energy;
use crate::game::{ActionId, Game, StateId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BeliefError {
    #[error("belief support must be nonempty")]
    EmptySupport,
    #[error("state {0} appears twice in a belief")]
    DuplicateState(u32),
    #[error("negative belief has no vector encoding")]
    Negative,
}

/// A partial map from states to energy values. Absent states are `⊥`.
///
/// Entries are kept sorted by state id, so structural equality and hashing
/// coincide with equality of the represented functions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BeliefFunction {
    values: Box<[(StateId, Energy)]>,
}

impl BeliefFunction {
    pub fn new(values: impl IntoIterator<Item = (StateId, Energy)>) -> Result<Self, BeliefError> {
        let mut values: Vec<_> = values.into_iter().collect();
        if values.is_empty() {
            return Err(BeliefError::EmptySupport);
        }
        values.sort_by_key(|(q, _)| *q);
        if let Some(w) = values.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(BeliefError::DuplicateState(w[0].0 .0));
        }
        Ok(BeliefFunction {
            values: values.into_boxed_slice(),
        })
    }

    /// Shorthand for tests and examples.
    pub fn from_i64(values: &[(StateId, i64)]) -> Self {
        Self::new(values.iter().map(|&(q, v)| (q, Energy::from(v)))).expect("valid belief")
    }

    pub fn entries(&self) -> &[(StateId, Energy)] {
        &self.values
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.values.iter().map(|(q, _)| *q)
    }

    pub fn get(&self, q: StateId) -> Option<&Energy> {
        self.values
            .binary_search_by_key(&q, |(p, _)| *p)
            .ok()
            .map(|i| &self.values[i].1)
    }

    pub fn min_value(&self) -> &Energy {
        self.values
            .iter()
            .map(|(_, v)| v)
            .min()
            .expect("support is nonempty")
    }

    pub fn same_support(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| a.0 == b.0)
    }

    /// Diagnostic form `{state: value, ...}`.
    pub fn to_json(&self, g: &Game) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(q, v)| {
                let value = match v {
                    Energy::Small(s) => serde_json::Value::from(*s),
                    big => serde_json::Value::String(big.to_string()),
                };
                (g.state_name(*q).to_string(), value)
            })
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn display<'a>(&'a self, g: &'a Game) -> impl fmt::Display + 'a {
        DisplayBelief { f: self, g }
    }
}

impl fmt::Debug for BeliefFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.values.iter().map(|(q, v)| (q.0, v)))
            .finish()
    }
}

struct DisplayBelief<'a> {
    f: &'a BeliefFunction,
    g: &'a Game,
}

impl fmt::Display for DisplayBelief<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{{")?;
        for (i, (q, v)) in self.f.values.iter().enumerate() {
            if i > 0 {
                write!(out, ", ")?;
            }
            write!(out, "{}: {}", self.g.state_name(*q), v)?;
        }
        write!(out, "}}")
    }
}

pub fn initial_belief(g: &Game, c0: u64) -> BeliefFunction {
    BeliefFunction {
        values: vec![(g.initial(), Energy::from(c0))].into_boxed_slice(),
    }
}

/// All `σ`-successors of `f`, one per observation that `post_σ(supp f)`
/// meets, in observation declaration order.
pub fn successors(g: &Game, f: &BeliefFunction, action: ActionId) -> Vec<BeliefFunction> {
    let mut best: BTreeMap<StateId, Energy> = BTreeMap::new();
    for (p, v) in f.entries() {
        for &(q, w) in g.successors(*p, action) {
            let cand = v.add_weight(w);
            match best.get_mut(&q) {
                Some(cur) if *cur <= cand => {}
                Some(cur) => *cur = cand,
                None => {
                    best.insert(q, cand);
                }
            }
        }
    }
    let mut blocks: BTreeMap<u32, Vec<(StateId, Energy)>> = BTreeMap::new();
    for (q, v) in best {
        let o = g
            .observation_of(q)
            .expect("successors requires a game whose observations partition the states");
        blocks.entry(o.0).or_default().push((q, v));
    }
    blocks
        .into_values()
        .map(|values| BeliefFunction {
            values: values.into_boxed_slice(),
        })
        .collect()
}

/// `f ⪯ h`: equal supports and pointwise `≤`.
pub fn leq(f: &BeliefFunction, h: &BeliefFunction) -> bool {
    f.same_support(h)
        && f
            .values
            .iter()
            .zip(h.values.iter())
            .all(|((_, a), (_, b))| a <= b)
}

pub fn is_negative(f: &BeliefFunction) -> bool {
    f.values.iter().any(|(_, v)| v.is_negative())
}

/// A belief as a vector of naturals of length `|Q| + 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BeliefVector {
    pub entries: Vec<BigUint>,
}

impl BeliefVector {
    /// Componentwise `≤`.
    pub fn le(&self, other: &BeliefVector) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|(a, b)| a <= b)
    }

    pub fn norm_inf(&self) -> BigUint {
        self.entries.iter().max().cloned().unwrap_or_default()
    }
}

/// `β(S)`: one plus the binary characteristic number of `S`, with the first
/// declared state as the least significant bit.
pub fn support_code(support: impl IntoIterator<Item = StateId>) -> BigUint {
    let mut chi = BigUint::zero();
    for q in support {
        chi.set_bit(q.0 as u64, true);
    }
    chi + 1u32
}

/// Encodes a non-negative belief as
/// `(2^|Q| − β(supp), β(supp), γ(q_|Q|), …, γ(q_1))` where `γ` fills states
/// outside the support with the least supported value.
pub fn encode_vector(g: &Game, f: &BeliefFunction) -> Result<BeliefVector, BeliefError> {
    if is_negative(f) {
        return Err(BeliefError::Negative);
    }
    let n = g.num_states();
    let beta = support_code(f.support());
    let full = BigUint::one() << n;
    let placeholder = f.min_value().magnitude();
    let mut entries = Vec::with_capacity(n + 2);
    entries.push(&full - &beta);
    entries.push(beta);
    for q in (0..n).rev().map(StateId::from) {
        entries.push(match f.get(q) {
            Some(v) => v.magnitude(),
            None => placeholder.clone(),
        });
    }
    Ok(BeliefVector { entries })
}
