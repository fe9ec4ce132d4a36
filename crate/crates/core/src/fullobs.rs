//! Minimal initial credit in full-observation energy games by value
//! iteration. Independent of the belief tree; used to cross-check it.

use serde::Serialize;
use thiserror::Error;

use crate::game::{self, Game, StateId};
use crate::solver::Verdict;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("game is not full-observation")]
    NotFullObservation,
    #[error("{}", game::GameError::Invalid(.0.clone()))]
    InvalidGame(Vec<game::Violation>),
}

/// Least credit sufficient from each state; `None` means no credit suffices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CreditTable {
    pub values: Vec<Option<u64>>,
}

impl CreditTable {
    pub fn value(&self, q: StateId) -> Option<u64> {
        self.values[q.index()]
    }

    /// `{state: credit | "infinity"}`.
    pub fn to_json(&self, g: &Game) -> serde_json::Value {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum Cell {
            Finite(u64),
            Infinite(&'static str),
        }
        let map: serde_json::Map<String, serde_json::Value> = g
            .state_ids()
            .map(|q| {
                let cell = match self.value(q) {
                    Some(v) => Cell::Finite(v),
                    None => Cell::Infinite("infinity"),
                };
                (
                    g.state_name(q).to_string(),
                    serde_json::to_value(cell).expect("plain value"),
                )
            })
            .collect();
        serde_json::Value::Object(map)
    }
}

pub fn min_credit(g: &Game) -> Result<CreditTable, OracleError> {
    let violations = game::validate(g);
    if !violations.is_empty() {
        return Err(OracleError::InvalidGame(violations));
    }
    if !g.is_full_observation() {
        return Err(OracleError::NotFullObservation);
    }
    // anything beyond |Q| * w_max can never be the least sufficient credit
    let cap = g.num_states() as u128 * g.w_max() as u128;
    let mut values: Vec<Option<u128>> = vec![Some(0); g.num_states()];
    loop {
        let mut changed = false;
        for q in g.state_ids() {
            let mut best: Option<u128> = None;
            let mut any = false;
            for a in g.action_ids() {
                // worst case over Adam's resolutions of a
                let mut worst: Option<u128> = Some(0);
                for &(p, w) in g.successors(q, a) {
                    let need = values[p.index()].map(|v| (v as i128 - w as i128).max(0) as u128);
                    worst = match (worst, need) {
                        (Some(x), Some(y)) => Some(x.max(y)),
                        _ => None,
                    };
                }
                best = if any {
                    match (best, worst) {
                        (Some(x), Some(y)) => Some(x.min(y)),
                        (x, None) => x,
                        (None, y) => y,
                    }
                } else {
                    worst
                };
                any = true;
            }
            let new = best.filter(|&v| v <= cap);
            if new != values[q.index()] {
                values[q.index()] = new;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(CreditTable {
        values: values
            .into_iter()
            .map(|v| v.map(|x| u64::try_from(x).expect("capped by |Q| * w_max")))
            .collect(),
    })
}

pub fn decide_fullobs(g: &Game, c0: u64) -> Result<Verdict, OracleError> {
    let table = min_credit(g)?;
    Ok(match table.value(g.initial()) {
        Some(v) if v <= c0 => Verdict::Win,
        _ => Verdict::Lose,
    })
}
