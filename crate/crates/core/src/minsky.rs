//! Deterministic two-counter Minsky machines and bounded halting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Instruction {
    #[serde(rename = "inc")]
    Inc,
    #[serde(rename = "dec")]
    Dec,
    #[serde(rename = "0?")]
    ZeroTest,
}

impl Instruction {
    /// Short tag used in generated letter names.
    pub fn tag(self) -> &'static str {
        match self {
            Instruction::Inc => "inc",
            Instruction::Dec => "dec",
            Instruction::ZeroTest => "zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineTransition(pub String, pub Instruction, pub u8, pub String);

impl MachineTransition {
    pub fn source(&self) -> &str {
        &self.0
    }

    pub fn instruction(&self) -> Instruction {
        self.1
    }

    pub fn counter(&self) -> u8 {
        self.2
    }

    pub fn target(&self) -> &str {
        &self.3
    }

    /// Letter name, e.g. `q1/dec1/qF`.
    pub fn letter(&self) -> String {
        format!("{}/{}{}/{}", self.0, self.1.tag(), self.2, self.3)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinskyMachine {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(rename = "final")]
    pub final_state: String,
    pub delta: Vec<MachineTransition>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("malformed machine file: {0}")]
    Syntax(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("duplicate state {0:?}")]
    DuplicateState(String),
    #[error("counter must be 1 or 2, got {0}")]
    BadCounter(u8),
    #[error("final state {0:?} has outgoing transitions")]
    FinalHasSuccessor(String),
    #[error("state {0:?} needs one inc, or one dec and one 0? on the same counter")]
    NotDeterministic(String),
}

impl MinskyMachine {
    pub fn parse(text: &str) -> Result<Self, MachineError> {
        let m: MinskyMachine =
            serde_json::from_str(text).map_err(|e| MachineError::Syntax(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }

    /// `|M|`, the number of states.
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn outgoing(&self, q: &str) -> impl Iterator<Item = (usize, &MachineTransition)> {
        let q = q.to_string();
        self.delta.iter().enumerate().filter(move |(_, t)| t.0 == q)
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let mut seen = HashSet::new();
        for s in &self.states {
            if !seen.insert(s.as_str()) {
                return Err(MachineError::DuplicateState(s.clone()));
            }
        }
        let known = |s: &str| {
            if seen.contains(s) {
                Ok(())
            } else {
                Err(MachineError::UnknownState(s.to_string()))
            }
        };
        known(&self.initial)?;
        known(&self.final_state)?;
        for t in &self.delta {
            known(&t.0)?;
            known(&t.3)?;
            if !(1..=2).contains(&t.2) {
                return Err(MachineError::BadCounter(t.2));
            }
        }
        for q in &self.states {
            let out: Vec<&MachineTransition> = self.outgoing(q).map(|(_, t)| t).collect();
            if *q == self.final_state {
                if !out.is_empty() {
                    return Err(MachineError::FinalHasSuccessor(q.clone()));
                }
                continue;
            }
            let ok = match out.as_slice() {
                [t] => t.1 == Instruction::Inc,
                [t, u] => {
                    let mut kinds = [t.1, u.1];
                    kinds.sort();
                    kinds == [Instruction::Dec, Instruction::ZeroTest] && t.2 == u.2
                }
                _ => false,
            };
            if !ok {
                return Err(MachineError::NotDeterministic(q.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RunOutcome {
    Halted,
    BoundExceeded { counter: u8, step: usize },
    CycleDetected { step: usize },
    StepLimit,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Halted => write!(f, "Halted"),
            RunOutcome::BoundExceeded { counter, step } => {
                write!(f, "BoundExceeded(c{counter}, {step})")
            }
            RunOutcome::CycleDetected { step } => write!(f, "CycleDetected({step})"),
            RunOutcome::StepLimit => write!(f, "StepLimit"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Configuration {
    pub state: String,
    pub counters: [u64; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MachineRun {
    /// Configurations, starting with `(q_I, 0, 0)`.
    pub trace: Vec<Configuration>,
    /// Indices into `delta`; `transitions[i]` leads from `trace[i]` to
    /// `trace[i+1]`.
    pub transitions: Vec<usize>,
    pub outcome: RunOutcome,
}

impl MachineRun {
    pub fn steps(&self) -> usize {
        self.transitions.len()
    }

    pub fn max_counter(&self) -> u64 {
        self.trace
            .iter()
            .flat_map(|c| c.counters)
            .max()
            .unwrap_or(0)
    }
}

/// Default step limit `|M| · max(bound, 1)²`.
pub fn default_step_limit(m: &MinskyMachine, bound: u64) -> usize {
    let b = bound.max(1) as u128;
    usize::try_from(m.size() as u128 * b * b).unwrap_or(usize::MAX)
}

pub fn run_bounded(
    m: &MinskyMachine,
    bound: u64,
    step_limit: Option<usize>,
) -> Result<MachineRun, MachineError> {
    m.validate()?;
    let limit = step_limit.unwrap_or_else(|| default_step_limit(m, bound));
    let index: BTreeMap<&str, usize> = m
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut q = m.initial.clone();
    let mut c = [0u64; 2];
    let mut trace = vec![Configuration {
        state: q.clone(),
        counters: c,
    }];
    let mut transitions = Vec::new();
    let mut seen = HashSet::new();
    seen.insert((index[q.as_str()], c));
    let outcome = loop {
        if q == m.final_state {
            break RunOutcome::Halted;
        }
        if transitions.len() >= limit {
            break RunOutcome::StepLimit;
        }
        let (ti, t) = m
            .outgoing(&q)
            .find(|(_, t)| {
                let v = c[t.2 as usize - 1];
                match t.1 {
                    Instruction::Inc => true,
                    Instruction::Dec => v > 0,
                    Instruction::ZeroTest => v == 0,
                }
            })
            .expect("validated machines always have an enabled transition");
        let k = t.2 as usize - 1;
        match t.1 {
            Instruction::Inc => c[k] = c[k].saturating_add(1),
            Instruction::Dec => c[k] -= 1,
            Instruction::ZeroTest => {}
        }
        q = t.3.clone();
        transitions.push(ti);
        trace.push(Configuration {
            state: q.clone(),
            counters: c,
        });
        let step = transitions.len();
        if c[k] > bound {
            break RunOutcome::BoundExceeded {
                counter: t.2,
                step,
            };
        }
        if !seen.insert((index[q.as_str()], c)) {
            break RunOutcome::CycleDetected { step };
        }
    };
    Ok(MachineRun {
        trace,
        transitions,
        outcome,
    })
}

pub fn decide_bounded_halting(m: &MinskyMachine, bound: u64) -> Result<bool, MachineError> {
    Ok(run_bounded(m, bound, None)?.outcome == RunOutcome::Halted)
}
