//! The fast-growing hierarchy, its vectorial form `Φ`, and the rewrite rules
//! `N0`, `N1_j`, `N2` that compute `Φ` one unit step at a time.
//!
//! Values are exact. Anything whose representation would exceed the
//! [`Budget`] is an error, never an approximation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest bit length any intermediate value may have.
    pub max_bits: u64,
    /// Largest number of unit steps (function applications, rule steps).
    pub max_steps: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_bits: 1 << 20,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FghError {
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("rule {rule} does not apply to {state}: {reason}")]
    NotApplicable {
        rule: Rule,
        state: String,
        reason: &'static str,
    },
    #[error("step {step}: {source}")]
    ReplayFailed {
        step: usize,
        #[source]
        source: Box<FghError>,
    },
    #[error("malformed input: {0}")]
    Parse(String),
}

struct Meter {
    budget: Budget,
    steps: u64,
}

impl Meter {
    fn new(budget: Budget) -> Self {
        Meter { budget, steps: 0 }
    }

    fn tick(&mut self, n: u64) -> Result<(), FghError> {
        self.steps = self.steps.saturating_add(n);
        if self.steps > self.budget.max_steps {
            return Err(FghError::BudgetExceeded(format!(
                "more than {} steps",
                self.budget.max_steps
            )));
        }
        Ok(())
    }

    fn bits(&self, bits: u64, what: &str) -> Result<(), FghError> {
        if bits > self.budget.max_bits {
            return Err(FghError::BudgetExceeded(format!(
                "{what} needs about {bits} bits, limit is {}",
                self.budget.max_bits
            )));
        }
        Ok(())
    }
}

fn f0(x: &BigUint) -> BigUint {
    x + 1u32
}

fn f1(x: &BigUint) -> BigUint {
    (x << 1u32) + 1u32
}

fn f2(x: &BigUint, meter: &mut Meter) -> Result<BigUint, FghError> {
    let y = x + 1u32;
    // 2^(x+1) * (x+1) has x+1+bits(x+1) bits, give or take one
    let shift = y.to_u64().filter(|s| s.saturating_add(y.bits()) <= meter.budget.max_bits);
    let Some(shift) = shift else {
        return Err(FghError::BudgetExceeded(format!(
            "F_2 of a {}-bit argument is a tower of 2s beyond the {}-bit limit",
            x.bits(),
            meter.budget.max_bits
        )));
    };
    meter.tick(1)?;
    Ok((&y << shift) - 1u32)
}

/// `F_i^n(x)`.
fn iterate(i: u64, n: &BigUint, x: BigUint, meter: &mut Meter) -> Result<BigUint, FghError> {
    match i {
        0 => {
            let v = x + n;
            meter.bits(v.bits(), "F_0 iterate")?;
            Ok(v)
        }
        1 => {
            // F_1^n(x) = 2^n (x+1) - 1
            let n = n
                .to_u64()
                .filter(|n| n.saturating_add((&x + 1u32).bits()) <= meter.budget.max_bits)
                .ok_or_else(|| FghError::BudgetExceeded(format!("F_1 iterated {n} times")))?;
            Ok(((x + 1u32) << n) - 1u32)
        }
        _ => {
            let mut v = x;
            let mut left = n.clone();
            while !left.is_zero() {
                v = apply(i, &v, meter)?;
                left -= 1u32;
            }
            Ok(v)
        }
    }
}

fn apply(i: u64, x: &BigUint, meter: &mut Meter) -> Result<BigUint, FghError> {
    meter.tick(1)?;
    match i {
        0 => Ok(f0(x)),
        1 => {
            meter.bits(x.bits() + 1, "F_1")?;
            Ok(f1(x))
        }
        2 => f2(x, meter),
        _ if x.is_zero() => Ok(BigUint::one()),
        // F_4(1) = F_3(2047) already dwarfs any addressable bit length, and
        // F_i is increasing in both i and x
        _ if i >= 4 => Err(FghError::BudgetExceeded(format!(
            "F_{i}({x}) is at least F_4(1), far beyond any bit budget"
        ))),
        _ => iterate(i - 1, &(x + 1u32), x.clone(), meter),
    }
}

/// `F_i(x)`: `F_0(x) = x+1`, `F_{i+1}(x) = F_i^{x+1}(x)`.
pub fn f_eval(i: u64, x: &BigUint, budget: Budget) -> Result<BigUint, FghError> {
    apply(i, x, &mut Meter::new(budget))
}

/// `F_ω(x) = F_x(x)`.
pub fn f_omega(x: u64, budget: Budget) -> Result<BigUint, FghError> {
    f_eval(x, &BigUint::from(x), budget)
}

/// A vector `a` (index 0 is `a_0`, the innermost dimension) and an argument.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RewriteState {
    pub a: Vec<BigUint>,
    pub x: BigUint,
}

impl RewriteState {
    /// From components listed outermost first, `a_k, …, a_0`.
    pub fn from_msb(a: &[u64], x: u64) -> Self {
        RewriteState {
            a: a.iter().rev().map(|&v| BigUint::from(v)).collect(),
            x: BigUint::from(x),
        }
    }

    /// Dimension `k` (the vector has `k+1` entries).
    pub fn k(&self) -> usize {
        self.a.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    pub fn norm_inf(&self) -> BigUint {
        self.a.iter().max().cloned().unwrap_or_default()
    }
}

impl fmt::Display for RewriteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.a.iter().rev().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "; {})", self.x)
    }
}

impl fmt::Debug for RewriteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `"a_k,…,a_0"`.
pub fn parse_vector(text: &str) -> Result<Vec<BigUint>, FghError> {
    let mut a = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<BigUint>()
                .map_err(|e| FghError::Parse(format!("{t:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    a.reverse();
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    N0,
    N1(usize),
    N2,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::N0 => write!(f, "N0"),
            Rule::N1(j) => write!(f, "N1_{j}"),
            Rule::N2 => write!(f, "N2"),
        }
    }
}

impl FromStr for Rule {
    type Err = FghError;

    fn from_str(s: &str) -> Result<Self, FghError> {
        match s {
            "N0" => Ok(Rule::N0),
            "N2" => Ok(Rule::N2),
            _ => s
                .strip_prefix("N1_")
                .and_then(|j| j.parse().ok())
                .filter(|&j| j >= 1)
                .map(Rule::N1)
                .ok_or_else(|| FghError::Parse(format!("unknown rule {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleOutcome {
    State(RewriteState),
    Value(BigUint),
}

fn check_applicable(s: &RewriteState, r: Rule) -> Result<(), FghError> {
    let fail = |reason| {
        Err(FghError::NotApplicable {
            rule: r,
            state: s.to_string(),
            reason,
        })
    };
    match r {
        Rule::N0 => Ok(()),
        Rule::N1(j) if j == 0 || j > s.k() => fail("dimension out of range"),
        Rule::N1(j) if s.a[j].is_zero() => fail("a_j is 0"),
        Rule::N2 if s.a.is_empty() || s.a[0].is_zero() => fail("a_0 is 0"),
        _ => Ok(()),
    }
}

pub fn apply_rule(s: &RewriteState, r: Rule) -> Result<RuleOutcome, FghError> {
    check_applicable(s, r)?;
    Ok(match r {
        Rule::N0 => RuleOutcome::Value(s.x.clone()),
        Rule::N1(j) => {
            let mut t = s.clone();
            t.a[j] -= 1u32;
            t.a[j - 1] = &s.x + 1u32;
            RuleOutcome::State(t)
        }
        Rule::N2 => {
            let mut t = s.clone();
            t.a[0] -= 1u32;
            t.x += 1u32;
            RuleOutcome::State(t)
        }
    })
}

/// `N1_j` is proper iff every dimension below `j` is 0; the other rules
/// always are.
pub fn is_proper(s: &RewriteState, r: Rule) -> Result<bool, FghError> {
    check_applicable(s, r)?;
    Ok(match r {
        Rule::N1(j) => s.a[..j].iter().all(Zero::is_zero),
        _ => true,
    })
}

/// The canonical proper rule for `s`: `N2` while `a_0 > 0`, else `N1_j` for
/// the least `j` with `a_j > 0`, else `N0`.
pub fn next_proper(s: &RewriteState) -> Rule {
    match s.a.iter().position(|v| !v.is_zero()) {
        Some(0) => Rule::N2,
        Some(j) => Rule::N1(j),
        None => Rule::N0,
    }
}

/// Lazily walks the canonical proper schedule, yielding each rule with the
/// state it is applied to.
pub struct ProperSchedule {
    state: Option<RewriteState>,
}

impl ProperSchedule {
    pub fn new(start: RewriteState) -> Self {
        ProperSchedule { state: Some(start) }
    }
}

impl Iterator for ProperSchedule {
    type Item = (RewriteState, Rule);

    fn next(&mut self) -> Option<Self::Item> {
        let s = self.state.take()?;
        let r = next_proper(&s);
        if let RuleOutcome::State(t) = apply_rule(&s, r).expect("canonical rule applies") {
            self.state = Some(t);
        }
        Some((s, r))
    }
}

/// The full canonical proper schedule from `start`, ending with `N0`.
pub fn proper_sequence(start: &RewriteState, budget: Budget) -> Result<Vec<Rule>, FghError> {
    let mut meter = Meter::new(budget);
    let mut rules = Vec::new();
    for (s, r) in ProperSchedule::new(start.clone()) {
        meter.tick(1)?;
        meter.bits(s.x.bits(), "rewrite argument")?;
        rules.push(r);
    }
    Ok(rules)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    /// `states[0]` is the start; `states[i+1]` follows rule `i`.
    pub states: Vec<RewriteState>,
    /// Set when the last rule was `N0`.
    pub value: Option<BigUint>,
}

/// Applies `rules` in order. `N0` may only come last.
pub fn replay(start: &RewriteState, rules: &[Rule]) -> Result<Trace, FghError> {
    let mut states = vec![start.clone()];
    let mut value = None;
    for (i, &r) in rules.iter().enumerate() {
        let fail = |e| FghError::ReplayFailed {
            step: i,
            source: Box::new(e),
        };
        if value.is_some() {
            return Err(fail(FghError::Parse("no rule may follow N0".into())));
        }
        match apply_rule(states.last().expect("nonempty"), r).map_err(fail)? {
            RuleOutcome::State(t) => states.push(t),
            RuleOutcome::Value(v) => value = Some(v),
        }
    }
    Ok(Trace { states, value })
}

/// `Φ(a_k,…,a_0; x) = F_k^{a_k}(… F_1^{a_1}(F_0^{a_0}(x)))`.
pub fn phi_eval(s: &RewriteState, budget: Budget) -> Result<BigUint, FghError> {
    let mut meter = Meter::new(budget);
    let mut v = s.x.clone();
    for (i, n) in s.a.iter().enumerate() {
        v = iterate(i as u64, n, v, &mut meter)?;
    }
    Ok(v)
}
