//! Game generators: the blind game `G_M` simulating a two-counter machine,
//! the pumping game `I_m` computing `F_ω(m)` through the rewrite rules, and
//! their composition.
//!
//! Letter names: `start` opens every game (Adam then picks the gadget),
//! `#` separates machine runs, machine transitions are named like
//! `q1/dec1/qF`, rewrite rules `N0`, `N1_j`, `N2`. Missing pairs go to a
//! sink `bot` with `-1` loops.

use num_bigint::BigUint;
use thiserror::Error;

use crate::fgh::{self, Budget, FghError, RewriteState, Rule, RuleOutcome};
use crate::game::{self, ActionId, Game, GameBuilder, ObservationId, StateId};
use crate::minsky::{self, Instruction, MachineError, MinskyMachine, RunOutcome};
use crate::strategy::{Controller, WordStrategy};

pub const START: &str = "start";
pub const HASH: &str = "#";
pub const SINK_WEIGHT: i64 = -1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("pumping game needs m >= 1")]
    PumpSize,
    #[error("machine has no {0}-bounded halting run")]
    NotHalting(u64),
    #[error(transparent)]
    Rewrite(#[from] FghError),
}

pub fn rule_letter(r: Rule) -> String {
    r.to_string()
}

/// Name-addressed wrapper around [`GameBuilder`] for generators, whose
/// names are fresh by construction.
struct Net {
    b: GameBuilder,
}

impl Net {
    fn new(letters: &[String]) -> Self {
        let mut b = GameBuilder::new();
        for l in letters {
            b.add_action(l.clone()).expect("generated letters are distinct");
        }
        Net { b }
    }

    fn state(&mut self, name: String) -> StateId {
        self.b.add_state(name).expect("generated states are distinct")
    }

    fn letter(&self, name: &str) -> ActionId {
        self.b.action_id(name).expect("generated letter")
    }

    fn letters(&self) -> Vec<ActionId> {
        self.b.actions().collect()
    }

    fn edge(&mut self, src: StateId, a: ActionId, dst: StateId, w: i64) {
        self.b.edge(src, a, dst, w);
    }

    fn loop_all(&mut self, q: StateId, w: i64) {
        for a in self.letters() {
            self.edge(q, a, q, w);
        }
    }

    fn finish(mut self, initial: StateId) -> Game {
        self.b.set_initial(initial).blind();
        let g = self.b.build().expect("generated references are valid");
        game::make_total(&g, SINK_WEIGHT)
    }
}

/// The letters a machine contributes: `#` followed by its transitions.
fn machine_letters(m: &MinskyMachine) -> Vec<String> {
    std::iter::once(HASH.to_string())
        .chain(m.delta.iter().map(|t| t.letter()))
        .collect()
}

fn pump_letters(m: usize) -> Vec<String> {
    std::iter::once(rule_letter(Rule::N0))
        .chain((1..=m).map(|j| rule_letter(Rule::N1(j))))
        .chain(std::iter::once(rule_letter(Rule::N2)))
        .collect()
}

/// The gadgets of `G_M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gadget {
    /// The first letter must be `#`.
    FirstLetter,
    /// What may follow a letter: transition `Some(i)` of the machine, or
    /// `#` for `None`.
    Successor(Option<usize>),
    /// `#` recurs, at most `|M|³` letters apart.
    Restart,
    /// Counter `k` never exceeds `|M|`.
    CounterBound(u8),
    /// Decrements and zero tests of counter `k` are resolved correctly.
    ZeroCheck(u8),
}

impl Gadget {
    fn prefix(self, m: &MinskyMachine) -> String {
        match self {
            Gadget::FirstLetter => "g1".into(),
            Gadget::Successor(None) => format!("g2[{HASH}]"),
            Gadget::Successor(Some(i)) => format!("g2[{}]", m.delta[i].letter()),
            Gadget::Restart => "g3".into(),
            Gadget::CounterBound(k) => format!("g4.c{k}"),
            Gadget::ZeroCheck(k) => format!("g5.c{k}"),
        }
    }

    /// Weight of the transition entering the gadget.
    pub fn entry_weight(self, m: &MinskyMachine) -> u64 {
        let n = m.size() as u64;
        match self {
            Gadget::FirstLetter | Gadget::Successor(_) => 0,
            Gadget::Restart | Gadget::ZeroCheck(_) => n.pow(3),
            Gadget::CounterBound(_) => n,
        }
    }
}

/// All gadgets of `G_M` in the order they are wired.
pub fn gadgets(m: &MinskyMachine) -> Vec<Gadget> {
    let mut out = vec![Gadget::FirstLetter, Gadget::Successor(None)];
    out.extend((0..m.delta.len()).map(|i| Gadget::Successor(Some(i))));
    out.push(Gadget::Restart);
    out.extend([1, 2].map(Gadget::CounterBound));
    out.extend([1, 2].map(Gadget::ZeroCheck));
    out
}

/// Letters allowed right after `after` in an honest word: the transitions
/// leaving the target state, or `#` once the final state is reached.
fn allowed_after(m: &MinskyMachine, after: Option<usize>) -> Vec<String> {
    let target = match after {
        Some(i) => m.delta[i].target(),
        None => m.initial.as_str(),
    };
    if target == m.final_state {
        vec![HASH.to_string()]
    } else {
        m.outgoing(target).map(|(_, t)| t.letter()).collect()
    }
}

/// Counter effect of a letter on counter `k`: `+1`, `-1` or `0`.
fn counter_effect(m: &MinskyMachine, k: u8, a: &str) -> i64 {
    m.delta
        .iter()
        .find(|t| t.letter() == a && t.counter() == k)
        .map_or(0, |t| match t.instruction() {
            Instruction::Inc => 1,
            Instruction::Dec => -1,
            Instruction::ZeroTest => 0,
        })
}

fn has_instruction(m: &MinskyMachine, k: u8, i: Instruction, a: &str) -> bool {
    m.delta
        .iter()
        .any(|t| t.letter() == a && t.counter() == k && t.instruction() == i)
}

/// Adds one gadget, wired over the machine letters only, and returns its
/// initial state.
fn add_gadget(net: &mut Net, m: &MinskyMachine, gadget: Gadget) -> StateId {
    let p = gadget.prefix(m);
    let letters = machine_letters(m);
    let ids: Vec<(ActionId, &str)> = letters.iter().map(|l| (net.letter(l), l.as_str())).collect();
    let hash = net.letter(HASH);
    match gadget {
        Gadget::FirstLetter => {
            let (a, b, c) = (net.state(format!("{p}.a")), net.state(format!("{p}.b")), net.state(format!("{p}.c")));
            for &(l, _) in &ids {
                net.edge(a, l, if l == hash { b } else { c }, 0);
                net.edge(b, l, b, 0);
                net.edge(c, l, c, -1);
            }
            a
        }
        Gadget::Successor(after) => {
            let first = match after {
                Some(i) => net.letter(&m.delta[i].letter()),
                None => hash,
            };
            let allowed = allowed_after(m, after);
            let s: Vec<StateId> = ["a", "b", "c", "d"]
                .iter()
                .map(|x| net.state(format!("{p}.{x}")))
                .collect();
            let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
            net.edge(a, first, b, 0);
            for &(l, name) in &ids {
                net.edge(a, l, a, 0);
                let ok = allowed.iter().any(|x| x == name);
                net.edge(b, l, if ok { c } else { d }, 0);
                net.edge(c, l, c, 0);
                net.edge(d, l, d, -1);
            }
            a
        }
        Gadget::Restart => {
            let (a, b, c) = (net.state(format!("{p}.a")), net.state(format!("{p}.b")), net.state(format!("{p}.c")));
            net.edge(a, hash, b, 0);
            net.edge(b, hash, c, 0);
            for &(l, _) in &ids {
                net.edge(a, l, a, 0);
                if l != hash {
                    net.edge(b, l, b, -1);
                }
                net.edge(c, l, c, 0);
            }
            a
        }
        Gadget::CounterBound(k) => {
            let a = net.state(format!("{p}.a"));
            for &(l, name) in &ids {
                net.edge(a, l, a, -counter_effect(m, k, name));
            }
            a
        }
        Gadget::ZeroCheck(k) => {
            let s: Vec<StateId> = ["a", "b", "c", "d"]
                .iter()
                .map(|x| net.state(format!("{p}.{x}")))
                .collect();
            // b replays the counter inverted and returns on a zero test;
            // c replays it and returns on a decrement. Both keep tracking
            // through correct instructions and leave for d on #.
            let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
            net.edge(a, hash, b, 0);
            net.edge(a, hash, c, 0);
            net.edge(b, hash, d, 0);
            net.edge(c, hash, d, 0);
            for &(l, name) in &ids {
                net.edge(a, l, a, 0);
                net.edge(d, l, d, 0);
                if l == hash {
                    continue;
                }
                let effect = counter_effect(m, k, name);
                net.edge(b, l, b, -effect);
                net.edge(c, l, c, effect);
                if has_instruction(m, k, Instruction::ZeroTest, name) {
                    net.edge(b, l, a, 0);
                }
                if has_instruction(m, k, Instruction::Dec, name) {
                    net.edge(c, l, a, -1);
                }
            }
            a
        }
    }
}

/// One gadget as a game of its own over `δ ∪ {#}`, with the credit it is
/// entered with in `G_M`.
pub fn gadget_game(m: &MinskyMachine, gadget: Gadget) -> Result<(Game, u64), ReductionError> {
    m.validate()?;
    let mut net = Net::new(&machine_letters(m));
    let init = add_gadget(&mut net, m, gadget);
    Ok((net.finish(init), gadget.entry_weight(m)))
}

/// The blind game `G_M` over `{start, #} ∪ δ`.
pub fn gen_g_m(m: &MinskyMachine) -> Result<Game, ReductionError> {
    m.validate()?;
    let mut letters = vec![START.to_string()];
    letters.extend(machine_letters(m));
    let mut net = Net::new(&letters);
    let q0 = net.state("q0".into());
    let start = net.letter(START);
    for gadget in gadgets(m) {
        let entry = add_gadget(&mut net, m, gadget);
        net.edge(q0, start, entry, gadget.entry_weight(m) as i64);
    }
    Ok(net.finish(q0))
}

struct PumpStates {
    q0: StateId,
    top: StateId,
    chi: StateId,
    alpha: Vec<StateId>,
}

/// Adds the pumping states with the rewrite-rule transitions. `q0` enters
/// `Q_N` on `entry`; `χ`'s `N0` edges are left to the caller.
fn add_pump(net: &mut Net, prefix: &str, m: usize, entry: ActionId) -> PumpStates {
    let q0 = net.state(format!("{prefix}q0"));
    let top = net.state(format!("{prefix}top"));
    let chi = net.state(format!("{prefix}chi"));
    let alpha: Vec<StateId> = (0..=m).map(|i| net.state(format!("{prefix}alpha{i}"))).collect();
    net.loop_all(top, 0);
    for (i, &s) in alpha.iter().enumerate() {
        net.edge(q0, entry, s, i64::from(i == m));
    }
    net.edge(q0, entry, chi, m as i64);

    let n0 = net.letter(&rule_letter(Rule::N0));
    for &s in &alpha {
        net.edge(s, n0, top, 0);
    }
    for j in 1..=m {
        let l = net.letter(&rule_letter(Rule::N1(j)));
        for (i, &s) in alpha.iter().enumerate() {
            match i {
                _ if i == j => net.edge(s, l, s, -1),
                _ if i + 1 == j => net.edge(s, l, top, 0),
                _ => net.edge(s, l, s, 0),
            }
        }
        net.edge(chi, l, alpha[j - 1], 1);
        net.edge(chi, l, chi, 0);
    }
    let n2 = net.letter(&rule_letter(Rule::N2));
    for (i, &s) in alpha.iter().enumerate() {
        net.edge(s, n2, s, if i == 0 { -1 } else { 0 });
    }
    net.edge(chi, n2, chi, 1);
    PumpStates { q0, top, chi, alpha }
}

/// The pumping game `I_m` with exactly `m + 5` states. Letters with no
/// gadget edge (anything but `start` at `q0`, `start` elsewhere) lead to `⊤`.
pub fn gen_pump(m: usize) -> Result<Game, ReductionError> {
    if m < 1 {
        return Err(ReductionError::PumpSize);
    }
    let mut letters = vec![START.to_string()];
    letters.extend(pump_letters(m));
    let mut net = Net::new(&letters);
    let start = net.letter(START);
    let p = add_pump(&mut net, "", m, start);
    let f = net.state("f".into());
    net.loop_all(f, 0);
    net.edge(p.chi, net.letter(&rule_letter(Rule::N0)), f, 0);
    for a in net.letters() {
        if a != start {
            net.edge(p.q0, a, p.top, 0);
        }
    }
    for &s in p.alpha.iter().chain([&p.chi]) {
        net.edge(s, start, p.top, 0);
    }
    Ok(net.finish(p.q0))
}

/// Two pumping copies, the relay states `s0`, `s1` and the gadgets of
/// `G_M`, all over one alphabet.
pub fn gen_full(m: &MinskyMachine) -> Result<Game, ReductionError> {
    m.validate()?;
    let size = m.size();
    let mut letters = vec![START.to_string()];
    letters.extend(pump_letters(size));
    letters.extend(machine_letters(m));
    let mut net = Net::new(&letters);
    let start = net.letter(START);
    let n0 = net.letter(&rule_letter(Rule::N0));
    let p1 = add_pump(&mut net, "p1.", size, start);
    let s0 = net.state("s0".into());
    let s1 = net.state("s1".into());
    let p2 = add_pump(&mut net, "p2.", size, n0);
    for s in [s0, s1] {
        for j in 1..=size {
            let l = net.letter(&rule_letter(Rule::N1(j)));
            net.edge(s, l, s, 0);
        }
        let l = net.letter(&rule_letter(Rule::N2));
        net.edge(s, l, s, 0);
    }
    net.edge(p1.chi, n0, s0, 0);
    net.edge(p1.chi, n0, p2.q0, 0);
    net.edge(s0, n0, s1, 0);
    for gadget in gadgets(m) {
        let entry = add_gadget(&mut net, m, gadget);
        let from = match gadget {
            Gadget::CounterBound(_) => s1,
            _ => p2.chi,
        };
        net.edge(from, n0, entry, 0);
    }
    Ok(net.finish(p1.q0))
}

/// The halting run of `m` within counter bound `|M|`, as letters.
pub fn halting_letters(m: &MinskyMachine) -> Result<Vec<String>, ReductionError> {
    let bound = m.size() as u64;
    let run = minsky::run_bounded(m, bound, None)?;
    if run.outcome != RunOutcome::Halted {
        return Err(ReductionError::NotHalting(bound));
    }
    Ok(run.transitions.iter().map(|&i| m.delta[i].letter()).collect())
}

/// Eve's blind word `start · (# ρ)^ω` in `G_M` for the halting run `ρ`.
pub fn honest_word(g: &Game, m: &MinskyMachine) -> Result<WordStrategy, ReductionError> {
    let run = halting_letters(m)?;
    let mut cycle = vec![HASH];
    cycle.extend(run.iter().map(String::as_str));
    Ok(WordStrategy::from_names(g, &[START], &cycle).map_err(|e| {
        MachineError::Syntax(format!("game lacks a machine letter: {e}"))
    })?)
}

/// `start · P · N0^ω` in `I_m`, `P` the canonical proper schedule from
/// `(1,0,…,0; m)` without its final `N0`.
pub fn pump_word(g: &Game, m: usize, budget: Budget) -> Result<WordStrategy, ReductionError> {
    let rules = fgh::proper_sequence(&pump_start(m), budget)?;
    let letter = |r: Rule| g.action_id(&rule_letter(r)).expect("pump letter");
    let mut prefix = vec![g.action_id(START).expect("start letter")];
    prefix.extend(rules[..rules.len() - 1].iter().map(|&r| letter(r)));
    Ok(WordStrategy::new(prefix, vec![letter(Rule::N0)]))
}

/// `(1, 0, …, 0; m)` with `m + 1` components.
pub fn pump_start(m: usize) -> RewriteState {
    let mut a = vec![0u64; m + 1];
    a[0] = 1;
    RewriteState::from_msb(&a, m as u64)
}

/// Eve's honest strategy in [`gen_full`], computed lazily: pump through
/// the first copy, exit with `N0`, enter the second copy with `N0`, pump
/// again from the carried value, exit with `N0`, then `(# ρ)^ω`.
#[derive(Clone, Debug)]
pub struct HonestFull {
    m: usize,
    start: ActionId,
    rules: Vec<ActionId>,
    cycle: Vec<ActionId>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HonestPhase {
    Start,
    FirstPump(RewriteStateKey),
    SecondEntry(BigUint),
    SecondPump(RewriteStateKey),
    Run(usize),
}

/// Ordered key for a rewrite state, usable as controller memory.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RewriteStateKey {
    pub a: Vec<BigUint>,
    pub x: BigUint,
}

impl From<&RewriteStateKey> for RewriteState {
    fn from(k: &RewriteStateKey) -> Self {
        RewriteState {
            a: k.a.clone(),
            x: k.x.clone(),
        }
    }
}

impl From<RewriteState> for RewriteStateKey {
    fn from(s: RewriteState) -> Self {
        RewriteStateKey { a: s.a, x: s.x }
    }
}

impl HonestFull {
    pub fn new(g: &Game, m: &MinskyMachine) -> Result<Self, ReductionError> {
        let run = halting_letters(m)?;
        let id = |name: &str| {
            g.action_id(name)
                .map_err(|e| MachineError::Syntax(format!("game lacks a letter: {e}")))
        };
        let size = m.size();
        let mut rules = vec![id(&rule_letter(Rule::N0))?];
        for j in 1..=size {
            rules.push(id(&rule_letter(Rule::N1(j)))?);
        }
        rules.push(id(&rule_letter(Rule::N2))?);
        let mut cycle = vec![id(HASH)?];
        for l in &run {
            cycle.push(id(l)?);
        }
        Ok(HonestFull {
            m: size,
            start: id(START)?,
            rules,
            cycle,
        })
    }

    fn letter(&self, r: Rule) -> ActionId {
        match r {
            Rule::N0 => self.rules[0],
            Rule::N1(j) => self.rules[j],
            Rule::N2 => self.rules[self.m + 1],
        }
    }

    fn advance(s: &RewriteStateKey) -> Option<RewriteStateKey> {
        let s = RewriteState::from(s);
        match fgh::apply_rule(&s, fgh::next_proper(&s)).expect("canonical rule applies") {
            RuleOutcome::State(t) => Some(t.into()),
            RuleOutcome::Value(_) => None,
        }
    }
}

impl Controller for HonestFull {
    type State = HonestPhase;

    fn start(&self) -> HonestPhase {
        HonestPhase::Start
    }

    fn action(&self, s: &HonestPhase) -> Option<ActionId> {
        Some(match s {
            HonestPhase::Start => self.start,
            HonestPhase::FirstPump(k) | HonestPhase::SecondPump(k) => {
                self.letter(fgh::next_proper(&RewriteState::from(k)))
            }
            HonestPhase::SecondEntry(_) => self.letter(Rule::N0),
            HonestPhase::Run(i) => self.cycle[*i],
        })
    }

    fn observe(&self, s: &HonestPhase, _o: ObservationId) -> Option<HonestPhase> {
        Some(match s {
            HonestPhase::Start => HonestPhase::FirstPump(pump_start(self.m).into()),
            HonestPhase::FirstPump(k) => match Self::advance(k) {
                Some(t) => HonestPhase::FirstPump(t),
                None => HonestPhase::SecondEntry(k.x.clone()),
            },
            HonestPhase::SecondEntry(v) => {
                // entering the second copy adds 1 to α_m and m to χ
                let mut a = vec![v.clone(); self.m + 1];
                a[self.m] += 1u32;
                HonestPhase::SecondPump(RewriteStateKey {
                    a,
                    x: v + self.m,
                })
            }
            HonestPhase::SecondPump(k) => match Self::advance(k) {
                Some(t) => HonestPhase::SecondPump(t),
                None => HonestPhase::Run(0),
            },
            HonestPhase::Run(i) => HonestPhase::Run((i + 1) % self.cycle.len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minsky::MachineTransition;
    use crate::strategy::{simulate, Adversary};

    pub(crate) fn m_halt() -> MinskyMachine {
        use Instruction::*;
        MinskyMachine {
            states: vec!["qI".into(), "q1".into(), "qF".into()],
            initial: "qI".into(),
            final_state: "qF".into(),
            delta: vec![
                MachineTransition("qI".into(), Inc, 1, "q1".into()),
                MachineTransition("q1".into(), Dec, 1, "qF".into()),
                MachineTransition("q1".into(), ZeroTest, 1, "qF".into()),
            ],
        }
    }

    #[test]
    fn g_m_is_blind_and_total() {
        let g = gen_g_m(&m_halt()).unwrap();
        assert!(g.is_blind());
        assert!(g.is_total());
        assert!(game::validate(&g).is_empty());
        assert_eq!(g.alphabet()[..2], [START.to_string(), HASH.to_string()]);
    }

    #[test]
    fn honest_word_survives_g_m() {
        let m = m_halt();
        let g = gen_g_m(&m).unwrap();
        let w = honest_word(&g, &m).unwrap();
        let r = simulate(&g, 0, &w, Adversary::Exhaustive { depth: 20 }, 20).unwrap();
        assert!(!r.violated);
    }

    #[test]
    fn wrong_first_letter_is_punished() {
        let m = m_halt();
        let g = gen_g_m(&m).unwrap();
        let w = WordStrategy::from_names(&g, &[START], &["qI/inc1/q1"]).unwrap();
        let r = simulate(&g, 0, &w, Adversary::Exhaustive { depth: 3 }, 3).unwrap();
        assert!(r.violated);
        assert!(r.first_violation.unwrap() <= 3);
    }

    #[test]
    fn pump_has_m_plus_five_states() {
        for m in 1..=4 {
            let g = gen_pump(m).unwrap();
            // no sink state: every pair already has an edge
            assert_eq!(g.num_states(), m + 5);
            assert!(g.is_blind() && g.is_total());
        }
        assert_eq!(gen_pump(0), Err(ReductionError::PumpSize));
    }

    #[test]
    fn canonical_pump_word_reaches_f_with_f_omega() {
        let g = gen_pump(1).unwrap();
        let w = pump_word(&g, 1, Budget::default()).unwrap();
        assert_eq!(w.prefix.len(), 4);
        let r = simulate(&g, 0, &w, Adversary::Exhaustive { depth: 12 }, 12).unwrap();
        assert!(!r.violated);
        let f = g.state_id("f").unwrap();
        assert_eq!(r.min_energy_at.get(&f), Some(&3));
    }

    #[test]
    fn full_game_is_total_and_blind() {
        let g = gen_full(&m_halt()).unwrap();
        assert!(g.is_blind() && g.is_total());
        assert!(game::validate(&g).is_empty());
    }

    #[test]
    fn honest_full_controller_survives_random_play() {
        let m = m_halt();
        let g = gen_full(&m).unwrap();
        let c = HonestFull::new(&g, &m).unwrap();
        let r = simulate(&g, 0, &c, Adversary::Random { seed: 7 }, 2000).unwrap();
        assert!(!r.violated);
        assert_eq!(r.steps, 2000);
    }
}
