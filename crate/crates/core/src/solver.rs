//! The belief tree and its safety game.
//!
//! Nodes are function-action sequences `f0 σ0 f1 … fn` read off root paths.
//! A node is expanded iff its belief is non-negative and no proper ancestor's
//! belief is `⪯` it; leaves carry implicit self-loops. Eve wins the energy
//! game from credit `c0` iff she wins the safety game (avoid negative beliefs)
//! from the root.
//!
//! Construction is depth-first, actions in alphabet order, observations in
//! declaration order, ids in creation order. One sharing rule is layered on
//! top: a belief equal to that of an already solved interior node may become
//! a [`NodeStatus::Shared`] leaf carrying that node's verdict. A losing
//! verdict is reused anywhere. A winning verdict may rest on back-edges to
//! ancestors above the original node, so it is reused only where each of
//! those ancestors is matched by an ancestor whose belief is `⪯` it: every
//! back-edge of the original subtree then still has a target, and any extra
//! cut only adds winning leaves.
//!
//! [`decide`] runs the lazy variant [`build_lazy`], which stops visiting the
//! children of a node as soon as its verdict is known.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::belief::{self, BeliefFunction};
use crate::game::{self, ActionId, Game, StateId};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: Option<usize>,
    pub max_time: Option<Duration>,
}

impl Limits {
    pub const DEFAULT_MAX_NODES: usize = 1_000_000;
    pub const DEFAULT_MAX_TIME: Duration = Duration::from_secs(60);

    pub fn unlimited() -> Self {
        Limits {
            max_nodes: None,
            max_time: None,
        }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: Some(Self::DEFAULT_MAX_NODES),
            max_time: Some(Self::DEFAULT_MAX_TIME),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Win,
    Lose,
    ResourceLimit,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Win => "Win",
            Verdict::Lose => "Lose",
            Verdict::ResourceLimit => "ResourceLimit",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub verdict: Verdict,
    pub nodes_built: usize,
    pub max_depth: usize,
    /// `t = c0 + w_max + |Q|`, the offset of the control function.
    pub control_parameter: u128,
    #[serde(rename = "elapsed_ms", serialize_with = "as_millis")]
    pub elapsed: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Interior,
    NegativeLeaf,
    SubsumedLeaf { ancestor: NodeId },
    /// Leaf reusing the verdict of an earlier node with an equal belief.
    Shared { original: NodeId },
    /// Created but never visited: a limit was hit, or a lazy build settled
    /// the parent without it.
    Frontier,
}

impl NodeStatus {
    pub fn is_leaf(self) -> bool {
        !matches!(self, NodeStatus::Interior)
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub incoming_action: Option<ActionId>,
    pub depth: usize,
    pub status: NodeStatus,
    belief: u32,
    // children of interior nodes are consecutive ids; `bounds` indexes the
    // per-action offsets in `SafetyGame::child_bounds`
    first_child: u32,
    bounds: u32,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{}", game::GameError::Invalid(.0.clone()))]
    InvalidGame(Vec<game::Violation>),
    #[error("resource limit reached after {nodes_built} nodes ({elapsed:?})")]
    ResourceLimit {
        nodes_built: usize,
        max_depth: usize,
        elapsed: Duration,
        partial: Box<SafetyGame>,
    },
}

/// The finite safety game `H` over function-action sequences.
#[derive(Clone, Debug)]
pub struct SafetyGame {
    nodes: Vec<TreeNode>,
    beliefs: Vec<Arc<BeliefFunction>>,
    child_bounds: Vec<u32>,
    num_actions: usize,
    c0: u64,
    max_depth: usize,
    elapsed: Duration,
    // shared leaves whose winning verdict holds only thanks to their own
    // ancestors, in increasing order
    contextual: Vec<NodeId>,
}

impl SafetyGame {
    /// True for a [`NodeStatus::Shared`] leaf that reuses a winning verdict
    /// whose subtree has back-edges above its original node. Replaying the
    /// original from such a leaf would follow those back-edges to the wrong
    /// ancestors, so strategies are extracted from trees without them.
    pub fn is_contextual(&self, n: NodeId) -> bool {
        self.contextual.binary_search(&n).is_ok()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, n: NodeId) -> &TreeNode {
        &self.nodes[n]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn credit(&self) -> u64 {
        self.c0
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    pub fn belief(&self, n: NodeId) -> &BeliefFunction {
        &self.beliefs[self.nodes[n].belief as usize]
    }

    /// Number of distinct beliefs stored for the tree.
    pub fn distinct_beliefs(&self) -> usize {
        self.beliefs.len()
    }

    /// Safe nodes are those whose belief is not negative.
    pub fn is_safe(&self, n: NodeId) -> bool {
        self.nodes[n].status != NodeStatus::NegativeLeaf
    }

    /// The `a`-children of an interior node (empty for leaves).
    pub fn children(&self, n: NodeId, a: ActionId) -> std::ops::Range<NodeId> {
        let node = &self.nodes[n];
        if node.status != NodeStatus::Interior {
            return 0..0;
        }
        let base = node.bounds as usize;
        let first = node.first_child as usize;
        let lo = self.child_bounds[base + a.index()] as usize;
        let hi = self.child_bounds[base + a.index() + 1] as usize;
        first + lo..first + hi
    }

    /// Proper ancestors from the parent up to the root.
    pub fn ancestors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.nodes[n].parent, move |&p| self.nodes[p].parent)
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.status.is_leaf())
            .map(|n| n.id)
    }

    /// Root-to-`n` path, root first.
    pub fn path(&self, n: NodeId) -> Vec<NodeId> {
        let mut p: Vec<NodeId> = self.ancestors(n).collect();
        p.reverse();
        p.push(n);
        p
    }
}

struct MemoEntry {
    node: NodeId,
    win: bool,
    // beliefs of the ancestors that back-edges leaving the subtree point to
    requires: Vec<u32>,
}

struct Builder<'g> {
    g: &'g Game,
    nodes: Vec<TreeNode>,
    beliefs: Vec<Arc<BeliefFunction>>,
    belief_ids: HashMap<Arc<BeliefFunction>, u32>,
    child_bounds: Vec<u32>,
    winning: Vec<bool>,
    // depths of proper ancestors the finished subtree relies on, freed once
    // the parent is finished; `None` once there are too many to be worth
    // tracking
    escapes: Vec<Option<Vec<u32>>>,
    memo: HashMap<u32, Vec<MemoEntry>>,
    reuse: Reuse,
    contextual: Vec<NodeId>,
    max_depth: usize,
    // support class of every interned belief
    support_of: Vec<u32>,
    supports: HashMap<Vec<StateId>, u32>,
    // beliefs of the expanded nodes on the current branch, by depth, and the
    // depths on it grouped by support class
    path: Vec<u32>,
    by_support: Vec<Vec<u32>>,
    on_path: HashMap<u32, Vec<u32>>,
}

// bounds on the bookkeeping spent per belief; reuse is optional, so skipping
// it never changes a verdict
const MEMO_PER_BELIEF: usize = 4;
const MEMO_MAX_REQUIRES: usize = 8;
const COVER_SCAN: usize = 32;

impl Builder<'_> {
    fn intern(&mut self, f: BeliefFunction) -> u32 {
        if let Some(&id) = self.belief_ids.get(&f) {
            return id;
        }
        let id = u32::try_from(self.beliefs.len()).expect("belief count overflows u32");
        let support: Vec<StateId> = f.support().collect();
        let next = u32::try_from(self.supports.len()).expect("support count overflows u32");
        let class = *self.supports.entry(support).or_insert(next);
        if class == next {
            self.by_support.push(Vec::new());
        }
        self.support_of.push(class);
        let f = Arc::new(f);
        self.beliefs.push(f.clone());
        self.belief_ids.insert(f, id);
        id
    }

    fn push_node(&mut self, parent: Option<NodeId>, action: Option<ActionId>, belief: u32) -> NodeId {
        let id = self.nodes.len();
        let depth = parent.map_or(0, |p| self.nodes[p].depth + 1);
        self.max_depth = self.max_depth.max(depth);
        self.nodes.push(TreeNode {
            id,
            parent,
            incoming_action: action,
            depth,
            status: NodeStatus::Frontier,
            belief,
            first_child: 0,
            bounds: 0,
        });
        self.winning.push(false);
        self.escapes.push(Some(Vec::new()));
        id
    }

    fn leq(&self, a: u32, b: u32) -> bool {
        a == b || belief::leq(&self.beliefs[a as usize], &self.beliefs[b as usize])
    }

    /// Cuts the current branch back to the proper ancestors of a node at
    /// `depth`. Depth-first order guarantees those are what remains.
    fn truncate_path(&mut self, depth: usize) {
        while self.path.len() > depth {
            let b = self.path.pop().expect("nonempty path");
            self.by_support[self.support_of[b as usize] as usize].pop();
            if let Some(depths) = self.on_path.get_mut(&b) {
                depths.pop();
            }
        }
    }

    fn push_path(&mut self, b: u32) {
        let d = u32::try_from(self.path.len()).expect("depth overflows u32");
        self.by_support[self.support_of[b as usize] as usize].push(d);
        self.on_path.entry(b).or_default().push(d);
        self.path.push(b);
    }

    /// Depth of the deepest node on the current branch whose belief is below
    /// `b`.
    fn covering_depth(&self, b: u32) -> Option<usize> {
        self.by_support[self.support_of[b as usize] as usize]
            .iter()
            .rev()
            .map(|&d| d as usize)
            .find(|&d| self.leq(self.path[d], b))
    }

    /// Like [`Self::covering_depth`] but gives up early: an exact match is
    /// looked up directly and only the nearest candidates are compared.
    fn quick_covering_depth(&self, b: u32) -> Option<usize> {
        if let Some(&d) = self.on_path.get(&b).and_then(|v| v.last()) {
            return Some(d as usize);
        }
        self.by_support[self.support_of[b as usize] as usize]
            .iter()
            .rev()
            .take(COVER_SCAN)
            .map(|&d| d as usize)
            .find(|&d| self.leq(self.path[d], b))
    }

    /// Classifies a frontier node. Returns true when it must be expanded.
    fn classify(&mut self, n: NodeId) -> bool {
        let bid = self.nodes[n].belief;
        if belief::is_negative(&self.beliefs[bid as usize]) {
            self.nodes[n].status = NodeStatus::NegativeLeaf;
            self.winning[n] = false;
            return false;
        }
        self.truncate_path(self.nodes[n].depth);
        if let Some(d) = self.covering_depth(bid) {
            let mut a = n;
            while self.nodes[a].depth > d {
                a = self.nodes[a].parent.expect("ancestor exists");
            }
            self.nodes[n].status = NodeStatus::SubsumedLeaf { ancestor: a };
            self.winning[n] = true;
            self.escapes[n] = Some(vec![d as u32]);
            return false;
        }
        if self.reuse == Reuse::Off {
            return true;
        }
        let Some(entries) = self.memo.get(&bid) else {
            return true;
        };
        for e in entries {
            // a losing verdict holds in every context; a winning one only
            // where each ancestor it relied on is matched by a lower one here
            let mut depths = Vec::with_capacity(e.requires.len());
            let covered = e.requires.iter().all(|&r| match self.quick_covering_depth(r) {
                Some(d) => {
                    depths.push(d as u32);
                    true
                }
                None => false,
            });
            if !e.win || covered {
                let (orig, win) = (e.node, e.win);
                depths.sort_unstable();
                depths.dedup();
                self.nodes[n].status = NodeStatus::Shared { original: orig };
                self.winning[n] = win;
                if win && !depths.is_empty() {
                    self.contextual.push(n);
                }
                self.escapes[n] = Some(if win { depths } else { Vec::new() });
                return false;
            }
        }
        true
    }

    fn expand(&mut self, n: NodeId) {
        self.push_path(self.nodes[n].belief);
        let f = self.beliefs[self.nodes[n].belief as usize].clone();
        let first = self.nodes.len();
        let bounds = self.child_bounds.len();
        self.child_bounds.push(0);
        let mut count = 0u32;
        for a in self.g.action_ids() {
            for succ in belief::successors(self.g, &f, a) {
                let bid = self.intern(succ);
                self.push_node(Some(n), Some(a), bid);
                count += 1;
            }
            self.child_bounds.push(count);
        }
        let node = &mut self.nodes[n];
        node.status = NodeStatus::Interior;
        node.first_child = u32::try_from(first).expect("node count overflows u32");
        node.bounds = u32::try_from(bounds).expect("bound table overflows u32");
    }

    /// The next child of `n` worth visiting after `last`, or `None` when the
    /// verdict of `n` is settled.
    fn next_child(&self, n: NodeId, last: Option<NodeId>) -> Option<NodeId> {
        let node = &self.nodes[n];
        let first = node.first_child as usize;
        let base = node.bounds as usize;
        let end = first + self.child_bounds[base + self.g.num_actions()] as usize;
        let next = match last {
            None => first,
            Some(c) => {
                let a = self.nodes[c].incoming_action.expect("child has an action").index();
                let hi = first + self.child_bounds[base + a + 1] as usize;
                if !self.winning[c] {
                    hi
                } else if c + 1 == hi {
                    return None;
                } else {
                    c + 1
                }
            }
        };
        (next < end).then_some(next)
    }

    fn finish(&mut self, n: NodeId) {
        let node = &self.nodes[n];
        let depth = node.depth as u32;
        let first = node.first_child as usize;
        let base = node.bounds as usize;
        let end = first + self.child_bounds[base + self.g.num_actions()] as usize;
        let win = (0..self.g.num_actions()).any(|a| {
            let lo = first + self.child_bounds[base + a] as usize;
            let hi = first + self.child_bounds[base + a + 1] as usize;
            (lo..hi).all(|c| self.winning[c])
        });
        let mut escapes = Some(Vec::new());
        for c in first..end {
            match (self.escapes[c].take(), escapes.as_mut()) {
                (Some(e), Some(acc)) => acc.extend(e.into_iter().filter(|&d| d < depth)),
                (None, _) => escapes = None,
                _ => {}
            }
        }
        if let Some(acc) = escapes.as_mut() {
            acc.sort_unstable();
            acc.dedup();
        }
        if escapes.as_ref().is_some_and(|e| e.len() > MEMO_MAX_REQUIRES) {
            escapes = None;
        }
        self.winning[n] = win;
        if self.reuse != Reuse::Off {
            let requires = match (&escapes, win) {
                (_, false) => Some(Vec::new()),
                (Some(e), true) => Some(e.iter().map(|&d| self.path[d as usize]).collect()),
                (None, true) => None,
            };
            let entries = self.memo.entry(self.nodes[n].belief).or_default();
            let covered = self.reuse == Reuse::Covered;
            let allowed = |r: &Vec<u32>| r.is_empty() || covered;
            if let Some(requires) = requires.filter(|r| entries.len() < MEMO_PER_BELIEF && allowed(r)) {
                entries.push(MemoEntry { node: n, win, requires });
            }
        }
        self.escapes[n] = escapes;
    }

    fn into_game(self, c0: u64, elapsed: Duration) -> SafetyGame {
        SafetyGame {
            nodes: self.nodes,
            beliefs: self.beliefs,
            child_bounds: self.child_bounds,
            num_actions: self.g.num_actions(),
            c0,
            max_depth: self.max_depth,
            elapsed,
            contextual: self.contextual,
        }
    }
}

/// Which solved subtrees may be reused at nodes with an equal belief.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reuse {
    /// Never; the tree is the plain one.
    Off,
    /// Losing verdicts, and winning ones whose back-edges stay inside.
    Closed,
    /// Additionally winning verdicts whose back-edges leave the subtree,
    /// where the new node's ancestors cover their targets.
    Covered,
}

/// Builds the safety game for `g` with initial credit `c0`.
pub fn build_safety_game(g: &Game, c0: u64, limits: Limits) -> Result<SafetyGame, SolveError> {
    build(g, c0, limits, Reuse::Covered, false)
}

/// Like [`build_safety_game`] with an explicit reuse policy. With
/// [`Reuse::Off`] every node is classified by the negativity and ancestor
/// conditions alone.
pub fn build_with(g: &Game, c0: u64, limits: Limits, reuse: Reuse) -> Result<SafetyGame, SolveError> {
    build(g, c0, limits, reuse, false)
}

/// A lazily built tree with [`Reuse::Closed`]: the smallest tree from which
/// [`crate::strategy::extract_strategy`] can read a controller.
pub fn build_for_strategy(g: &Game, c0: u64, limits: Limits) -> Result<SafetyGame, SolveError> {
    build(g, c0, limits, Reuse::Closed, true)
}

/// Builds only as much of the safety game as the root verdict needs.
///
/// Every expanded node still gets all its children, but they are visited one
/// action at a time: once every child of some action is winning the node is
/// settled, and an action is abandoned at its first losing child. Children
/// never visited stay [`NodeStatus::Frontier`], which [`solve_safety`] treats
/// as losing, so the root verdict is the one of the full tree.
pub fn build_lazy(g: &Game, c0: u64, limits: Limits) -> Result<SafetyGame, SolveError> {
    build(g, c0, limits, Reuse::Covered, true)
}

fn build(g: &Game, c0: u64, limits: Limits, reuse: Reuse, lazy: bool) -> Result<SafetyGame, SolveError> {
    let violations = game::validate(g);
    if !violations.is_empty() {
        return Err(SolveError::InvalidGame(violations));
    }
    let start = Instant::now();
    let mut b = Builder {
        g,
        nodes: Vec::new(),
        beliefs: Vec::new(),
        belief_ids: HashMap::new(),
        child_bounds: Vec::new(),
        winning: Vec::new(),
        escapes: Vec::new(),
        memo: HashMap::new(),
        reuse,
        contextual: Vec::new(),
        max_depth: 0,
        support_of: Vec::new(),
        supports: HashMap::new(),
        path: Vec::new(),
        by_support: Vec::new(),
        on_path: HashMap::new(),
    };
    let root_belief = b.intern(belief::initial_belief(g, c0));
    b.push_node(None, None, root_belief);

    enum Work {
        Visit(NodeId),
        Finish(NodeId),
        // lazy mode: continue with `n` after its child `last` was settled
        Resume(NodeId, Option<NodeId>),
    }
    let mut stack = vec![Work::Visit(0)];
    let mut since_clock = 0usize;
    while let Some(work) = stack.pop() {
        match work {
            Work::Finish(n) => b.finish(n),
            Work::Resume(n, last) => match b.next_child(n, last) {
                Some(c) => {
                    stack.push(Work::Resume(n, Some(c)));
                    stack.push(Work::Visit(c));
                }
                None => b.finish(n),
            },
            Work::Visit(n) => {
                if !b.classify(n) {
                    continue;
                }
                let before = b.nodes.len();
                b.expand(n);
                let after = b.nodes.len();
                since_clock += after - before;
                let over_nodes = limits.max_nodes.is_some_and(|m| after > m);
                let over_time = if since_clock >= 4096 || over_nodes {
                    since_clock = 0;
                    limits.max_time.is_some_and(|t| start.elapsed() > t)
                } else {
                    false
                };
                if over_nodes || over_time {
                    let elapsed = start.elapsed();
                    let nodes_built = b.nodes.len();
                    let max_depth = b.max_depth;
                    return Err(SolveError::ResourceLimit {
                        nodes_built,
                        max_depth,
                        elapsed,
                        partial: Box::new(b.into_game(c0, elapsed)),
                    });
                }
                if lazy {
                    stack.push(Work::Resume(n, None));
                } else {
                    stack.push(Work::Finish(n));
                    for c in (before..after).rev() {
                        stack.push(Work::Visit(c));
                    }
                }
            }
        }
    }
    let root_win = b.winning[0];
    let h = b.into_game(c0, start.elapsed());
    debug_assert_eq!(solve_safety(&h).contains(0), root_win);
    Ok(h)
}

/// The set of nodes from which Eve wins the safety game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinningSet {
    winning: Vec<bool>,
}

impl WinningSet {
    pub fn contains(&self, n: NodeId) -> bool {
        self.winning.get(n).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.winning
            .iter()
            .enumerate()
            .filter(|(_, w)| **w)
            .map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.winning.iter().filter(|w| **w).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Greatest fixpoint of "safe, and either a leaf or some action whose
/// children are all winning", computed as the complement of Adam's attractor
/// to the negative leaves. Shared leaves follow their original node. Frontier
/// nodes of a truncated tree count as losing.
pub fn solve_safety(h: &SafetyGame) -> WinningSet {
    let n = h.nodes.len();
    let k = h.num_actions;
    let mut losing = vec![false; n];
    let mut bad_action = vec![false; n * k];
    let mut good_actions = vec![0usize; n];
    let mut sharers: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut queue = VecDeque::new();
    for node in &h.nodes {
        match node.status {
            NodeStatus::NegativeLeaf | NodeStatus::Frontier => {
                losing[node.id] = true;
                queue.push_back(node.id);
            }
            NodeStatus::Interior => good_actions[node.id] = k,
            NodeStatus::Shared { original } => sharers.entry(original).or_default().push(node.id),
            NodeStatus::SubsumedLeaf { .. } => {}
        }
    }
    while let Some(c) = queue.pop_front() {
        if let Some(list) = sharers.get(&c) {
            for &s in list {
                if !losing[s] {
                    losing[s] = true;
                    queue.push_back(s);
                }
            }
        }
        let node = &h.nodes[c];
        let (Some(p), Some(a)) = (node.parent, node.incoming_action) else {
            continue;
        };
        let slot = p * k + a.index();
        if bad_action[slot] {
            continue;
        }
        bad_action[slot] = true;
        good_actions[p] -= 1;
        if good_actions[p] == 0 && !losing[p] {
            losing[p] = true;
            queue.push_back(p);
        }
    }
    WinningSet {
        winning: losing.into_iter().map(|l| !l).collect(),
    }
}

/// Decides whether Eve has an observation-based strategy keeping
/// `c0 + EL` non-negative forever.
pub fn decide(g: &Game, c0: u64, limits: Limits) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let t = control_parameter(g, c0);
    if g.w_max() == 0 {
        let violations = game::validate(g);
        if !violations.is_empty() {
            return Err(SolveError::InvalidGame(violations));
        }
        // no weight can ever lower the credit
        return Ok(SolveReport {
            verdict: Verdict::Win,
            nodes_built: 0,
            max_depth: 0,
            control_parameter: t,
            elapsed: start.elapsed(),
        });
    }
    match build_lazy(g, c0, limits) {
        Ok(h) => {
            let verdict = if solve_safety(&h).contains(h.root()) {
                Verdict::Win
            } else {
                Verdict::Lose
            };
            Ok(SolveReport {
                verdict,
                nodes_built: h.len(),
                max_depth: h.max_depth(),
                control_parameter: t,
                elapsed: start.elapsed(),
            })
        }
        Err(SolveError::ResourceLimit {
            nodes_built,
            max_depth,
            ..
        }) => Ok(SolveReport {
            verdict: Verdict::ResourceLimit,
            nodes_built,
            max_depth,
            control_parameter: t,
            elapsed: start.elapsed(),
        }),
        Err(e) => Err(e),
    }
}

pub fn control_parameter(g: &Game, c0: u64) -> u128 {
    c0 as u128 + g.w_max() as u128 + g.num_states() as u128
}

/// `k(x) = 2^x + x^2`.
pub fn control_function(x: u64) -> BigUint {
    (BigUint::from(1u32) << x) + BigUint::from(x) * BigUint::from(x)
}

/// Checks that every non-negative node at depth `i` has an encoding whose
/// infinity norm is below `k(t + i)` with `t = c0 + w_max + |Q|`.
pub fn check_control_invariant(h: &SafetyGame, g: &Game, c0: u64) -> bool {
    let t = control_parameter(g, c0);
    h.nodes.iter().all(|node| {
        let f = h.belief(node.id);
        if belief::is_negative(f) {
            return true;
        }
        let Ok(v) = belief::encode_vector(g, f) else {
            return false;
        };
        norm_below_control(&v.norm_inf(), t + node.depth as u128)
    })
}

pub(crate) fn norm_below_control(norm: &BigUint, x: u128) -> bool {
    // norm < 2^x already suffices, and avoids materializing 2^x for large x
    if u128::from(norm.bits()) <= x {
        return true;
    }
    let x = u64::try_from(x).expect("x is below the bit length of an in-memory number");
    *norm < control_function(x)
}

/// Graphviz rendering of the tree. Back-edges of subsumed leaves are dashed.
pub fn to_dot(h: &SafetyGame, g: &Game, winning: Option<&WinningSet>) -> String {
    let mut out = String::from("digraph safety_game {\n  node [shape=box, fontname=\"monospace\"];\n");
    for node in &h.nodes {
        let color = match node.status {
            NodeStatus::Interior => "black",
            NodeStatus::NegativeLeaf => "red",
            NodeStatus::SubsumedLeaf { .. } => "darkgreen",
            NodeStatus::Shared { .. } => "blue",
            NodeStatus::Frontier => "gray",
        };
        let label = h.belief(node.id).display(g).to_string().replace('"', "\\\"");
        let style = match winning {
            Some(w) if w.contains(node.id) => ", style=bold",
            _ => "",
        };
        let _ = writeln!(
            out,
            "  n{} [label=\"{}: {}\", color={}{}];",
            node.id, node.id, label, color, style
        );
        if let (Some(p), Some(a)) = (node.parent, node.incoming_action) {
            let action = g.action_name(a).replace('"', "\\\"");
            let _ = writeln!(out, "  n{p} -> n{} [label=\"{action}\"];", node.id);
        }
        match node.status {
            NodeStatus::SubsumedLeaf { ancestor } => {
                let _ = writeln!(out, "  n{} -> n{ancestor} [style=dashed];", node.id);
            }
            NodeStatus::Shared { original } => {
                let _ = writeln!(out, "  n{} -> n{original} [style=dotted];", node.id);
            }
            _ => {}
        }
    }
    out.push_str("}\n");
    out
}
