//! Fixed initial credit solving for partial-observation energy games.
//!
//! The solver unfolds Eve's belief functions into a finite tree, stopping a
//! branch at a negative belief or at a belief that dominates one of its
//! ancestors, and solves the resulting safety game. Winning trees yield
//! finite-state observation-based controllers. The crate also ships the
//! hardness constructions for the problem: Minsky-machine simulation games
//! and the fast-growing-function pumping gadget, together with the rewrite
//! calculus the gadget mirrors.

pub mod belief;
pub mod energy;
pub mod fgh;
pub mod fullobs;
pub mod game;
pub mod minsky;
pub mod reductions;
pub mod solver;
pub mod strategy;

pub use belief::{BeliefFunction, BeliefVector};
pub use energy::Energy;
pub use game::{ActionId, Game, GameKind, ObservationId, StateId};
pub use solver::{decide, Limits, SolveReport, Verdict};
