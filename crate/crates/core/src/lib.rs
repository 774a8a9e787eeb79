//! Supervised finite-state-machine threads, verified two ways: an
//! explicit-state LTL model checker over a design-level model, and a
//! deterministic schedule explorer over the concrete runtime.

pub mod checker;
pub mod cli;
pub mod corpus;
pub mod fsm;
pub mod harness;
pub mod ltl;
pub mod model;
pub mod runtime;
