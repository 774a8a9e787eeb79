//! Explicit-state verification: breadth-first safety checking, nested
//! depth-first search for accepting cycles in the product with a Büchi
//! automaton for the negated property (optionally under weak fairness), and
//! an SCC-based oracle used to cross-check the nested search.

mod graph;
mod ndfs;
mod oracle;
mod safety;
mod trace;

pub use ndfs::check_ltl;
pub use oracle::{oracle_check, ORACLE_DEFAULT_LIMIT};
pub use safety::{check_invariant, check_safety};
pub use trace::{read_trace, replay, write_trace, ReplayError, TraceFile, TraceHeader};

use std::fmt;
use std::hash::Hash;
use std::time::Duration;

/// Default bound on stored states before a run is declared inconclusive.
pub const DEFAULT_STATE_LIMIT: usize = 5_000_000;

/// Opaque handle for an atomic proposition resolved by a transition system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PropId(pub u32);

/// A finite, explicitly enumerable system of interleaved processes.
pub trait TransitionSystem {
    type State: Clone + Eq + Hash + fmt::Debug;
    type Action: Clone + fmt::Display + fmt::Debug;

    fn initial_state(&self) -> Self::State;

    /// All enabled steps, in a deterministic order.
    fn successors(&self, s: &Self::State) -> Vec<(Self::Action, Self::State)>;

    fn process_count(&self) -> usize;

    /// Process that performs `action`.
    fn actor(&self, action: &Self::Action) -> usize;

    fn resolve(&self, atom: &str) -> Option<PropId>;

    fn holds(&self, s: &Self::State, prop: PropId) -> bool;

    fn encode(&self, s: &Self::State) -> Vec<u8>;

    fn decode(&self, bytes: &[u8]) -> Option<Self::State>;

    fn describe(&self, s: &Self::State) -> String {
        format!("{s:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStatistics {
    pub states: usize,
    pub transitions: usize,
    pub max_depth: usize,
    pub wall_time: Duration,
    /// Rough estimate in bytes of the dominant tables.
    pub memory_estimate: usize,
}

impl fmt::Display for RunStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "states={} transitions={} max_depth={} time={:.3}s mem~{}KiB",
            self.states,
            self.transitions,
            self.max_depth,
            self.wall_time.as_secs_f64(),
            self.memory_estimate / 1024
        )
    }
}

/// One position of a counterexample. `action` is the label of the step that
/// produced `state` (`init` for the first state, `stutter` for the implicit
/// self-loop of a terminal state).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep<S> {
    pub process: Option<usize>,
    pub action: String,
    pub state: S,
}

/// A finite path (`cycle` empty) or a lasso whose `cycle` repeats forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleTrace<S> {
    pub prefix: Vec<TraceStep<S>>,
    pub cycle: Vec<TraceStep<S>>,
}

impl<S> CounterexampleTrace<S> {
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn steps(&self) -> impl Iterator<Item = &TraceStep<S>> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome<S> {
    pub verdict: Verdict,
    pub trace: Option<CounterexampleTrace<S>>,
    pub stats: RunStatistics,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("unknown proposition `{0}`")]
    UnknownAtom(String),
    #[error("formula uses {0} atoms, at most 128 are supported")]
    TooManyAtoms(usize),
    #[error("product exceeds the oracle size limit of {0} states")]
    OracleLimit(usize),
}

/// Options shared by the LTL checks.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub weak_fairness: bool,
    pub state_limit: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { weak_fairness: false, state_limit: DEFAULT_STATE_LIMIT }
    }
}
