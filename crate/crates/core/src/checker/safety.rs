use super::graph::{Edge, ModelGraph};
use super::{
    CheckError, CheckOutcome, CounterexampleTrace, RunStatistics, TransitionSystem, Verdict,
};
use crate::ltl::LtlFormula;
use std::collections::VecDeque;
use std::time::Instant;

/// Breadth-first reachability check of `invariant`. A violation comes with a
/// shortest path to a bad state.
pub fn check_safety<T: TransitionSystem>(
    ts: &T,
    invariant: &dyn Fn(&T::State) -> bool,
    state_limit: usize,
) -> CheckOutcome<T::State> {
    let start = Instant::now();
    let mut g = ModelGraph::new(ts);
    let mut parent: Vec<Option<(u32, Edge)>> = Vec::new();
    let mut depth: Vec<u32> = Vec::new();
    let mut stats = RunStatistics::default();
    let s0 = g.intern(ts.initial_state());
    parent.push(None);
    depth.push(0);
    stats.transitions = 1;
    let mut queue = VecDeque::from([s0]);
    let mut verdict = Verdict::Pass;
    let mut bad = None;
    while let Some(s) = queue.pop_front() {
        stats.max_depth = stats.max_depth.max(depth[s as usize] as usize + 1);
        if !invariant(&g.states[s as usize]) {
            verdict = Verdict::Fail;
            bad = Some(s);
            break;
        }
        let edges = g.node(s).edges.clone();
        for e in edges.iter() {
            stats.transitions += 1;
            if e.target as usize == parent.len() {
                parent.push(Some((s, *e)));
                depth.push(depth[s as usize] + 1);
                queue.push_back(e.target);
            }
        }
        if g.len() > state_limit {
            verdict = Verdict::Inconclusive;
            break;
        }
    }
    let trace = bad.map(|mut s| {
        let mut path = vec![(s, parent[s as usize])];
        while let Some((p, _)) = parent[s as usize] {
            s = p;
            path.push((s, parent[s as usize]));
        }
        path.reverse();
        CounterexampleTrace { prefix: g.steps(&path), cycle: Vec::new() }
    });
    stats.states = parent.len();
    stats.wall_time = start.elapsed();
    stats.memory_estimate = g.memory_estimate() + parent.len() * 24;
    CheckOutcome { verdict, trace, stats }
}

/// Safety check of a propositional formula as a state invariant.
pub fn check_invariant<T: TransitionSystem>(
    ts: &T,
    invariant: &LtlFormula,
    state_limit: usize,
) -> Result<CheckOutcome<T::State>, CheckError> {
    assert!(invariant.is_propositional(), "invariant must be propositional");
    let atoms: Vec<_> = invariant
        .atoms()
        .into_iter()
        .map(|a| ts.resolve(&a).map(|p| (a.clone(), p)).ok_or(CheckError::UnknownAtom(a)))
        .collect::<Result<_, _>>()?;
    let pred = |s: &T::State| {
        invariant.eval_state(&|name| {
            atoms.iter().find(|(a, _)| a == name).is_some_and(|(_, p)| ts.holds(s, *p))
        })
    };
    Ok(check_safety(ts, &pred, state_limit))
}
