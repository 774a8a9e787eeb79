//! Reference check by full product construction and strongly connected
//! components. Shares no search code with the nested DFS.

use super::graph::{ModelGraph, Property, Valuations, STUTTER};
use super::{CheckError, TransitionSystem, Verdict};
use crate::ltl::LtlFormula;
use std::collections::HashMap;

/// Default bound on product states for [`oracle_check`].
pub const ORACLE_DEFAULT_LIMIT: usize = 200_000;

struct ProductGraph {
    /// (model state, automaton state)
    nodes: Vec<(u32, u32)>,
    /// (target, actor)
    edges: Vec<Vec<(u32, u16)>>,
}

fn build<T: TransitionSystem>(
    g: &mut ModelGraph<'_, T>,
    prop: &Property,
    limit: usize,
) -> Result<ProductGraph, CheckError> {
    let mut vals = Valuations::new();
    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut pg = ProductGraph { nodes: Vec::new(), edges: Vec::new() };
    let mut intern = |pg: &mut ProductGraph, key: (u32, u32)| -> Result<u32, CheckError> {
        if let Some(&i) = index.get(&key) {
            return Ok(i);
        }
        if pg.nodes.len() >= limit {
            return Err(CheckError::OracleLimit(limit));
        }
        let i = pg.nodes.len() as u32;
        index.insert(key, i);
        pg.nodes.push(key);
        pg.edges.push(Vec::new());
        Ok(i)
    };
    let s0 = g.intern(g.ts.initial_state());
    let v0 = vals.get(g, prop, s0);
    for guard in &prop.guards[prop.initial as usize] {
        if guard.enabled(v0) {
            intern(&mut pg, (s0, guard.target))?;
        }
    }
    let mut next = 0;
    while next < pg.nodes.len() {
        let (s, q) = pg.nodes[next];
        let edges = g.node(s).edges.clone();
        for e in edges.iter() {
            let v = vals.get(g, prop, e.target);
            for guard in &prop.guards[q as usize] {
                if guard.enabled(v) {
                    let t = intern(&mut pg, (e.target, guard.target))?;
                    pg.edges[next].push((t, e.actor));
                }
            }
        }
        next += 1;
    }
    Ok(pg)
}

/// Iterative Tarjan; returns the component id of every node.
fn scc(edges: &[Vec<(u32, u16)>]) -> (Vec<u32>, usize) {
    const UNSEEN: u32 = u32::MAX;
    let n = edges.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut counter = 0u32;
    let mut comps = 0usize;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < edges[v].len() {
                let w = edges[v][*i].0 as usize;
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = comps as u32;
                        if w == v {
                            break;
                        }
                    }
                    comps += 1;
                }
            }
        }
    }
    (comp, comps)
}

/// Decides `f` on `ts` by looking for a reachable strongly connected
/// component of the product that is non-trivial, contains an accepting
/// state and, under weak fairness, lets every process either move inside it
/// or be disabled at one of its states.
pub fn oracle_check<T: TransitionSystem>(
    ts: &T,
    f: &LtlFormula,
    weak_fairness: bool,
    limit: usize,
) -> Result<Verdict, CheckError> {
    let prop = Property::negated(ts, f)?;
    let mut g = ModelGraph::new(ts);
    let pg = build(&mut g, &prop, limit)?;
    let (comp, count) = scc(&pg.edges);
    let procs = ts.process_count();
    let full: u64 = if procs >= 64 { u64::MAX } else { (1u64 << procs) - 1 };

    let mut nontrivial = vec![false; count];
    let mut accepting = vec![false; count];
    // processes that move inside, or are disabled somewhere in, the component
    let mut served = vec![0u64; count];
    for (v, &(s, q)) in pg.nodes.iter().enumerate() {
        let c = comp[v] as usize;
        if prop.accepting[q as usize] {
            accepting[c] = true;
        }
        served[c] |= !g.node(s).enabled & full;
        for &(w, actor) in &pg.edges[v] {
            if comp[w as usize] as usize == c {
                nontrivial[c] = true;
                if actor != STUTTER {
                    served[c] |= 1 << actor;
                }
            }
        }
    }
    let violated = (0..count).any(|c| {
        nontrivial[c] && accepting[c] && (!weak_fairness || served[c] == full)
    });
    Ok(if violated { Verdict::Fail } else { Verdict::Pass })
}
