//! Nested depth-first search over the product of the model with a Büchi
//! automaton for the negated property.
//!
//! Weak fairness is handled by unrolling the product into `k + 2` copies for
//! `k` processes. Copy 0 moves to copy 1 when leaving an accepting state;
//! copy `c` in `1..=k` moves on once process `c - 1` takes a step or is
//! disabled at the source; copy `k + 1` returns to copy 0. A cycle through an
//! accepting state of copy 0 therefore passes every copy, which means every
//! process is either disabled or executes somewhere on it.

use super::graph::{Edge, ModelGraph, Property, Valuations};
use super::{CheckError, CheckOptions, CheckOutcome, RunStatistics, TransitionSystem, Verdict};
use crate::ltl::LtlFormula;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

type Via = Option<(u32, Edge)>;

fn pack(s: u32, q: u32, c: u16) -> u64 {
    (s as u64) << 32 | (q as u64) << 16 | c as u64
}

fn unpack(n: u64) -> (u32, u32, u16) {
    ((n >> 32) as u32, ((n >> 16) & 0xFFFF) as u32, (n & 0xFFFF) as u16)
}

pub(crate) struct Product<'a, T: TransitionSystem> {
    pub graph: ModelGraph<'a, T>,
    pub prop: Property,
    vals: Valuations,
    fair: bool,
    procs: u16,
}

impl<'a, T: TransitionSystem> Product<'a, T> {
    pub fn new(ts: &'a T, f: &LtlFormula, fair: bool) -> Result<Self, CheckError> {
        let prop = Property::negated(ts, f)?;
        Ok(Product {
            graph: ModelGraph::new(ts),
            prop,
            vals: Valuations::new(),
            fair,
            procs: ts.process_count() as u16,
        })
    }

    pub fn initial(&mut self) -> Vec<u64> {
        let s0 = self.graph.intern(self.graph.ts.initial_state());
        let v = self.vals.get(&self.graph, &self.prop, s0);
        self.prop.guards[self.prop.initial as usize]
            .iter()
            .filter(|g| g.enabled(v))
            .map(|g| pack(s0, g.target, 0))
            .collect()
    }

    fn next_copy(&self, c: u16, accepting: bool, actor: u16, enabled: u64) -> u16 {
        if !self.fair {
            return 0;
        }
        match c {
            0 => accepting as u16,
            c if c <= self.procs => {
                let p = c - 1;
                if actor == p || enabled & (1 << p) == 0 {
                    c + 1
                } else {
                    c
                }
            }
            _ => 0,
        }
    }

    pub fn is_seed(&self, n: u64) -> bool {
        let (_, q, c) = unpack(n);
        c == 0 && self.prop.accepting[q as usize]
    }

    pub fn successors(&mut self, n: u64) -> Vec<(u64, Edge)> {
        let (s, q, c) = unpack(n);
        let node = self.graph.node(s);
        let (edges, enabled) = (node.edges.clone(), node.enabled);
        let accepting = self.prop.accepting[q as usize];
        let mut out = Vec::new();
        for e in edges.iter() {
            let v = self.vals.get(&self.graph, &self.prop, e.target);
            let c2 = self.next_copy(c, accepting, e.actor, enabled);
            for g in &self.prop.guards[q as usize] {
                if g.enabled(v) {
                    out.push((pack(e.target, g.target, c2), *e));
                }
            }
        }
        out
    }

    pub fn from_of(&self, n: u64) -> u32 {
        unpack(n).0
    }
}

struct Frame {
    node: u64,
    succ: Vec<(u64, Edge)>,
    pos: usize,
    via: Via,
}

/// Checks `f` on every run (every weakly fair run when
/// `opts.weak_fairness`) of `ts`.
pub fn check_ltl<T: TransitionSystem>(
    ts: &T,
    f: &LtlFormula,
    opts: CheckOptions,
) -> Result<CheckOutcome<T::State>, CheckError> {
    let start = Instant::now();
    let mut p = Product::new(ts, f, opts.weak_fairness)?;
    let mut blue: HashSet<u64> = HashSet::new();
    let mut red: HashSet<u64> = HashSet::new();
    let mut cyan: HashMap<u64, usize> = HashMap::new();
    let mut stats = RunStatistics::default();

    let finish = |stats: &mut RunStatistics, p: &Product<T>, blue: &HashSet<u64>, red: &HashSet<u64>| {
        stats.states = blue.len();
        stats.wall_time = start.elapsed();
        stats.memory_estimate = p.graph.memory_estimate() + (blue.len() + red.len()) * 24;
    };

    for root in p.initial() {
        stats.transitions += 1;
        if blue.contains(&root) {
            continue;
        }
        let mut stack: Vec<Frame> = Vec::new();
        let succ = p.successors(root);
        blue.insert(root);
        cyan.insert(root, 0);
        stack.push(Frame { node: root, succ, pos: 0, via: None });
        while !stack.is_empty() {
            stats.max_depth = stats.max_depth.max(stack.len());
            let top = stack.last_mut().unwrap();
            if top.pos < top.succ.len() {
                let (next, e) = top.succ[top.pos];
                top.pos += 1;
                stats.transitions += 1;
                if blue.contains(&next) {
                    continue;
                }
                if blue.len() >= opts.state_limit {
                    finish(&mut stats, &p, &blue, &red);
                    return Ok(CheckOutcome { verdict: Verdict::Inconclusive, trace: None, stats });
                }
                let from = p.from_of(top.node);
                let succ = p.successors(next);
                blue.insert(next);
                cyan.insert(next, stack.len());
                stack.push(Frame { node: next, succ, pos: 0, via: Some((from, e)) });
                continue;
            }
            let node = top.node;
            if p.is_seed(node) {
                if let Some((red_path, target)) =
                    red_search(&mut p, node, &cyan, &mut red, &mut stats)
                {
                    let i = cyan[&target];
                    let project = |f: &Frame| (p.from_of(f.node), f.via);
                    let prefix: Vec<_> = stack[..i].iter().map(project).collect();
                    let mut cycle: Vec<_> = stack[i..].iter().map(project).collect();
                    cycle.extend(red_path.iter().map(|(n, via)| (p.from_of(*n), *via)));
                    let trace = p.graph.lasso(&prefix, &cycle);
                    finish(&mut stats, &p, &blue, &red);
                    return Ok(CheckOutcome { verdict: Verdict::Fail, trace: Some(trace), stats });
                }
            }
            cyan.remove(&node);
            stack.pop();
        }
    }
    finish(&mut stats, &p, &blue, &red);
    Ok(CheckOutcome { verdict: Verdict::Pass, trace: None, stats })
}

/// Searches for a path from `seed` back to a node on the blue stack.
/// Returns the path after `seed` and the stack node it closes on.
fn red_search<T: TransitionSystem>(
    p: &mut Product<'_, T>,
    seed: u64,
    cyan: &HashMap<u64, usize>,
    red: &mut HashSet<u64>,
    stats: &mut RunStatistics,
) -> Option<(Vec<(u64, Via)>, u64)> {
    let succ = p.successors(seed);
    let mut stack = vec![Frame { node: seed, succ, pos: 0, via: None }];
    while let Some(top) = stack.last_mut() {
        if top.pos < top.succ.len() {
            let (next, e) = top.succ[top.pos];
            top.pos += 1;
            stats.transitions += 1;
            if cyan.contains_key(&next) {
                let path = stack[1..].iter().map(|f| (f.node, f.via)).collect();
                return Some((path, next));
            }
            let from = p.from_of(top.node);
            if red.insert(next) {
                let succ = p.successors(next);
                stack.push(Frame { node: next, succ, pos: 0, via: Some((from, e)) });
            }
        } else {
            stack.pop();
        }
    }
    None
}
