//! Lazily explored model graph and the compiled property automaton shared by
//! the search algorithms.

use super::{CheckError, CounterexampleTrace, TraceStep, TransitionSystem};
use crate::ltl::{to_buchi, LtlFormula};
use std::collections::HashMap;

/// Actor id of the implicit stutter step on terminal states.
pub(crate) const STUTTER: u16 = u16::MAX;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Edge {
    pub target: u32,
    pub actor: u16,
    /// Position in the transition system's successor list, or `u32::MAX`
    /// for the stutter step.
    pub index: u32,
}

pub(crate) struct Node {
    pub edges: Box<[Edge]>,
    /// Bit `p` set when process `p` has an enabled step.
    pub enabled: u64,
}

/// Interned model states with cached successor lists.
pub(crate) struct ModelGraph<'a, T: TransitionSystem> {
    pub ts: &'a T,
    index: HashMap<T::State, u32>,
    pub states: Vec<T::State>,
    nodes: Vec<Option<Node>>,
    actions: Vec<Option<Box<[T::Action]>>>,
}

impl<'a, T: TransitionSystem> ModelGraph<'a, T> {
    pub fn new(ts: &'a T) -> Self {
        ModelGraph {
            ts,
            index: HashMap::new(),
            states: Vec::new(),
            nodes: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn intern(&mut self, s: T::State) -> u32 {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let i = self.states.len() as u32;
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.nodes.push(None);
        self.actions.push(None);
        i
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn node(&mut self, i: u32) -> &Node {
        if self.nodes[i as usize].is_none() {
            let succ = self.ts.successors(&self.states[i as usize]);
            let mut edges = Vec::with_capacity(succ.len().max(1));
            let mut actions = Vec::with_capacity(succ.len());
            let mut enabled = 0u64;
            for (k, (a, s)) in succ.into_iter().enumerate() {
                let actor = self.ts.actor(&a);
                enabled |= 1 << actor;
                let target = self.intern(s);
                edges.push(Edge { target, actor: actor as u16, index: k as u32 });
                actions.push(a);
            }
            if edges.is_empty() {
                edges.push(Edge { target: i, actor: STUTTER, index: u32::MAX });
            }
            self.actions[i as usize] = Some(actions.into_boxed_slice());
            self.nodes[i as usize] = Some(Node { edges: edges.into_boxed_slice(), enabled });
        }
        self.nodes[i as usize].as_ref().unwrap()
    }

    pub fn action_label(&self, from: u32, edge: &Edge) -> (Option<usize>, String) {
        if edge.actor == STUTTER {
            return (None, "stutter".to_string());
        }
        let a = &self.actions[from as usize].as_ref().unwrap()[edge.index as usize];
        (Some(edge.actor as usize), a.to_string())
    }

    pub fn memory_estimate(&self) -> usize {
        let per_state = 2 * std::mem::size_of::<T::State>() + 32;
        let edges: usize =
            self.nodes.iter().flatten().map(|n| n.edges.len() * std::mem::size_of::<Edge>()).sum();
        self.states.len() * per_state + edges
    }

    /// Turns a path of `(state, edge taken to reach it)` into trace steps.
    pub fn steps(&self, path: &[(u32, Option<(u32, Edge)>)]) -> Vec<TraceStep<T::State>> {
        path.iter()
            .map(|&(s, via)| {
                let (process, action) = match via {
                    None => (None, "init".to_string()),
                    Some((from, e)) => self.action_label(from, &e),
                };
                TraceStep { process, action, state: self.states[s as usize].clone() }
            })
            .collect()
    }

    pub fn lasso(
        &self,
        prefix: &[(u32, Option<(u32, Edge)>)],
        cycle: &[(u32, Option<(u32, Edge)>)],
    ) -> CounterexampleTrace<T::State> {
        CounterexampleTrace { prefix: self.steps(prefix), cycle: self.steps(cycle) }
    }
}

/// A transition label compiled to bitmasks over the formula's atoms.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Guard {
    pos: u128,
    neg: u128,
    pub target: u32,
}

impl Guard {
    pub fn enabled(&self, valuation: u128) -> bool {
        valuation & self.pos == self.pos && valuation & self.neg == 0
    }
}

/// Büchi automaton for a negated property, with atoms resolved against a
/// transition system.
pub(crate) struct Property {
    pub initial: u32,
    pub accepting: Vec<bool>,
    pub guards: Vec<Vec<Guard>>,
    props: Vec<super::PropId>,
}

impl Property {
    /// Automaton accepting exactly the runs that violate `f`.
    pub fn negated<T: TransitionSystem>(ts: &T, f: &LtlFormula) -> Result<Self, CheckError> {
        let aut = to_buchi(&LtlFormula::not(f.clone()));
        let atoms: Vec<String> = f.atoms().into_iter().collect();
        if atoms.len() > 128 {
            return Err(CheckError::TooManyAtoms(atoms.len()));
        }
        let props = atoms
            .iter()
            .map(|a| ts.resolve(a).ok_or_else(|| CheckError::UnknownAtom(a.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let bit = |name: &str| 1u128 << atoms.iter().position(|a| a == name).unwrap();
        let guards = aut
            .transitions
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|t| {
                        let mut g = Guard { pos: 0, neg: 0, target: t.target as u32 };
                        for l in &t.label {
                            if l.positive {
                                g.pos |= bit(&l.atom);
                            } else {
                                g.neg |= bit(&l.atom);
                            }
                        }
                        g
                    })
                    .collect()
            })
            .collect();
        Ok(Property {
            initial: aut.initial as u32,
            accepting: (0..aut.len()).map(|q| aut.is_accepting(q)).collect(),
            guards,
            props,
        })
    }

    pub fn valuation<T: TransitionSystem>(&self, ts: &T, s: &T::State) -> u128 {
        self.props
            .iter()
            .enumerate()
            .filter(|(_, p)| ts.holds(s, **p))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }
}

/// Per-state valuation cache keyed by model state index.
pub(crate) struct Valuations(Vec<Option<u128>>);

impl Valuations {
    pub fn new() -> Self {
        Valuations(Vec::new())
    }

    pub fn get<T: TransitionSystem>(
        &mut self,
        g: &ModelGraph<'_, T>,
        p: &Property,
        s: u32,
    ) -> u128 {
        let i = s as usize;
        if self.0.len() <= i {
            self.0.resize(g.len().max(i + 1), None);
        }
        *self.0[i].get_or_insert_with(|| p.valuation(g.ts, &g.states[i]))
    }
}
