//! Tableau translation of LTL to Büchi automata.
//!
//! Automaton states are obligation sets (the formulas that must hold from
//! the next position on). Each obligation set is expanded into covers, the
//! consistent ways of satisfying it now; covers become transitions labelled
//! with their literals. Every `U`/`<>` subformula contributes a transition
//! acceptance set, and a level counter turns the resulting generalised
//! condition into a state-based one.

use super::{is_nnf, to_nnf, Letter, LtlFormula};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

/// A possibly negated atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: String,
    pub positive: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            f.write_str(&self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

/// Edge of the automaton; the label is a conjunction of literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub label: Vec<Literal>,
    pub target: usize,
}

impl Transition {
    pub fn enabled_by(&self, holds: &dyn Fn(&str) -> bool) -> bool {
        self.label.iter().all(|l| holds(&l.atom) == l.positive)
    }
}

#[derive(Clone, Debug)]
pub struct BuchiState {
    /// Pending obligations, for diagnostics.
    pub obligations: String,
    pub accepting: bool,
}

#[derive(Clone, Debug)]
pub struct BuchiAutomaton {
    pub states: Vec<BuchiState>,
    pub initial: usize,
    pub transitions: Vec<Vec<Transition>>,
}

impl BuchiAutomaton {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.states[q].accepting
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        self.transitions
            .iter()
            .flatten()
            .flat_map(|t| t.label.iter().map(|l| l.atom.clone()))
            .collect()
    }

    /// Successor automaton states when reading a letter.
    pub fn step<'a>(
        &'a self,
        q: usize,
        holds: &'a dyn Fn(&str) -> bool,
    ) -> impl Iterator<Item = usize> + 'a {
        self.transitions[q]
            .iter()
            .filter(move |t| t.enabled_by(holds))
            .map(|t| t.target)
    }

    /// Membership of the ultimately periodic word `prefix · cycle^ω`.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
        let letters: Vec<&Letter> = prefix.iter().chain(cycle.iter()).collect();
        let n = letters.len();
        let succ = |i: usize| if i + 1 < n { i + 1 } else { prefix.len() };
        let width = self.len();
        let id = |q: usize, i: usize| i * width + q;
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n * width];
        for (i, letter) in letters.iter().enumerate() {
            let holds = |a: &str| letter.contains(a);
            for q in 0..width {
                for t in self.step(q, &holds) {
                    edges[id(q, i)].push(id(t, succ(i)));
                }
            }
        }
        let reach = |from: &[usize]| -> Vec<bool> {
            let mut seen = vec![false; n * width];
            let mut stack: Vec<usize> = from.to_vec();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(edges[v].iter().copied());
                }
            }
            seen
        };
        let reachable = reach(&[id(self.initial, 0)]);
        (0..n * width).any(|v| {
            reachable[v] && self.is_accepting(v % width) && reach(&edges[v])[v]
        })
    }
}

impl fmt::Display for BuchiAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, s) in self.states.iter().enumerate() {
            let init = if q == self.initial { " init" } else { "" };
            let acc = if s.accepting { " accepting" } else { "" };
            writeln!(f, "q{q}{init}{acc} {{{}}}", s.obligations)?;
            for t in &self.transitions[q] {
                let label: Vec<String> = t.label.iter().map(|l| l.to_string()).collect();
                let label = if label.is_empty() { "true".to_string() } else { label.join(" && ") };
                writeln!(f, "  --[{label}]--> q{}", t.target)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(String, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Eventually(u32),
    Always(u32),
}

#[derive(Default)]
struct Pool {
    nodes: Vec<Node>,
    ids: HashMap<Node, u32>,
}

impl Pool {
    fn intern(&mut self, f: &LtlFormula) -> u32 {
        let node = match f {
            LtlFormula::True => Node::True,
            LtlFormula::False => Node::False,
            LtlFormula::Atom(a) => Node::Lit(a.clone(), true),
            LtlFormula::Not(g) => match &**g {
                LtlFormula::Atom(a) => Node::Lit(a.clone(), false),
                _ => unreachable!("formula not in negation normal form"),
            },
            LtlFormula::And(a, b) => Node::And(self.intern(a), self.intern(b)),
            LtlFormula::Or(a, b) => Node::Or(self.intern(a), self.intern(b)),
            LtlFormula::Next(g) => Node::Next(self.intern(g)),
            LtlFormula::Until(a, b) => Node::Until(self.intern(a), self.intern(b)),
            LtlFormula::Eventually(g) => Node::Eventually(self.intern(g)),
            LtlFormula::Always(g) => Node::Always(self.intern(g)),
            LtlFormula::Implies(..) | LtlFormula::WeakUntil(..) => {
                unreachable!("formula not in negation normal form")
            }
        };
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node.clone());
        self.ids.insert(node, id);
        id
    }

    fn render(&self, id: u32) -> String {
        match &self.nodes[id as usize] {
            Node::True => "true".into(),
            Node::False => "false".into(),
            Node::Lit(a, true) => a.clone(),
            Node::Lit(a, false) => format!("!{a}"),
            Node::And(a, b) => format!("({} && {})", self.render(*a), self.render(*b)),
            Node::Or(a, b) => format!("({} || {})", self.render(*a), self.render(*b)),
            Node::Next(a) => format!("X {}", self.render(*a)),
            Node::Until(a, b) => format!("({} U {})", self.render(*a), self.render(*b)),
            Node::Eventually(a) => format!("<> {}", self.render(*a)),
            Node::Always(a) => format!("[] {}", self.render(*a)),
        }
    }
}

#[derive(Clone, Debug)]
struct Cover {
    literals: BTreeSet<(String, bool)>,
    next: BTreeSet<u32>,
    old: BTreeSet<u32>,
}

fn expand(pool: &Pool, obligations: &BTreeSet<u32>) -> Vec<Cover> {
    let mut out = Vec::new();
    let start = Cover { literals: BTreeSet::new(), next: BTreeSet::new(), old: BTreeSet::new() };
    expand_rec(pool, obligations.iter().rev().copied().collect(), start, &mut out);
    out
}

fn expand_rec(pool: &Pool, mut todo: Vec<u32>, mut cover: Cover, out: &mut Vec<Cover>) {
    while let Some(f) = todo.pop() {
        if cover.old.contains(&f) {
            continue;
        }
        cover.old.insert(f);
        match &pool.nodes[f as usize] {
            Node::True => {}
            Node::False => return,
            Node::Lit(a, pol) => {
                if cover.literals.contains(&(a.clone(), !pol)) {
                    return;
                }
                cover.literals.insert((a.clone(), *pol));
            }
            Node::And(a, b) => {
                todo.push(*b);
                todo.push(*a);
            }
            Node::Or(a, b) => {
                let mut left = todo.clone();
                left.push(*a);
                expand_rec(pool, left, cover.clone(), out);
                todo.push(*b);
            }
            Node::Next(a) => {
                cover.next.insert(*a);
            }
            Node::Until(a, b) => {
                let mut now = todo.clone();
                now.push(*b);
                expand_rec(pool, now, cover.clone(), out);
                todo.push(*a);
                cover.next.insert(f);
            }
            Node::Eventually(a) => {
                let mut now = todo.clone();
                now.push(*a);
                expand_rec(pool, now, cover.clone(), out);
                cover.next.insert(f);
            }
            Node::Always(a) => {
                todo.push(*a);
                cover.next.insert(f);
            }
        }
    }
    out.push(cover);
}

/// Translates `f` into a Büchi automaton accepting exactly the words that
/// satisfy it. Formulas not yet in negation normal form are normalised first.
pub fn to_buchi(f: &LtlFormula) -> BuchiAutomaton {
    let normal;
    let f = if is_nnf(f) {
        f
    } else {
        normal = to_nnf(f);
        &normal
    };
    let mut pool = Pool::default();
    let root = pool.intern(f);

    // One acceptance set per eventuality: (formula, goal).
    let eventualities: Vec<(u32, u32)> = pool
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n {
            Node::Until(_, b) => Some((i as u32, *b)),
            Node::Eventually(a) => Some((i as u32, *a)),
            _ => None,
        })
        .collect();
    let k = eventualities.len();
    let in_set = |c: &Cover, j: usize| {
        let (g, goal) = eventualities[j];
        !c.old.contains(&g) || c.old.contains(&goal)
    };

    let mut covers: HashMap<BTreeSet<u32>, Vec<Cover>> = HashMap::new();
    let mut index: HashMap<(BTreeSet<u32>, usize), usize> = HashMap::new();
    let mut states = Vec::new();
    let mut transitions: Vec<Vec<Transition>> = Vec::new();
    let mut queue = VecDeque::new();

    let init_key = (BTreeSet::from([root]), 0usize);
    index.insert(init_key.clone(), 0);
    queue.push_back(init_key);
    states.push(BuchiState { obligations: pool.render(root), accepting: k == 0 });
    transitions.push(Vec::new());

    while let Some((obl, level)) = queue.pop_front() {
        let me = index[&(obl.clone(), level)];
        let cs = covers.entry(obl.clone()).or_insert_with(|| expand(&pool, &obl)).clone();
        let mut edges = BTreeSet::new();
        for c in &cs {
            let mut j = if level == k { 0 } else { level };
            while j < k && in_set(c, j) {
                j += 1;
            }
            let key = (c.next.clone(), j);
            let target = match index.get(&key) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    let text: Vec<String> = c.next.iter().map(|&n| pool.render(n)).collect();
                    states.push(BuchiState { obligations: text.join(", "), accepting: j == k });
                    transitions.push(Vec::new());
                    index.insert(key.clone(), t);
                    queue.push_back(key);
                    t
                }
            };
            let label = c
                .literals
                .iter()
                .map(|(a, p)| Literal { atom: a.clone(), positive: *p })
                .collect();
            edges.insert(Transition { label, target });
        }
        transitions[me] = edges.into_iter().collect();
    }

    BuchiAutomaton { states, initial: 0, transitions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_on_lasso, parse};

    fn letter(atoms: &[&str]) -> Letter {
        atoms.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn always_is_one_accepting_state() {
        let a = to_buchi(&parse("[] p").unwrap());
        assert_eq!(a.len(), 1);
        assert!(a.is_accepting(0));
        assert_eq!(a.transitions[0].len(), 1);
        assert_eq!(a.transitions[0][0].target, 0);
        assert_eq!(
            a.transitions[0][0].label,
            vec![Literal { atom: "p".into(), positive: true }]
        );
    }

    #[test]
    fn eventually_has_two_states() {
        let a = to_buchi(&parse("<> p").unwrap());
        assert_eq!(a.len(), 2, "{a}");
        assert!(!a.is_accepting(a.initial));
        assert!(a.accepts_lasso(&[letter(&[])], &[letter(&["p"]), letter(&[])]));
        assert!(!a.accepts_lasso(&[letter(&["q"])], &[letter(&[])]));
    }

    #[test]
    fn contradiction_has_no_accepting_run() {
        let a = to_buchi(&parse("p && !p").unwrap());
        assert!(!a.accepts_lasso(&[], &[letter(&["p"])]));
        assert!(!a.accepts_lasso(&[], &[letter(&[])]));
    }

    #[test]
    fn labels_are_consistent() {
        let a = to_buchi(&parse("[] (p -> <> (q && !p)) && (r U !r)").unwrap());
        for t in a.transitions.iter().flatten() {
            for l in &t.label {
                assert!(!t.label.iter().any(|m| m.atom == l.atom && m.positive != l.positive));
            }
        }
    }

    #[test]
    fn until_membership_matches_evaluator() {
        let f = parse("p U q").unwrap();
        let a = to_buchi(&f);
        let words = [
            (vec![letter(&["p"])], vec![letter(&["q"]), letter(&[])]),
            (vec![], vec![letter(&["p"])]),
            (vec![letter(&["p"]), letter(&[])], vec![letter(&["q"])]),
        ];
        for (prefix, cycle) in words {
            assert_eq!(a.accepts_lasso(&prefix, &cycle), eval_on_lasso(&f, &prefix, &cycle));
        }
    }
}
