//! Linear temporal logic: formulas, a parser for the property-file syntax,
//! negation normal form, Büchi translation and a direct evaluator on
//! ultimately periodic words.

mod buchi;
mod nnf;
mod parse;

pub use buchi::{to_buchi, BuchiAutomaton, BuchiState, Literal, Transition};
pub use nnf::{is_nnf, to_nnf};
pub use parse::{parse, parse_with, ParseContext, ParseError};

use std::collections::BTreeSet;
use std::fmt;

/// An LTL formula. Quantifier macros are expanded by the parser, so they
/// never appear in the tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    WeakUntil(Box<LtlFormula>, Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        LtlFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn always(f: LtlFormula) -> Self {
        LtlFormula::Always(Box::new(f))
    }

    /// Left-folded conjunction; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = LtlFormula>) -> Self {
        items.into_iter().reduce(LtlFormula::and).unwrap_or(LtlFormula::True)
    }

    /// Left-folded disjunction; `false` when empty.
    pub fn disjunction(items: impl IntoIterator<Item = LtlFormula>) -> Self {
        items.into_iter().reduce(LtlFormula::or).unwrap_or(LtlFormula::False)
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            LtlFormula::True | LtlFormula::False => {}
            LtlFormula::Atom(a) => {
                out.insert(a.clone());
            }
            LtlFormula::Not(f)
            | LtlFormula::Next(f)
            | LtlFormula::Eventually(f)
            | LtlFormula::Always(f) => f.collect_atoms(out),
            LtlFormula::And(a, b)
            | LtlFormula::Or(a, b)
            | LtlFormula::Implies(a, b)
            | LtlFormula::Until(a, b)
            | LtlFormula::WeakUntil(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// `true` if no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => true,
            LtlFormula::Not(f) => f.is_propositional(),
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            _ => false,
        }
    }

    /// Evaluates a propositional formula. Temporal operators are treated as
    /// if the word were constant (`X f`, `[] f`, `<> f` all reduce to `f`).
    pub fn eval_state(&self, holds: &dyn Fn(&str) -> bool) -> bool {
        match self {
            LtlFormula::True => true,
            LtlFormula::False => false,
            LtlFormula::Atom(a) => holds(a),
            LtlFormula::Not(f) => !f.eval_state(holds),
            LtlFormula::And(a, b) => a.eval_state(holds) && b.eval_state(holds),
            LtlFormula::Or(a, b) => a.eval_state(holds) || b.eval_state(holds),
            LtlFormula::Implies(a, b) => !a.eval_state(holds) || b.eval_state(holds),
            LtlFormula::Next(f) | LtlFormula::Eventually(f) | LtlFormula::Always(f) => {
                f.eval_state(holds)
            }
            LtlFormula::Until(_, b) => b.eval_state(holds),
            LtlFormula::WeakUntil(a, b) => a.eval_state(holds) || b.eval_state(holds),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => 0,
            LtlFormula::Not(f)
            | LtlFormula::Next(f)
            | LtlFormula::Eventually(f)
            | LtlFormula::Always(f) => 1 + f.depth(),
            LtlFormula::And(a, b)
            | LtlFormula::Or(a, b)
            | LtlFormula::Implies(a, b)
            | LtlFormula::Until(a, b)
            | LtlFormula::WeakUntil(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, g: &LtlFormula) -> fmt::Result {
    write!(f, "{g}")
}

/// Fully parenthesised infix syntax accepted by [`parse`].
impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, a: &LtlFormula, op: &str, b: &LtlFormula| {
            f.write_str("(")?;
            write_operand(f, a)?;
            write!(f, " {op} ")?;
            write_operand(f, b)?;
            f.write_str(")")
        };
        match self {
            LtlFormula::True => f.write_str("true"),
            LtlFormula::False => f.write_str("false"),
            LtlFormula::Atom(a) => f.write_str(a),
            LtlFormula::Not(g) => write!(f, "!{g}"),
            LtlFormula::Next(g) => write!(f, "X {g}"),
            LtlFormula::Eventually(g) => write!(f, "<> {g}"),
            LtlFormula::Always(g) => write!(f, "[] {g}"),
            LtlFormula::And(a, b) => bin(f, a, "&&", b),
            LtlFormula::Or(a, b) => bin(f, a, "||", b),
            LtlFormula::Implies(a, b) => bin(f, a, "->", b),
            LtlFormula::Until(a, b) => bin(f, a, "U", b),
            LtlFormula::WeakUntil(a, b) => bin(f, a, "W", b),
        }
    }
}

/// A letter of an infinite word: the set of atoms that are true.
pub type Letter = BTreeSet<String>;

/// Truth of `f` on the ultimately periodic word `prefix · cycle^ω`.
///
/// Positions `0..prefix.len() + cycle.len()` are evaluated bottom-up; the
/// successor of the last position wraps to the start of the cycle. Until and
/// eventually are least fixpoints, always and weak-until greatest ones.
pub fn eval_on_lasso(f: &LtlFormula, prefix: &[Letter], cycle: &[Letter]) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
    let letters: Vec<&Letter> = prefix.iter().chain(cycle.iter()).collect();
    eval_positions(f, &|atom, i| letters[i].contains(atom), prefix.len(), cycle.len())[0]
}

/// Same as [`eval_on_lasso`] with atom truth supplied per position.
pub fn eval_positions(
    f: &LtlFormula,
    holds: &dyn Fn(&str, usize) -> bool,
    prefix_len: usize,
    cycle_len: usize,
) -> Vec<bool> {
    let n = prefix_len + cycle_len;
    let succ = |i: usize| if i + 1 < n { i + 1 } else { prefix_len };
    let fix = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| -> Vec<bool> {
        let mut v = vec![init; n];
        loop {
            let mut changed = false;
            // Sweeping backwards converges in at most two passes per cycle.
            for i in (0..n).rev() {
                let nv = step(i, &v);
                if nv != v[i] {
                    v[i] = nv;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    };
    match f {
        LtlFormula::True => vec![true; n],
        LtlFormula::False => vec![false; n],
        LtlFormula::Atom(a) => (0..n).map(|i| holds(a, i)).collect(),
        LtlFormula::Not(g) => eval_positions(g, holds, prefix_len, cycle_len)
            .into_iter()
            .map(|b| !b)
            .collect(),
        LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) => {
            let va = eval_positions(a, holds, prefix_len, cycle_len);
            let vb = eval_positions(b, holds, prefix_len, cycle_len);
            va.iter()
                .zip(vb.iter())
                .map(|(&x, &y)| match f {
                    LtlFormula::And(..) => x && y,
                    LtlFormula::Or(..) => x || y,
                    _ => !x || y,
                })
                .collect()
        }
        LtlFormula::Next(g) => {
            let vg = eval_positions(g, holds, prefix_len, cycle_len);
            (0..n).map(|i| vg[succ(i)]).collect()
        }
        LtlFormula::Until(a, b) | LtlFormula::WeakUntil(a, b) => {
            let va = eval_positions(a, holds, prefix_len, cycle_len);
            let vb = eval_positions(b, holds, prefix_len, cycle_len);
            let weak = matches!(f, LtlFormula::WeakUntil(..));
            fix(weak, &|i, v| vb[i] || (va[i] && v[succ(i)]))
        }
        LtlFormula::Eventually(g) => {
            let vg = eval_positions(g, holds, prefix_len, cycle_len);
            fix(false, &|i, v| vg[i] || v[succ(i)])
        }
        LtlFormula::Always(g) => {
            let vg = eval_positions(g, holds, prefix_len, cycle_len);
            fix(true, &|i, v| vg[i] && v[succ(i)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letter(atoms: &[&str]) -> Letter {
        atoms.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lasso_examples() {
        let p = LtlFormula::atom("p");
        let q = LtlFormula::atom("q");
        assert!(eval_on_lasso(&LtlFormula::always(p.clone()), &[], &[letter(&["p"])]));
        assert!(!eval_on_lasso(&LtlFormula::eventually(q.clone()), &[letter(&[])], &[letter(&[])]));
        // p U q on [p] · ([q], [])^ω: q holds at position 1.
        assert!(eval_on_lasso(
            &LtlFormula::until(p.clone(), q.clone()),
            &[letter(&["p"])],
            &[letter(&["q"]), letter(&[])]
        ));
    }

    #[test]
    fn until_needs_witness_in_cycle() {
        let f = LtlFormula::until(LtlFormula::atom("p"), LtlFormula::atom("q"));
        assert!(!eval_on_lasso(&f, &[], &[letter(&["p"])]));
        let w = LtlFormula::weak_until(LtlFormula::atom("p"), LtlFormula::atom("q"));
        assert!(eval_on_lasso(&w, &[], &[letter(&["p"])]));
    }

    #[test]
    fn infinitely_often_on_cycle() {
        let f = LtlFormula::always(LtlFormula::eventually(LtlFormula::atom("p")));
        assert!(eval_on_lasso(&f, &[letter(&[])], &[letter(&[]), letter(&["p"])]));
        assert!(!eval_on_lasso(&f, &[letter(&["p"])], &[letter(&[])]));
    }

    #[test]
    fn display_is_fully_parenthesised() {
        let f = LtlFormula::always(LtlFormula::implies(
            LtlFormula::atom("a"),
            LtlFormula::until(LtlFormula::atom("b"), LtlFormula::not(LtlFormula::atom("c"))),
        ));
        assert_eq!(f.to_string(), "[] (a -> (b U !c))");
    }
}
