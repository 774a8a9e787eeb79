use super::LtlFormula as F;

/// Negation normal form: negation only on atoms, no `->`, no `W`.
///
/// `p W q` becomes `(p U q) || [] p`; `!(p U q)` becomes
/// `(!q U (!p && !q)) || [] !q`.
pub fn to_nnf(f: &F) -> F {
    pos(f)
}

fn pos(f: &F) -> F {
    match f {
        F::True | F::False | F::Atom(_) => f.clone(),
        F::Not(g) => neg(g),
        F::And(a, b) => F::and(pos(a), pos(b)),
        F::Or(a, b) => F::or(pos(a), pos(b)),
        F::Implies(a, b) => F::or(neg(a), pos(b)),
        F::Next(g) => F::next(pos(g)),
        F::Until(a, b) => F::until(pos(a), pos(b)),
        F::WeakUntil(a, b) => weak_until(pos(a), pos(b)),
        F::Eventually(g) => F::eventually(pos(g)),
        F::Always(g) => F::always(pos(g)),
    }
}

fn neg(f: &F) -> F {
    match f {
        F::True => F::False,
        F::False => F::True,
        F::Atom(_) => F::not(f.clone()),
        F::Not(g) => pos(g),
        F::And(a, b) => F::or(neg(a), neg(b)),
        F::Or(a, b) => F::and(neg(a), neg(b)),
        F::Implies(a, b) => F::and(pos(a), neg(b)),
        F::Next(g) => F::next(neg(g)),
        // !(a U b) == !b W (!a && !b)
        F::Until(a, b) => {
            let (na, nb) = (neg(a), neg(b));
            weak_until(nb.clone(), F::and(na, nb))
        }
        // !(a W b) == !b U (!a && !b)
        F::WeakUntil(a, b) => {
            let (na, nb) = (neg(a), neg(b));
            F::until(nb.clone(), F::and(na, nb))
        }
        F::Eventually(g) => F::always(neg(g)),
        F::Always(g) => F::eventually(neg(g)),
    }
}

fn weak_until(a: F, b: F) -> F {
    F::or(F::until(a.clone(), b), F::always(a))
}

/// `true` if negation is applied only to atoms and neither `->` nor `W`
/// occurs.
pub fn is_nnf(f: &F) -> bool {
    match f {
        F::True | F::False | F::Atom(_) => true,
        F::Not(g) => matches!(**g, F::Atom(_)),
        F::Implies(..) | F::WeakUntil(..) => false,
        F::And(a, b) | F::Or(a, b) | F::Until(a, b) => is_nnf(a) && is_nnf(b),
        F::Next(g) | F::Eventually(g) | F::Always(g) => is_nnf(g),
    }
}
