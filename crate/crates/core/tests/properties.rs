use adapro::checker::{
    check_invariant, check_ltl, CheckOptions, TransitionSystem, Verdict, DEFAULT_STATE_LIMIT,
};
use adapro::fsm::{
    command_accepted, legal_transition, state_in, try_set_command, StateMask, ThreadCommand,
    ThreadState,
};
use adapro::ltl::{eval_on_lasso, is_nnf, parse, to_buchi, to_nnf, Letter, LtlFormula};
use adapro::model::{AdaproModel, GlobalState, ModelVariant, Predicate};
use proptest::prelude::*;
use std::collections::BTreeSet;

const ATOMS: [&str; 3] = ["a", "b", "c"];

fn arb_state() -> impl Strategy<Value = ThreadState> {
    prop::sample::select(ThreadState::ALL.to_vec())
}

fn arb_command() -> impl Strategy<Value = ThreadCommand> {
    prop::sample::select(ThreadCommand::ALL.to_vec())
}

fn arb_formula() -> impl Strategy<Value = LtlFormula> {
    let leaf = prop_oneof![
        1 => Just(LtlFormula::True),
        1 => Just(LtlFormula::False),
        6 => prop::sample::select(ATOMS.to_vec()).prop_map(LtlFormula::atom),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(LtlFormula::not),
            inner.clone().prop_map(LtlFormula::next),
            inner.clone().prop_map(LtlFormula::eventually),
            inner.clone().prop_map(LtlFormula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| LtlFormula::weak_until(a, b)),
        ]
    })
}

fn arb_letter() -> impl Strategy<Value = Letter> {
    prop::sample::subsequence(ATOMS.to_vec(), 0..=ATOMS.len())
        .prop_map(|s| s.into_iter().map(String::from).collect())
}

fn arb_lasso() -> impl Strategy<Value = (Vec<Letter>, Vec<Letter>)> {
    (prop::collection::vec(arb_letter(), 0..=4), prop::collection::vec(arb_letter(), 1..=4))
}

fn negations_only_on_atoms(f: &LtlFormula) -> bool {
    match f {
        LtlFormula::Not(g) => matches!(**g, LtlFormula::Atom(_)),
        LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => true,
        LtlFormula::Next(g) | LtlFormula::Eventually(g) | LtlFormula::Always(g) => {
            negations_only_on_atoms(g)
        }
        LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Until(a, b) => {
            negations_only_on_atoms(a) && negations_only_on_atoms(b)
        }
        LtlFormula::Implies(..) | LtlFormula::WeakUntil(..) => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mask_membership_is_bitwise(state in arb_state(), bits in any::<u8>()) {
        prop_assert_eq!(state_in(state, StateMask(bits)), state.bits() & bits > 0);
        prop_assert_eq!(StateMask(bits).contains(state), state.bits() & bits > 0);
    }

    #[test]
    fn guard_table_matches_its_definition(
        s in arb_state(), c in arb_command(), r in arb_command()
    ) {
        use ThreadCommand as C;
        use ThreadState as S;
        let expected = match r {
            C::Start => s == S::Ready && c == C::Continue,
            C::Pause => matches!(s, S::Starting | S::Running) && c == C::Continue,
            C::Continue => s == S::Paused && c == C::Pause,
            C::Stop => matches!(c, C::Continue | C::Pause)
                && matches!(s, S::Starting | S::Running | S::Paused),
            C::Abort => matches!(s, S::Starting | S::Running | S::Stopping),
        };
        prop_assert_eq!(command_accepted(s, c, r), expected);
        let d = try_set_command(s, c, r);
        prop_assert_eq!(d.accepted, expected);
        prop_assert_eq!(d.command, if expected { r } else { c });
        // Resuming is the one accepted store that lowers priority.
        if d.accepted && r.priority() < c.priority() {
            prop_assert_eq!((s, c, r), (S::Paused, C::Pause, C::Continue));
        }
        if matches!(c, C::Stop | C::Abort) {
            prop_assert!(d.command.priority() >= c.priority());
        }
    }

    #[test]
    fn printed_formulas_parse_back(f in arb_formula()) {
        prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn nnf_preserves_meaning((f, (prefix, cycle)) in (arb_formula(), arb_lasso())) {
        let g = to_nnf(&f);
        prop_assert!(is_nnf(&g));
        prop_assert!(negations_only_on_atoms(&g), "{}", g);
        prop_assert_eq!(eval_on_lasso(&g, &prefix, &cycle), eval_on_lasso(&f, &prefix, &cycle));
    }

    #[test]
    fn automaton_agrees_with_evaluator((f, (prefix, cycle)) in (arb_formula(), arb_lasso())) {
        let a = to_buchi(&f);
        prop_assert_eq!(a.accepts_lasso(&prefix, &cycle), eval_on_lasso(&f, &prefix, &cycle), "{}", f);
    }

    #[test]
    fn automaton_is_reachable_with_satisfiable_labels(f in arb_formula()) {
        let a = to_buchi(&f);
        let mut seen = vec![false; a.len()];
        let mut stack = vec![a.initial];
        seen[a.initial] = true;
        while let Some(q) = stack.pop() {
            for t in &a.transitions[q] {
                let pos: BTreeSet<_> = t.label.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
                prop_assert!(t.label.iter().all(|l| l.positive || !pos.contains(&l.atom)));
                if !seen[t.target] {
                    seen[t.target] = true;
                    stack.push(t.target);
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }
}

/// Follows `picks` through the model, taking successor `pick % n` at each
/// step, and returns the visited states.
fn walk(model: &AdaproModel, picks: &[usize]) -> Vec<GlobalState> {
    let mut s = model.initial_state();
    let mut out = vec![s.clone()];
    for &p in picks {
        let succ = model.successors(&s);
        if succ.is_empty() {
            break;
        }
        s = succ[p % succ.len()].1.clone();
        out.push(s.clone());
    }
    out
}

fn arb_variant() -> impl Strategy<Value = ModelVariant> {
    prop::sample::select(ModelVariant::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_states_encode_canonically(
        workers in 1usize..=3,
        variant in arb_variant(),
        picks in prop::collection::vec(any::<usize>(), 0..120),
    ) {
        let model = AdaproModel::new(workers, variant).unwrap();
        let states = walk(&model, &picks);
        for s in &states {
            let bytes = model.encode(s);
            let decoded = model.decode(&bytes);
            prop_assert_eq!(decoded.as_ref(), Some(s));
        }
        for a in &states {
            for b in &states {
                prop_assert_eq!(a == b, model.encode(a) == model.encode(b));
            }
        }
    }

    #[test]
    fn valuations_are_consistent(
        workers in 1usize..=3,
        variant in arb_variant(),
        picks in prop::collection::vec(any::<usize>(), 0..120),
    ) {
        use Predicate as P;
        let model = AdaproModel::new(workers, variant).unwrap();
        for s in walk(&model, &picks) {
            let v = model.label(&s);
            for t in 0..=workers {
                let exclusive = [P::Null, P::Ready, P::Starting, P::Running, P::Paused,
                    P::Stopping, P::Stopped, P::Aborting, P::Aborted];
                prop_assert_eq!(exclusive.iter().filter(|&&p| v.get(t, p)).count(), 1);
                prop_assert_eq!(v.get(t, P::Halting), v.get(t, P::Stopping) || v.get(t, P::Aborting));
                prop_assert_eq!(v.get(t, P::Halted), v.get(t, P::Stopped) || v.get(t, P::Aborted));
                let p = s.thread(t);
                prop_assert_eq!(
                    v.get(t, P::Executable),
                    p.state == Some(ThreadState::Running) && p.command == ThreadCommand::Continue
                );
                if p.in_execute() {
                    prop_assert_eq!(p.state, Some(ThreadState::Running));
                }
                if p.state.is_none() {
                    prop_assert!(!v.get(t, P::Executing));
                }
            }
        }
    }

    #[test]
    fn fixed_model_steps_are_legal(
        workers in 1usize..=2,
        picks in prop::collection::vec(any::<usize>(), 0..200),
    ) {
        let model = AdaproModel::new(workers, ModelVariant::FIXED).unwrap();
        let states = walk(&model, &picks);
        for pair in states.windows(2) {
            for t in 0..=workers {
                if let (Some(a), Some(b)) = (pair[0].thread(t).state, pair[1].thread(t).state) {
                    prop_assert!(a == b || legal_transition(a, b), "{a:?} -> {b:?}");
                }
            }
        }
    }
}

#[test]
fn statistics_never_store_more_states_than_edges_plus_one() {
    for variant in ModelVariant::ALL {
        let model = AdaproModel::new(1, variant).unwrap();
        let safety = check_invariant(&model, &parse("!aborted_s").unwrap(), DEFAULT_STATE_LIMIT)
            .unwrap();
        assert!(safety.stats.states <= safety.stats.transitions + 1);
        let ltl = check_ltl(&model, &parse("[] <> halted_s").unwrap(), CheckOptions::default())
            .unwrap();
        assert!(ltl.stats.states <= ltl.stats.transitions + 1);
    }
}

/// Every counterexample is a path of the model, and a lasso closes.
#[test]
fn counterexamples_are_model_paths() {
    let opts = CheckOptions { weak_fairness: true, ..Default::default() };
    let model = AdaproModel::new(1, ModelVariant::BUGGY_SET_COMMAND).unwrap();
    let mut found = 0;
    for n in adapro::corpus::obligations() {
        let f = adapro::corpus::formula(n, 1).unwrap().unwrap();
        let out = check_ltl(&model, &f, opts).unwrap();
        let Some(trace) = out.trace else { continue };
        assert_eq!(out.verdict, Verdict::Fail);
        found += 1;
        let states: Vec<_> = trace.steps().map(|s| s.state.clone()).collect();
        assert_eq!(states[0], model.initial_state());
        for pair in states.windows(2) {
            let ok = pair[0] == pair[1] && model.successors(&pair[0]).is_empty()
                || model.successors(&pair[0]).iter().any(|(_, t)| *t == pair[1]);
            assert!(ok, "formula {n}");
        }
        if let (Some(last), Some(first)) = (trace.cycle.last(), trace.cycle.first()) {
            let succ = model.successors(&last.state);
            assert!(succ.iter().any(|(_, t)| *t == first.state) || succ.is_empty());
        }
    }
    assert!(found > 0);
}
