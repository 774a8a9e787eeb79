use super::*;
use crate::fsm::legal_transition;
use std::collections::{HashSet, VecDeque};

fn reachable(m: &AdaproModel) -> Vec<GlobalState> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([m.initial_state()]);
    seen.insert(m.initial_state());
    while let Some(g) = queue.pop_front() {
        for (_, n) in m.successors(&g) {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
        order.push(g);
    }
    order
}

fn steps_of(m: &AdaproModel, g: &GlobalState, process: u8) -> Vec<(Action, GlobalState)> {
    m.successors(g).into_iter().filter(|(a, _)| a.process == process).collect()
}

/// Follows the given action labels from `g`.
fn drive(m: &AdaproModel, mut g: GlobalState, labels: &[&str]) -> GlobalState {
    for want in labels {
        let (_, next) = m
            .successors(&g)
            .into_iter()
            .find(|(a, _)| a.to_string() == *want)
            .unwrap_or_else(|| panic!("no step {want} from {g}"));
        g = next;
    }
    g
}

const STARTUP_1: [&str; 8] = [
    "p2:construct(s)",
    "p2:send(s,START)",
    "p0:set_state(STARTING)",
    "p0:ack_start",
    "p0:construct(w1)",
    "p0:send(w1,START)",
    "p1:set_state(STARTING)",
    "p1:ack_start",
];

#[test]
fn initial_state_is_all_null() {
    for n in 1..=3 {
        let m = AdaproModel::new(n, ModelVariant::FIXED).unwrap();
        let g = m.initial_state();
        assert_eq!(g.worker_count(), n);
        assert!(g.supervisor().state.is_none());
        assert!(g.workers().iter().all(|w| w.state.is_none()));
        assert_eq!(g.env_pc, Pc::EnvConstruct);
        let v = m.label(&g);
        assert!((0..=n).all(|t| v.get(t, Predicate::Null)));
    }
    assert_eq!(AdaproModel::new(0, ModelVariant::FIXED).unwrap_err(), ModelError::WorkerCount(0));
    assert!(AdaproModel::new(4, ModelVariant::FIXED).is_err());
}

#[test]
fn prepare_choice_point_has_four_branches() {
    let m = AdaproModel::new(1, ModelVariant::FIXED).unwrap();
    let g = drive(&m, m.initial_state(), &STARTUP_1);
    assert_eq!(g.thread(1).state, Some(ThreadState::Starting));
    assert_eq!(g.thread(1).pc, Pc::Prepare);
    assert_eq!(steps_of(&m, &g, 1).len(), 4);
}

#[test]
fn terminal_state_has_no_successors() {
    let m = AdaproModel::new(1, ModelVariant::FIXED).unwrap();
    let terminal: Vec<_> =
        reachable(&m).into_iter().filter(|g| m.successors(g).is_empty()).collect();
    assert!(!terminal.is_empty());
    // a session that ends, and one paused forever after the environment went idle
    assert!(terminal.iter().any(|g| g.supervisor().state == Some(ThreadState::Stopped)));
    assert!(terminal.iter().any(|g| g.supervisor().state == Some(ThreadState::Paused)));
    for g in terminal {
        assert_eq!(g.env_pc, Pc::EnvDone);
        assert!(m.enabled_processes(&g).is_empty());
        if g.supervisor().state == Some(ThreadState::Stopped) {
            assert!(g.workers().iter().all(|w| w.pc == Pc::Gone));
        }
    }
}

#[test]
fn unguarded_store_overwrites_abort_with_pause() {
    let m = AdaproModel::new(1, ModelVariant::BUGGY_SET_COMMAND).unwrap();
    let mut g = m.initial_state();
    *g.thread_mut(0) = ProcessState {
        state: Some(ThreadState::Paused),
        command: ThreadCommand::Pause,
        pc: Pc::SupPause(0),
    };
    *g.thread_mut(1) = ProcessState {
        state: Some(ThreadState::Aborting),
        command: ThreadCommand::Abort,
        pc: Pc::Loop,
    };
    g.env_pc = Pc::EnvDone;
    let (_, next) = steps_of(&m, &g, 0).pop().unwrap();
    assert_eq!(next.thread(1).command, ThreadCommand::Pause);

    let fixed = AdaproModel::new(1, ModelVariant::FIXED).unwrap();
    g.variant = ModelVariant::FIXED;
    let (_, next) = steps_of(&fixed, &g, 0).pop().unwrap();
    assert_eq!(next.thread(1).command, ThreadCommand::Abort);
}

#[test]
fn labels_follow_definitions() {
    let m = AdaproModel::new(1, ModelVariant::FIXED).unwrap();
    let mut g = m.initial_state();
    *g.thread_mut(0) = ProcessState {
        state: Some(ThreadState::Stopping),
        command: ThreadCommand::Stop,
        pc: Pc::SupStop(0),
    };
    *g.thread_mut(1) = ProcessState {
        state: Some(ThreadState::Running),
        command: ThreadCommand::Continue,
        pc: Pc::Loop,
    };
    let v = m.label(&g);
    assert!(v.get(0, Predicate::Halting) && !v.get(0, Predicate::Halted));
    assert!(v.get(1, Predicate::Executable) && !v.get(1, Predicate::Executing));
    assert!(m.holds(&g, m.resolve("executable_w1").unwrap()));
    assert!(m.holds(&g, m.resolve("halting_s").unwrap()));
    assert!(m.resolve("ready_w2").is_none());
    assert!(m.resolve("bogus_s").is_none());
}

#[test]
fn resume_wait_blocks_only_with_mask_semantics() {
    for (variant, enabled) in
        [(ModelVariant::FIXED, false), (ModelVariant::BUGGY_ORDINAL_WAIT, true)]
    {
        let m = AdaproModel::new(1, variant).unwrap();
        let mut g = GlobalState::initial(1, variant);
        *g.thread_mut(0) = ProcessState {
            state: Some(ThreadState::Running),
            command: ThreadCommand::Continue,
            pc: Pc::SupWaitResumed(0),
        };
        *g.thread_mut(1) = ProcessState {
            state: Some(ThreadState::Paused),
            command: ThreadCommand::Pause,
            pc: Pc::Loop,
        };
        g.env_pc = Pc::EnvDone;
        assert_eq!(m.enabled_processes(&g).contains(&0), enabled, "{variant}");
        // the paused worker is blocked until its command changes
        assert!(!m.enabled_processes(&g).contains(&1));
    }
}

#[test]
fn reachable_states_respect_invariants_in_fixed_variant() {
    for n in [1, 2] {
        let m = AdaproModel::new(n, ModelVariant::FIXED).unwrap();
        let states = reachable(&m);
        for g in &states {
            assert_eq!(m.successors(g), m.successors(g), "successors are deterministic");
            assert_eq!(GlobalState::decode(&g.encode()).unwrap(), *g);
            let v = m.label(g);
            for t in 0..=n {
                let p = g.thread(t);
                let exact = Predicate::ALL[..9].iter().filter(|&&q| v.get(t, q)).count();
                assert_eq!(exact, 1, "{g}");
                assert_eq!(
                    v.get(t, Predicate::Halting),
                    v.get(t, Predicate::Stopping) || v.get(t, Predicate::Aborting)
                );
                assert_eq!(
                    v.get(t, Predicate::Halted),
                    v.get(t, Predicate::Stopped) || v.get(t, Predicate::Aborted)
                );
                if p.in_execute() {
                    assert_eq!(p.state, Some(ThreadState::Running), "{g}");
                }
                if p.state.is_none() {
                    assert!(matches!(p.pc, Pc::Unborn | Pc::Gone), "{g}");
                }
            }
            for (a, next) in m.successors(g) {
                for t in 0..=n {
                    let (before, after) = (g.thread(t), next.thread(t));
                    if let (Some(x), Some(y)) = (before.state, after.state) {
                        assert!(legal_transition(x, y), "{x} -> {y} by {a}");
                        let internal = matches!(a.kind, ActionKind::AckStart);
                        if before.command != after.command && !internal {
                            let d = try_set_command(x, before.command, after.command);
                            assert!(d.accepted, "{} -> {} in {x} by {a}", before.command, after.command);
                        }
                    }
                }
            }
        }
        assert!(states.len() > 100);
    }
}

#[test]
fn reachable_state_count_is_stable_and_grows_with_workers() {
    let counts: Vec<usize> = (1..=2)
        .map(|n| reachable(&AdaproModel::new(n, ModelVariant::FIXED).unwrap()).len())
        .collect();
    assert!(counts[0] < counts[1]);
    assert_eq!(counts[1], reachable(&AdaproModel::new(2, ModelVariant::FIXED).unwrap()).len());
}

#[test]
fn buggy_set_command_has_abort_to_pause_edge() {
    let m = AdaproModel::new(2, ModelVariant::BUGGY_SET_COMMAND).unwrap();
    let witness = reachable(&m).iter().any(|g| {
        m.successors(g).iter().any(|(_, n)| {
            (1..=2).any(|t| {
                g.thread(t).command == ThreadCommand::Abort
                    && n.thread(t).command == ThreadCommand::Pause
            })
        })
    });
    assert!(witness);
    let fixed = AdaproModel::new(2, ModelVariant::FIXED).unwrap();
    assert!(!reachable(&fixed).iter().any(|g| {
        fixed.successors(g).iter().any(|(_, n)| {
            (1..=2).any(|t| {
                g.thread(t).command == ThreadCommand::Abort
                    && n.thread(t).state.is_some()
                    && n.thread(t).command != ThreadCommand::Abort
            })
        })
    }));
}

#[test]
fn variant_names_round_trip() {
    for v in ModelVariant::ALL {
        assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        assert_eq!(ModelVariant::from_byte(v.to_byte()), Some(v));
    }
    assert!("nope".parse::<ModelVariant>().is_err());
}

#[test]
fn pc_encoding_round_trips() {
    for b in 0..=u8::MAX {
        if let Some(pc) = Pc::from_byte(b) {
            assert_eq!(pc.to_byte(), b);
        }
    }
    assert_eq!(Pc::from_byte(Pc::SupDestroy(2).to_byte()), Some(Pc::SupDestroy(2)));
}
