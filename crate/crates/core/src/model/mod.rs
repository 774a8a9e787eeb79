//! Design-level transition system: one Supervisor, `N` workers and an
//! environment process that constructs and commands the Supervisor.
//!
//! Every step is a single guarded update (one state write, one command
//! write, one wait returning, ...). Workers are black boxes whose hooks make
//! non-deterministic choices:
//!
//! * `prepare`: pause itself, stop itself, throw, or do nothing;
//! * `execute`: stop itself, throw, or do nothing;
//! * `finish`: throw, or do nothing.
//!
//! Process indices: `0` is the Supervisor, `1..=N` the workers, `N + 1` the
//! environment.

mod action;
mod state;

pub use action::{Action, ActionKind, HookChoice};
pub use state::{GlobalState, ModelError, Pc, ProcessState, MAX_WORKERS};

use crate::checker::{PropId, TransitionSystem};
use crate::fsm::{try_set_command, StateMask, ThreadCommand, ThreadState};
use std::fmt;
use std::str::FromStr;

/// How `set_command` stores a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommandStore {
    /// Guard table decides (current design).
    Guarded,
    /// Unconditional store (the revoked-ABORT defect).
    Unguarded,
}

/// How a waiting thread decides it may continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaitMode {
    /// Bitmask membership (current design).
    Mask,
    /// `!(state < target)` on declaration order (the ordinal-wait defect).
    Ordinal,
}

/// Selects the buggy or fixed implementation on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelVariant {
    pub command_store: CommandStore,
    pub wait_mode: WaitMode,
}

impl Default for ModelVariant {
    fn default() -> Self {
        ModelVariant::FIXED
    }
}

impl ModelVariant {
    pub const FIXED: ModelVariant =
        ModelVariant { command_store: CommandStore::Guarded, wait_mode: WaitMode::Mask };
    pub const BUGGY_SET_COMMAND: ModelVariant =
        ModelVariant { command_store: CommandStore::Unguarded, wait_mode: WaitMode::Mask };
    pub const BUGGY_ORDINAL_WAIT: ModelVariant =
        ModelVariant { command_store: CommandStore::Guarded, wait_mode: WaitMode::Ordinal };
    pub const BUGGY_BOTH: ModelVariant =
        ModelVariant { command_store: CommandStore::Unguarded, wait_mode: WaitMode::Ordinal };

    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::FIXED,
        ModelVariant::BUGGY_SET_COMMAND,
        ModelVariant::BUGGY_ORDINAL_WAIT,
        ModelVariant::BUGGY_BOTH,
    ];

    pub fn name(self) -> &'static str {
        match (self.command_store, self.wait_mode) {
            (CommandStore::Guarded, WaitMode::Mask) => "fixed",
            (CommandStore::Unguarded, WaitMode::Mask) => "buggy-set-command",
            (CommandStore::Guarded, WaitMode::Ordinal) => "buggy-ordinal-wait",
            (CommandStore::Unguarded, WaitMode::Ordinal) => "buggy-both",
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        (self.command_store == CommandStore::Unguarded) as u8
            | (((self.wait_mode == WaitMode::Ordinal) as u8) << 1)
    }

    pub(crate) fn from_byte(b: u8) -> Option<ModelVariant> {
        (b < 4).then(|| ModelVariant {
            command_store: if b & 1 == 1 { CommandStore::Unguarded } else { CommandStore::Guarded },
            wait_mode: if b & 2 == 2 { WaitMode::Ordinal } else { WaitMode::Mask },
        })
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ModelVariant::ALL.iter().map(|v| v.name()).collect();
                format!("unknown variant `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Which mask a Supervisor wait is for. The ordinal variant compares against
/// the single state the old API took instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaitTarget {
    Started,
    Paused,
    Resumed,
    Halted,
}

impl WaitTarget {
    pub fn mask(self) -> StateMask {
        match self {
            WaitTarget::Started => StateMask::STARTED,
            WaitTarget::Paused => StateMask::PAUSE,
            WaitTarget::Resumed => StateMask::RESUME,
            WaitTarget::Halted => StateMask::HALTED,
        }
    }

    /// Target of the old ordinal wait: returns once the state's ordinal is at
    /// least this state's.
    pub fn ordinal_target(self) -> ThreadState {
        match self {
            WaitTarget::Started | WaitTarget::Resumed => ThreadState::Running,
            WaitTarget::Paused => ThreadState::Paused,
            WaitTarget::Halted => ThreadState::Stopped,
        }
    }
}

/// Per-thread atomic propositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Predicate {
    Null,
    Ready,
    Starting,
    Running,
    Paused,
    Stopping,
    Stopped,
    Aborting,
    Aborted,
    Halting,
    Halted,
    Executable,
    Executing,
}

impl Predicate {
    pub const ALL: [Predicate; 13] = [
        Predicate::Null,
        Predicate::Ready,
        Predicate::Starting,
        Predicate::Running,
        Predicate::Paused,
        Predicate::Stopping,
        Predicate::Stopped,
        Predicate::Aborting,
        Predicate::Aborted,
        Predicate::Halting,
        Predicate::Halted,
        Predicate::Executable,
        Predicate::Executing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Null => "null",
            Predicate::Ready => "ready",
            Predicate::Starting => "starting",
            Predicate::Running => "running",
            Predicate::Paused => "paused",
            Predicate::Stopping => "stopping",
            Predicate::Stopped => "stopped",
            Predicate::Aborting => "aborting",
            Predicate::Aborted => "aborted",
            Predicate::Halting => "halting",
            Predicate::Halted => "halted",
            Predicate::Executable => "executable",
            Predicate::Executing => "executing",
        }
    }

    fn as_state(self) -> Option<ThreadState> {
        let i = self as u8;
        (1..=8).contains(&i).then(|| ThreadState::ALL[i as usize - 1])
    }

    pub fn eval(self, p: &ProcessState) -> bool {
        match self {
            Predicate::Null => p.state.is_none(),
            Predicate::Halting => p.state.is_some_and(ThreadState::is_halting),
            Predicate::Halted => p.state.is_some_and(ThreadState::is_halted),
            Predicate::Executable => {
                p.state == Some(ThreadState::Running) && p.command == ThreadCommand::Continue
            }
            Predicate::Executing => p.in_execute(),
            other => p.state == other.as_state(),
        }
    }
}

/// Truth values of every proposition for every thread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropositionValuation {
    /// `values[t][p]` for thread `t` (0 = Supervisor) and predicate index `p`.
    pub values: Vec<[bool; 13]>,
}

impl PropositionValuation {
    pub fn get(&self, thread: usize, pred: Predicate) -> bool {
        self.values[thread][pred as usize]
    }
}

/// Atom name for a thread's predicate: `ready_s`, `stopped_w2`, ...
pub fn atom_name(thread: usize, pred: Predicate) -> String {
    format!("{}_{}", pred.name(), thread_name(thread))
}

pub fn thread_name(thread: usize) -> String {
    if thread == 0 {
        "s".to_string()
    } else {
        format!("w{thread}")
    }
}

/// The transition system for a fixed worker count and variant.
#[derive(Clone, Debug)]
pub struct AdaproModel {
    workers: usize,
    variant: ModelVariant,
}

impl AdaproModel {
    pub fn new(workers: usize, variant: ModelVariant) -> Result<Self, ModelError> {
        if workers == 0 || workers > MAX_WORKERS {
            return Err(ModelError::WorkerCount(workers));
        }
        Ok(AdaproModel { workers, variant })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn env_index(&self) -> usize {
        self.workers + 1
    }

    /// Every atom the model can evaluate.
    pub fn vocabulary(&self) -> std::collections::BTreeSet<String> {
        (0..=self.workers)
            .flat_map(|t| Predicate::ALL.into_iter().map(move |p| atom_name(t, p)))
            .collect()
    }

    pub fn label(&self, g: &GlobalState) -> PropositionValuation {
        PropositionValuation {
            values: (0..=self.workers)
                .map(|t| {
                    let mut row = [false; 13];
                    for p in Predicate::ALL {
                        row[p as usize] = p.eval(g.thread(t));
                    }
                    row
                })
                .collect(),
        }
    }

    /// Processes with at least one enabled step.
    pub fn enabled_processes(&self, g: &GlobalState) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.successors(g).iter().map(|(a, _)| a.process as usize).collect();
        out.dedup();
        out
    }

    fn store_command(&self, p: &mut ProcessState, requested: ThreadCommand) {
        let Some(state) = p.state else { return };
        p.command = match self.variant.command_store {
            CommandStore::Guarded => try_set_command(state, p.command, requested).command,
            CommandStore::Unguarded => requested,
        };
    }

    fn wait_satisfied(&self, p: &ProcessState, target: WaitTarget) -> bool {
        let Some(state) = p.state else { return false };
        match self.variant.wait_mode {
            WaitMode::Mask => target.mask().contains(state),
            WaitMode::Ordinal => state.ordinal() >= target.ordinal_target().ordinal(),
        }
    }

    /// Supervisor's reaction condition: a worker aborted or all stopped. It is
    /// evaluated at the top of every main-loop iteration, so an environment
    /// that keeps toggling PAUSE/CONTINUE cannot starve it.
    fn workers_need_stop(&self, g: &GlobalState) -> bool {
        let ws = g.workers();
        ws.iter().any(|w| w.state == Some(ThreadState::Aborted))
            || ws.iter().all(|w| w.state == Some(ThreadState::Stopped))
    }

    fn thread_steps(&self, g: &GlobalState, t: usize, out: &mut Vec<(Action, GlobalState)>) {
        let p = *g.thread(t);
        let n = self.workers as u8;
        let is_sup = t == 0;
        let mut emit = |kind: ActionKind, f: &dyn Fn(&mut GlobalState)| {
            let mut next = g.clone();
            f(&mut next);
            out.push((Action { process: t as u8, kind }, next));
        };
        let set_pc = |g: &mut GlobalState, pc: Pc| g.thread_mut(t).pc = pc;
        let set_state = |g: &mut GlobalState, s: ThreadState| g.thread_mut(t).state = Some(s);
        let state = p.state;

        match p.pc {
            Pc::Unborn | Pc::Halted | Pc::Gone => {}
            Pc::AwaitStart => {
                if p.command == ThreadCommand::Start {
                    emit(ActionKind::SetState(ThreadState::Starting), &|g| {
                        set_state(g, ThreadState::Starting);
                        set_pc(g, Pc::AckStart);
                    });
                }
            }
            Pc::AckStart => emit(ActionKind::AckStart, &|g| {
                let th = g.thread_mut(t);
                if th.command == ThreadCommand::Start {
                    th.command = ThreadCommand::Continue;
                }
                th.pc = if is_sup { Pc::SupConstruct(0) } else { Pc::Prepare };
            }),
            Pc::Prepare => {
                for choice in [HookChoice::Pause, HookChoice::Stop, HookChoice::Throw, HookChoice::Skip]
                {
                    self.hook_choice(g, t, choice, &mut emit);
                }
            }
            Pc::Execute => {
                let choices: &[HookChoice] = if is_sup {
                    &[HookChoice::Skip]
                } else {
                    &[HookChoice::Stop, HookChoice::Throw, HookChoice::Skip]
                };
                for &choice in choices {
                    self.hook_choice(g, t, choice, &mut emit);
                }
            }
            Pc::Finish => {
                for choice in [HookChoice::Throw, HookChoice::Skip] {
                    self.hook_choice(g, t, choice, &mut emit);
                }
            }
            Pc::ThrowState => emit(ActionKind::SetState(ThreadState::Aborting), &|g| {
                set_state(g, ThreadState::Aborting);
                set_pc(g, Pc::Loop);
            }),
            Pc::Loop
                if is_sup
                    && matches!(p.command, ThreadCommand::Continue | ThreadCommand::Pause)
                    && self.workers_need_stop(g) =>
            {
                emit(ActionKind::Monitor, &|g| {
                    let mut th = *g.thread(t);
                    self.store_command(&mut th, ThreadCommand::Stop);
                    *g.thread_mut(t) = th;
                });
            }
            Pc::Loop => match p.command {
                ThreadCommand::Continue => {
                    if state != Some(ThreadState::Running) {
                        let resumed = state == Some(ThreadState::Paused);
                        emit(ActionKind::SetState(ThreadState::Running), &|g| {
                            set_state(g, ThreadState::Running);
                            if is_sup && resumed {
                                set_pc(g, Pc::SupResume(0));
                            }
                        });
                    } else {
                        emit(ActionKind::Dispatch, &|g| set_pc(g, Pc::Execute));
                    }
                }
                ThreadCommand::Pause => {
                    if state != Some(ThreadState::Paused) {
                        emit(ActionKind::SetState(ThreadState::Paused), &|g| {
                            set_state(g, ThreadState::Paused);
                            if is_sup {
                                set_pc(g, Pc::SupPause(0));
                            }
                        });
                    }
                }
                ThreadCommand::Stop | ThreadCommand::Abort => {
                    emit(ActionKind::Dispatch, &|g| set_pc(g, Pc::Shutdown))
                }
                ThreadCommand::Start => {}
            },
            Pc::Shutdown => match p.command {
                ThreadCommand::Stop => emit(ActionKind::SetState(ThreadState::Stopping), &|g| {
                    set_state(g, ThreadState::Stopping);
                    set_pc(g, if is_sup { Pc::SupStop(0) } else { Pc::Finish });
                }),
                ThreadCommand::Abort => {
                    if state == Some(ThreadState::Aborting) {
                        emit(ActionKind::SetState(ThreadState::Aborted), &|g| {
                            set_state(g, ThreadState::Aborted);
                            set_pc(g, Pc::Halted);
                        });
                    } else {
                        emit(ActionKind::SetState(ThreadState::Aborting), &|g| {
                            set_state(g, ThreadState::Aborting)
                        });
                    }
                }
                _ => emit(ActionKind::Dispatch, &|g| set_pc(g, Pc::Loop)),
            },
            Pc::StopEnd => emit(ActionKind::SetState(ThreadState::Stopped), &|g| {
                set_state(g, ThreadState::Stopped);
                set_pc(g, Pc::Halted);
            }),
            Pc::SupConstruct(i) => emit(ActionKind::Construct { target: i + 1 }, &|g| {
                *g.thread_mut(i as usize + 1) = ProcessState::constructed();
                set_pc(g, if i + 1 < n { Pc::SupConstruct(i + 1) } else { Pc::SupStart(0) });
            }),
            Pc::SupStart(i) => {
                self.send(g, t, i, ThreadCommand::Start, &mut emit, &|i| {
                    if i + 1 < n { Pc::SupStart(i + 1) } else { Pc::SupWaitStarted(0) }
                })
            }
            Pc::SupWaitStarted(i) => self.wait(g, t, i, WaitTarget::Started, &mut emit, &|i| {
                if i + 1 < n { Pc::SupWaitStarted(i + 1) } else { Pc::Loop }
            }),
            Pc::SupPause(i) => self.send(g, t, i, ThreadCommand::Pause, &mut emit, &|i| {
                Pc::SupWaitPaused(i)
            }),
            Pc::SupWaitPaused(i) => self.wait(g, t, i, WaitTarget::Paused, &mut emit, &|i| {
                if i + 1 < n { Pc::SupPause(i + 1) } else { Pc::Loop }
            }),
            Pc::SupResume(i) => self.send(g, t, i, ThreadCommand::Continue, &mut emit, &|i| {
                Pc::SupWaitResumed(i)
            }),
            Pc::SupWaitResumed(i) => self.wait(g, t, i, WaitTarget::Resumed, &mut emit, &|i| {
                if i + 1 < n { Pc::SupResume(i + 1) } else { Pc::Loop }
            }),
            Pc::SupStop(i) => self.send(g, t, i, ThreadCommand::Stop, &mut emit, &|i| {
                Pc::SupWaitHalted(i)
            }),
            Pc::SupWaitHalted(i) => self.wait(g, t, i, WaitTarget::Halted, &mut emit, &|i| {
                if i + 1 < n { Pc::SupStop(i + 1) } else { Pc::SupDestroy(0) }
            }),
            Pc::SupDestroy(i) => emit(ActionKind::Destroy { target: i + 1 }, &|g| {
                *g.thread_mut(i as usize + 1) = ProcessState::gone();
                set_pc(g, if i + 1 < n { Pc::SupDestroy(i + 1) } else { Pc::StopEnd });
            }),
            Pc::EnvConstruct | Pc::EnvStart | Pc::EnvLoop | Pc::EnvDone => {
                unreachable!("environment location on a thread")
            }
        }
    }

    fn hook_choice(
        &self,
        g: &GlobalState,
        t: usize,
        choice: HookChoice,
        emit: &mut dyn FnMut(ActionKind, &dyn Fn(&mut GlobalState)),
    ) {
        let after = match g.thread(t).pc {
            Pc::Finish => Pc::StopEnd,
            _ => Pc::Loop,
        };
        let hook = g.thread(t).pc;
        emit(ActionKind::Hook { hook, choice }, &|g| {
            let mut th = *g.thread(t);
            th.pc = match choice {
                HookChoice::Pause => {
                    self.store_command(&mut th, ThreadCommand::Pause);
                    Pc::Loop
                }
                HookChoice::Stop => {
                    self.store_command(&mut th, ThreadCommand::Stop);
                    Pc::Loop
                }
                HookChoice::Throw => {
                    self.store_command(&mut th, ThreadCommand::Abort);
                    Pc::ThrowState
                }
                HookChoice::Skip => after,
            };
            *g.thread_mut(t) = th;
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn send(
        &self,
        _g: &GlobalState,
        t: usize,
        i: u8,
        command: ThreadCommand,
        emit: &mut dyn FnMut(ActionKind, &dyn Fn(&mut GlobalState)),
        next: &dyn Fn(u8) -> Pc,
    ) {
        emit(ActionKind::Send { target: i + 1, command }, &|g| {
            let mut w = *g.thread(i as usize + 1);
            self.store_command(&mut w, command);
            *g.thread_mut(i as usize + 1) = w;
            g.thread_mut(t).pc = next(i);
        });
    }

    fn wait(
        &self,
        g: &GlobalState,
        t: usize,
        i: u8,
        target: WaitTarget,
        emit: &mut dyn FnMut(ActionKind, &dyn Fn(&mut GlobalState)),
        next: &dyn Fn(u8) -> Pc,
    ) {
        if self.wait_satisfied(g.thread(i as usize + 1), target) {
            emit(ActionKind::WaitReturned { target: i + 1, mask: target.mask() }, &|g| {
                g.thread_mut(t).pc = next(i)
            });
        }
    }

    fn env_steps(&self, g: &GlobalState, out: &mut Vec<(Action, GlobalState)>) {
        let e = self.env_index() as u8;
        let mut emit = |kind: ActionKind, f: &dyn Fn(&mut GlobalState)| {
            let mut next = g.clone();
            f(&mut next);
            out.push((Action { process: e, kind }, next));
        };
        match g.env_pc {
            Pc::EnvConstruct => emit(ActionKind::Construct { target: 0 }, &|g| {
                *g.thread_mut(0) = ProcessState::constructed();
                g.env_pc = Pc::EnvStart;
            }),
            Pc::EnvStart => emit(ActionKind::Send { target: 0, command: ThreadCommand::Start }, &|g| {
                let mut s = *g.thread(0);
                self.store_command(&mut s, ThreadCommand::Start);
                *g.thread_mut(0) = s;
                g.env_pc = Pc::EnvLoop;
            }),
            Pc::EnvLoop => {
                for command in [ThreadCommand::Pause, ThreadCommand::Continue, ThreadCommand::Stop] {
                    emit(ActionKind::Send { target: 0, command }, &|g| {
                        let mut s = *g.thread(0);
                        self.store_command(&mut s, command);
                        *g.thread_mut(0) = s;
                    });
                }
                emit(ActionKind::Quit, &|g| g.env_pc = Pc::EnvDone);
            }
            _ => {}
        }
    }
}

impl TransitionSystem for AdaproModel {
    type State = GlobalState;
    type Action = Action;

    fn initial_state(&self) -> GlobalState {
        GlobalState::initial(self.workers, self.variant)
    }

    fn successors(&self, g: &GlobalState) -> Vec<(Action, GlobalState)> {
        let mut out = Vec::new();
        for t in 0..=self.workers {
            self.thread_steps(g, t, &mut out);
        }
        self.env_steps(g, &mut out);
        out
    }

    fn process_count(&self) -> usize {
        self.workers + 2
    }

    fn actor(&self, action: &Action) -> usize {
        action.process as usize
    }

    fn resolve(&self, atom: &str) -> Option<PropId> {
        let (pred, thread) = atom.rsplit_once('_')?;
        let t = match thread {
            "s" => 0,
            w => w.strip_prefix('w')?.parse::<usize>().ok().filter(|i| (1..=self.workers).contains(i))?,
        };
        let p = Predicate::ALL.into_iter().find(|p| p.name() == pred)?;
        Some(PropId((t * Predicate::ALL.len() + p as usize) as u32))
    }

    fn holds(&self, g: &GlobalState, prop: PropId) -> bool {
        let t = prop.0 as usize / Predicate::ALL.len();
        let p = Predicate::ALL[prop.0 as usize % Predicate::ALL.len()];
        p.eval(g.thread(t))
    }

    fn encode(&self, g: &GlobalState) -> Vec<u8> {
        g.encode()
    }

    fn decode(&self, bytes: &[u8]) -> Option<GlobalState> {
        GlobalState::decode(bytes).ok()
    }

    fn describe(&self, g: &GlobalState) -> String {
        g.to_string()
    }
}

#[cfg(test)]
mod tests;
