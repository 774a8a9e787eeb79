use super::state::Pc;
use super::thread_name;
use crate::fsm::{StateMask, ThreadCommand, ThreadState};
use std::fmt;

/// Non-deterministic outcome of a worker hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HookChoice {
    Pause,
    Stop,
    Throw,
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    /// Owner constructs thread `target` (0 = Supervisor).
    Construct { target: u8 },
    /// Trigger `command` on thread `target`; may be rejected by the guard.
    Send { target: u8, command: ThreadCommand },
    SetState(ThreadState),
    /// START replaced by CONTINUE by the thread itself.
    AckStart,
    /// A hook returned (or threw) with the given choice.
    Hook { hook: Pc, choice: HookChoice },
    /// Control moved within the main loop without touching shared data.
    Dispatch,
    /// Supervisor inspected worker states.
    Monitor,
    WaitReturned { target: u8, mask: StateMask },
    Destroy { target: u8 },
    /// Environment stops issuing commands.
    Quit,
}

/// A labelled step of one process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub process: u8,
    pub kind: ActionKind,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActionKind::Construct { target } => {
                write!(f, "p{}:construct({})", self.process, thread_name(target as usize))
            }
            ActionKind::Send { target, command } => {
                write!(f, "p{}:send({},{command})", self.process, thread_name(target as usize))
            }
            ActionKind::SetState(s) => write!(f, "p{}:set_state({s})", self.process),
            ActionKind::AckStart => write!(f, "p{}:ack_start", self.process),
            ActionKind::Hook { hook, choice } => {
                let h = format!("{hook:?}").to_lowercase();
                let c = format!("{choice:?}").to_lowercase();
                write!(f, "p{}:{h}->{c}", self.process)
            }
            ActionKind::Dispatch => write!(f, "p{}:dispatch", self.process),
            ActionKind::Monitor => write!(f, "p{}:monitor", self.process),
            ActionKind::WaitReturned { target, mask } => write!(
                f,
                "p{}:wait_returned({},0x{:02X})",
                self.process,
                thread_name(target as usize),
                mask.0
            ),
            ActionKind::Destroy { target } => {
                write!(f, "p{}:destroy({})", self.process, thread_name(target as usize))
            }
            ActionKind::Quit => write!(f, "p{}:quit", self.process),
        }
    }
}
