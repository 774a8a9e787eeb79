//! Thread lifecycle states, commands, state masks and the guarded
//! command-acceptance relation shared by the design model and the runtime.

use std::fmt;
use std::str::FromStr;

/// Lifecycle state of a supervised thread. Encodings are distinct powers of
/// two so that sets of states can be expressed as [`StateMask`]s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum ThreadState {
    Ready = 1,
    Starting = 2,
    Running = 4,
    Paused = 8,
    Stopping = 16,
    Stopped = 32,
    Aborting = 64,
    Aborted = 128,
}

impl ThreadState {
    pub const ALL: [ThreadState; 8] = [
        ThreadState::Ready,
        ThreadState::Starting,
        ThreadState::Running,
        ThreadState::Paused,
        ThreadState::Stopping,
        ThreadState::Stopped,
        ThreadState::Aborting,
        ThreadState::Aborted,
    ];

    pub fn bits(self) -> u8 {
        self as u8
    }

    /// Position in declaration order (READY = 0 … ABORTED = 7). This is the
    /// ordering the old ordinal `wait_for_state` relied on.
    pub fn ordinal(self) -> u8 {
        self.bits().trailing_zeros() as u8
    }

    pub fn from_bits(bits: u8) -> Option<ThreadState> {
        ThreadState::ALL.into_iter().find(|s| s.bits() == bits)
    }

    pub fn from_ordinal(ordinal: u8) -> Option<ThreadState> {
        ThreadState::ALL.get(ordinal as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ThreadState::Ready => "READY",
            ThreadState::Starting => "STARTING",
            ThreadState::Running => "RUNNING",
            ThreadState::Paused => "PAUSED",
            ThreadState::Stopping => "STOPPING",
            ThreadState::Stopped => "STOPPED",
            ThreadState::Aborting => "ABORTING",
            ThreadState::Aborted => "ABORTED",
        }
    }

    pub fn is_halting(self) -> bool {
        matches!(self, ThreadState::Stopping | ThreadState::Aborting)
    }

    pub fn is_halted(self) -> bool {
        matches!(self, ThreadState::Stopped | ThreadState::Aborted)
    }
}

impl fmt::Display for ThreadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThreadState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ThreadState::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown thread state `{s}`"))
    }
}

/// A set of [`ThreadState`]s as an 8-bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct StateMask(pub u8);

impl StateMask {
    pub const EMPTY: StateMask = StateMask(0);
    /// States a paused thread may be in once it has been told to continue.
    pub const RESUME: StateMask = StateMask(
        ThreadState::Running as u8
            | ThreadState::Stopping as u8
            | ThreadState::Stopped as u8
            | ThreadState::Aborting as u8
            | ThreadState::Aborted as u8,
    );
    /// States that end the startup sequence.
    pub const STARTED: StateMask = StateMask(
        ThreadState::Running as u8
            | ThreadState::Paused as u8
            | ThreadState::Stopping as u8
            | ThreadState::Stopped as u8
            | ThreadState::Aborting as u8
            | ThreadState::Aborted as u8,
    );
    /// States acceptable after a pause request.
    pub const PAUSE: StateMask = StateMask(
        ThreadState::Paused as u8
            | ThreadState::Stopping as u8
            | ThreadState::Stopped as u8
            | ThreadState::Aborting as u8
            | ThreadState::Aborted as u8,
    );
    pub const HALTED: StateMask =
        StateMask(ThreadState::Stopped as u8 | ThreadState::Aborted as u8);

    pub fn of(states: &[ThreadState]) -> StateMask {
        StateMask(states.iter().fold(0, |m, s| m | s.bits()))
    }

    pub fn contains(self, state: ThreadState) -> bool {
        state_in(state, self)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl From<ThreadState> for StateMask {
    fn from(s: ThreadState) -> Self {
        StateMask(s.bits())
    }
}

impl std::ops::BitOr for StateMask {
    type Output = StateMask;
    fn bitor(self, rhs: StateMask) -> StateMask {
        StateMask(self.0 | rhs.0)
    }
}

impl std::ops::BitOr for ThreadState {
    type Output = StateMask;
    fn bitor(self, rhs: ThreadState) -> StateMask {
        StateMask(self.bits() | rhs.bits())
    }
}

impl std::ops::BitOr<ThreadState> for StateMask {
    type Output = StateMask;
    fn bitor(self, rhs: ThreadState) -> StateMask {
        StateMask(self.0 | rhs.bits())
    }
}

/// `true` iff `state` is a member of `mask`.
pub fn state_in(state: ThreadState, mask: StateMask) -> bool {
    (state.bits() & mask.0) > 0
}

/// Command submitted to a thread through a trigger method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum ThreadCommand {
    Start = 0,
    Stop = 1,
    Pause = 2,
    Continue = 3,
    Abort = 4,
}

impl ThreadCommand {
    pub const ALL: [ThreadCommand; 5] = [
        ThreadCommand::Start,
        ThreadCommand::Stop,
        ThreadCommand::Pause,
        ThreadCommand::Continue,
        ThreadCommand::Abort,
    ];

    /// Priority rank: ABORT > STOP > {PAUSE, START} > CONTINUE.
    pub fn priority(self) -> u8 {
        match self {
            ThreadCommand::Continue => 0,
            ThreadCommand::Pause | ThreadCommand::Start => 1,
            ThreadCommand::Stop => 2,
            ThreadCommand::Abort => 3,
        }
    }

    pub fn from_u8(v: u8) -> Option<ThreadCommand> {
        ThreadCommand::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ThreadCommand::Start => "START",
            ThreadCommand::Stop => "STOP",
            ThreadCommand::Pause => "PAUSE",
            ThreadCommand::Continue => "CONTINUE",
            ThreadCommand::Abort => "ABORT",
        }
    }
}

impl fmt::Display for ThreadCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThreadCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ThreadCommand::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown thread command `{s}`"))
    }
}

/// Outcome of submitting a command through the guard table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommandDecision {
    pub accepted: bool,
    pub command: ThreadCommand,
}

/// Whether the guard table lets `requested` replace `current` while the
/// thread is in `state`.
pub fn command_accepted(
    state: ThreadState,
    current: ThreadCommand,
    requested: ThreadCommand,
) -> bool {
    use ThreadCommand as C;
    use ThreadState as S;
    match requested {
        C::Start => state == S::Ready && current == C::Continue,
        C::Pause => {
            state_in(state, S::Starting | S::Running) && current == C::Continue
        }
        C::Continue => state == S::Paused && current == C::Pause,
        C::Stop => {
            matches!(current, C::Continue | C::Pause)
                && state_in(state, S::Starting | S::Running | S::Paused)
        }
        C::Abort => state_in(state, S::Starting | S::Running | S::Stopping),
    }
}

/// Guarded command store. Rejection leaves the current command in place.
pub fn try_set_command(
    state: ThreadState,
    current: ThreadCommand,
    requested: ThreadCommand,
) -> CommandDecision {
    if command_accepted(state, current, requested) {
        CommandDecision { accepted: true, command: requested }
    } else {
        CommandDecision { accepted: false, command: current }
    }
}

/// The next-state relation of the lifecycle FSM, self-loops included.
pub fn legal_transition(from: ThreadState, to: ThreadState) -> bool {
    use ThreadState as S;
    if from == to {
        return true;
    }
    let targets: StateMask = match from {
        S::Ready => S::Starting.into(),
        S::Starting => S::Running | S::Paused | S::Stopping | S::Aborting,
        S::Running => S::Paused | S::Stopping | S::Aborting,
        S::Paused => S::Running | S::Stopping,
        S::Stopping => S::Stopped | S::Aborting,
        S::Aborting => S::Aborted.into(),
        S::Stopped | S::Aborted => StateMask::EMPTY,
    };
    targets.contains(to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ThreadCommand as C;
    use ThreadState as S;

    fn bitwise_oracle(state: u8, mask: u8) -> bool {
        (0..8).any(|i| (state >> i) & 1 == 1 && (mask >> i) & 1 == 1)
    }

    #[test]
    fn encodings_are_ordered_powers_of_two() {
        for (i, s) in ThreadState::ALL.iter().enumerate() {
            assert_eq!(s.bits(), 1u8 << i);
            assert_eq!(s.ordinal() as usize, i);
            assert_eq!(ThreadState::from_bits(s.bits()), Some(*s));
        }
    }

    #[test]
    fn state_in_examples() {
        assert!(!state_in(S::Paused, StateMask::RESUME));
        assert!(state_in(S::Running, S::Running.into()));
        assert!(state_in(S::Aborted, StateMask::RESUME));
        assert_eq!(StateMask::RESUME.0, 4 + 16 + 32 + 64 + 128);
    }

    #[test]
    fn state_in_matches_bit_oracle_everywhere() {
        for s in ThreadState::ALL {
            for m in 0..=255u8 {
                assert_eq!(state_in(s, StateMask(m)), bitwise_oracle(s.bits(), m));
            }
        }
    }

    #[test]
    fn try_set_command_examples() {
        assert_eq!(
            try_set_command(S::Ready, C::Continue, C::Start),
            CommandDecision { accepted: true, command: C::Start }
        );
        assert_eq!(
            try_set_command(S::Running, C::Abort, C::Pause),
            CommandDecision { accepted: false, command: C::Abort }
        );
        assert_eq!(
            try_set_command(S::Paused, C::Pause, C::Continue),
            CommandDecision { accepted: true, command: C::Continue }
        );
    }

    #[test]
    fn accepted_commands_never_lower_priority() {
        for s in ThreadState::ALL {
            for c in ThreadCommand::ALL {
                for r in ThreadCommand::ALL {
                    let d = try_set_command(s, c, r);
                    if d.accepted && r.priority() < c.priority() {
                        // Resuming is the one downgrade the guard table allows.
                        assert_eq!((s, c, r), (S::Paused, C::Pause, C::Continue));
                    }
                    if !d.accepted {
                        assert_eq!(d.command, c);
                    }
                    if matches!(c, C::Abort | C::Stop) && d.command != c {
                        assert!(d.command.priority() > c.priority());
                    }
                }
            }
        }
    }

    #[test]
    fn abort_accepted_in_working_states() {
        for c in ThreadCommand::ALL {
            for s in [S::Starting, S::Running, S::Stopping] {
                assert_eq!(try_set_command(s, c, C::Abort).command, C::Abort);
            }
        }
    }

    #[test]
    fn abort_is_unique_maximum_priority() {
        let max = ThreadCommand::ALL.iter().map(|c| c.priority()).max().unwrap();
        let tops: Vec<_> = ThreadCommand::ALL.iter().filter(|c| c.priority() == max).collect();
        assert_eq!(tops, vec![&C::Abort]);
    }

    #[test]
    fn transition_relation_is_the_listed_edge_set() {
        let edges = [
            (S::Ready, S::Starting),
            (S::Starting, S::Running),
            (S::Starting, S::Paused),
            (S::Starting, S::Stopping),
            (S::Starting, S::Aborting),
            (S::Running, S::Paused),
            (S::Running, S::Stopping),
            (S::Running, S::Aborting),
            (S::Paused, S::Running),
            (S::Paused, S::Stopping),
            (S::Stopping, S::Stopped),
            (S::Stopping, S::Aborting),
            (S::Aborting, S::Aborted),
        ];
        let mut count = 0;
        for a in ThreadState::ALL {
            for b in ThreadState::ALL {
                let expected = a == b || edges.contains(&(a, b));
                assert_eq!(legal_transition(a, b), expected, "{a} -> {b}");
                if a != b && expected {
                    count += 1;
                }
            }
        }
        assert_eq!(count, edges.len());
        assert!(!legal_transition(S::Aborting, S::Paused));
        assert!(legal_transition(S::Stopped, S::Stopped));
        assert!(!legal_transition(S::Paused, S::Aborting));
    }

    #[test]
    fn names_parse_back() {
        for s in ThreadState::ALL {
            assert_eq!(s.name().parse::<ThreadState>().unwrap(), s);
        }
        for c in ThreadCommand::ALL {
            assert_eq!(c.name().parse::<ThreadCommand>().unwrap(), c);
        }
    }
}
