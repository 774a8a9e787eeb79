use super::ModelVariant;
use crate::fsm::{ThreadCommand, ThreadState};
use std::fmt;

/// Largest worker count the model accepts.
pub const MAX_WORKERS: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("worker count must be between 1 and {MAX_WORKERS}, got {0}")]
    WorkerCount(usize),
    #[error("malformed state encoding: {0}")]
    Encoding(String),
}

/// Program counter of a process. Supervisor-only locations carry the index
/// of the worker they operate on (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pc {
    /// Not yet constructed.
    Unborn,
    /// Constructed, waiting for START.
    AwaitStart,
    /// In STARTING, about to acknowledge START by storing CONTINUE.
    AckStart,
    Prepare,
    Loop,
    Execute,
    Shutdown,
    Finish,
    StopEnd,
    /// Exception caught, about to enter ABORTING.
    ThrowState,
    Halted,
    /// Destroyed by its owner.
    Gone,
    SupConstruct(u8),
    SupStart(u8),
    SupWaitStarted(u8),
    SupPause(u8),
    SupWaitPaused(u8),
    SupResume(u8),
    SupWaitResumed(u8),
    SupStop(u8),
    SupWaitHalted(u8),
    SupDestroy(u8),
    EnvConstruct,
    EnvStart,
    EnvLoop,
    EnvDone,
}

impl Pc {
    const PLAIN: [Pc; 16] = [
        Pc::Unborn,
        Pc::AwaitStart,
        Pc::AckStart,
        Pc::Prepare,
        Pc::Loop,
        Pc::Execute,
        Pc::Shutdown,
        Pc::Finish,
        Pc::StopEnd,
        Pc::ThrowState,
        Pc::Halted,
        Pc::Gone,
        Pc::EnvConstruct,
        Pc::EnvStart,
        Pc::EnvLoop,
        Pc::EnvDone,
    ];

    const INDEXED: [fn(u8) -> Pc; 10] = [
        Pc::SupConstruct,
        Pc::SupStart,
        Pc::SupWaitStarted,
        Pc::SupPause,
        Pc::SupWaitPaused,
        Pc::SupResume,
        Pc::SupWaitResumed,
        Pc::SupStop,
        Pc::SupWaitHalted,
        Pc::SupDestroy,
    ];

    fn indexed(self) -> Option<(u8, u8)> {
        Some(match self {
            Pc::SupConstruct(i) => (0, i),
            Pc::SupStart(i) => (1, i),
            Pc::SupWaitStarted(i) => (2, i),
            Pc::SupPause(i) => (3, i),
            Pc::SupWaitPaused(i) => (4, i),
            Pc::SupResume(i) => (5, i),
            Pc::SupWaitResumed(i) => (6, i),
            Pc::SupStop(i) => (7, i),
            Pc::SupWaitHalted(i) => (8, i),
            Pc::SupDestroy(i) => (9, i),
            _ => return None,
        })
    }

    /// One-byte encoding: plain locations are `0..16`, indexed ones
    /// `16 + 4 * kind + index`.
    pub fn to_byte(self) -> u8 {
        match self.indexed() {
            Some((kind, i)) => 16 + 4 * kind + i,
            None => Pc::PLAIN.iter().position(|p| *p == self).unwrap() as u8,
        }
    }

    pub fn from_byte(b: u8) -> Option<Pc> {
        if b < 16 {
            return Some(Pc::PLAIN[b as usize]);
        }
        let kind = (b - 16) / 4;
        let i = (b - 16) % 4;
        (kind < 10 && (i as usize) < MAX_WORKERS).then(|| Pc::INDEXED[kind as usize](i))
    }
}

impl fmt::Display for Pc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.indexed() {
            Some((_, i)) => {
                let dbg = format!("{self:?}");
                let name = dbg.split('(').next().unwrap_or_default();
                write!(f, "{name}(w{})", i + 1)
            }
            None => write!(f, "{self:?}"),
        }
    }
}

/// Per-thread slice of the global state. `state == None` is NULL.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProcessState {
    pub state: Option<ThreadState>,
    pub command: ThreadCommand,
    pub pc: Pc,
}

impl ProcessState {
    pub fn unborn() -> Self {
        ProcessState { state: None, command: ThreadCommand::Continue, pc: Pc::Unborn }
    }

    pub fn constructed() -> Self {
        ProcessState {
            state: Some(ThreadState::Ready),
            command: ThreadCommand::Continue,
            pc: Pc::AwaitStart,
        }
    }

    pub fn gone() -> Self {
        ProcessState { state: None, command: ThreadCommand::Continue, pc: Pc::Gone }
    }

    pub fn in_execute(&self) -> bool {
        self.pc == Pc::Execute
    }
}

/// Full configuration of the model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub variant: ModelVariant,
    pub env_pc: Pc,
    n: u8,
    /// Index 0 is the Supervisor, `1..=n` the workers.
    threads: [ProcessState; MAX_WORKERS + 1],
}

impl GlobalState {
    pub fn initial(workers: usize, variant: ModelVariant) -> Self {
        assert!((1..=MAX_WORKERS).contains(&workers));
        GlobalState {
            variant,
            env_pc: Pc::EnvConstruct,
            n: workers as u8,
            threads: [ProcessState::unborn(); MAX_WORKERS + 1],
        }
    }

    pub fn worker_count(&self) -> usize {
        self.n as usize
    }

    pub fn supervisor(&self) -> &ProcessState {
        &self.threads[0]
    }

    pub fn workers(&self) -> &[ProcessState] {
        &self.threads[1..=self.n as usize]
    }

    /// Thread `t`: 0 is the Supervisor, `1..=N` the workers.
    pub fn thread(&self, t: usize) -> &ProcessState {
        &self.threads[..=self.n as usize][t]
    }

    pub fn thread_mut(&mut self, t: usize) -> &mut ProcessState {
        &mut self.threads[..=self.n as usize][t]
    }

    /// Canonical encoding, one byte per field:
    /// `variant, n, env_pc, (state, command, pc) x (1 + n)`.
    /// A NULL state is encoded as 0.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.variant.to_byte(), self.n, self.env_pc.to_byte()];
        for p in &self.threads[..=self.n as usize] {
            out.push(p.state.map_or(0, ThreadState::bits));
            out.push(p.command as u8);
            out.push(p.pc.to_byte());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::Encoding(m.to_string());
        if bytes.len() < 3 {
            return Err(bad("too short"));
        }
        let (v, n, env, rest) = (bytes[0], bytes[1], bytes[2], &bytes[3..]);
        let variant = ModelVariant::from_byte(v).ok_or_else(|| bad("variant"))?;
        if n == 0 || n as usize > MAX_WORKERS {
            return Err(bad("worker count"));
        }
        if rest.len() != 3 * (n as usize + 1) {
            return Err(bad("length"));
        }
        let mut g = GlobalState::initial(n as usize, variant);
        g.env_pc = Pc::from_byte(env).ok_or_else(|| bad("env pc"))?;
        for (t, chunk) in rest.chunks(3).enumerate() {
            let state = match chunk[0] {
                0 => None,
                b => Some(ThreadState::from_bits(b).ok_or_else(|| bad("thread state"))?),
            };
            let command = ThreadCommand::from_u8(chunk[1]).ok_or_else(|| bad("command"))?;
            let pc = Pc::from_byte(chunk[2]).ok_or_else(|| bad("pc"))?;
            g.threads[t] = ProcessState { state, command, pc };
        }
        Ok(g)
    }
}

impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, p) in self.threads[..=self.n as usize].iter().enumerate() {
            let name = if t == 0 { "s".to_string() } else { format!("w{t}") };
            let st = p.state.map_or("NULL", ThreadState::name);
            write!(f, "{name}=[{st} {} {}] ", p.command, p.pc)?;
        }
        write!(f, "env={}", self.env_pc)
    }
}
