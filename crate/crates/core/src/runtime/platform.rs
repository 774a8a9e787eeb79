//! Execution backends. Native runs on OS threads with a mutex and condition
//! variable per monitor; the schedule explorer supplies a virtual platform
//! that steps threads one at a time between yield points.

use crate::fsm::{StateMask, ThreadCommand, ThreadState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

/// Where a thread may be preempted. Kept for event logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum YieldPoint {
    StateRead,
    StateWrite,
    CommandRead,
    CommandWrite,
    Wait,
    Notify,
    Spawn,
    Join,
    Hook,
}

/// A runtime contract breach observed while running. None of these should
/// ever be recorded by the fixed runtime.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    IllegalTransition { thread: String, from: ThreadState, to: ThreadState },
    RevokedAbort { thread: String, by: ThreadCommand },
    PrematureWake { thread: String, state: ThreadState, expected: StateMask },
    UseAfterTeardown { thread: String },
    CallbackFailed { thread: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IllegalTransition { thread, from, to } => {
                write!(f, "{thread}: illegal transition {from} -> {to}")
            }
            Violation::RevokedAbort { thread, by } => {
                write!(f, "{thread}: ABORT overwritten by {by}")
            }
            Violation::PrematureWake { thread, state, expected } => {
                write!(f, "{thread}: wait returned in {state}, expected mask {:#04x}", expected.0)
            }
            Violation::UseAfterTeardown { thread } => {
                write!(f, "{thread}: backend touched the handle after teardown")
            }
            Violation::CallbackFailed { thread } => {
                write!(f, "{thread}: transition callback panicked")
            }
        }
    }
}

/// Panic payload used by the virtual platform to unwind threads of a run
/// that was cut short. Hook wrappers must not swallow it.
#[derive(Debug)]
pub struct RunAborted;

/// A condition variable together with the critical section it protects.
pub struct Monitor {
    id: u64,
    lock: Mutex<()>,
    cv: Condvar,
}

static NEXT_MONITOR: AtomicU64 = AtomicU64::new(1);

impl Monitor {
    pub fn new() -> Self {
        Monitor { id: NEXT_MONITOR.fetch_add(1, Ordering::Relaxed), lock: Mutex::new(()), cv: Condvar::new() }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Enters the critical section. Callers never yield while holding it.
    pub fn enter(&self) -> MutexGuard<'_, ()> {
        self.lock.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Default for Monitor {
    fn default() -> Self {
        Monitor::new()
    }
}

/// A spawned backend that can be joined once.
pub trait Joinable: Send {
    fn join(self: Box<Self>);
}

pub trait Platform: Send + Sync + 'static {
    fn spawn(&self, name: &str, body: Box<dyn FnOnce() + Send>) -> Box<dyn Joinable>;
    fn yield_now(&self, point: YieldPoint);
    /// Blocks until `pred` holds. `pred` is evaluated inside the monitor's
    /// critical section and must not yield.
    fn wait_until(&self, monitor: &Monitor, pred: &mut dyn FnMut() -> bool);
    fn notify_all(&self, monitor: &Monitor);
    /// A value in `0..n`, picked by the platform.
    fn choose(&self, n: usize) -> usize;
    fn report(&self, violation: Violation);
    fn violations(&self) -> Vec<Violation>;
    /// Records an event in the platform's log, if it keeps one.
    fn trace(&self, _event: &str) {}
}

/// OS threads, real blocking, and a seeded generator for hook choices.
pub struct NativePlatform {
    rng: Mutex<StdRng>,
    violations: Mutex<Vec<Violation>>,
    live: Arc<AtomicUsize>,
}

impl NativePlatform {
    pub fn new(seed: u64) -> Self {
        NativePlatform {
            rng: Mutex::new(StdRng::seed_from_u64(seed)),
            violations: Mutex::new(Vec::new()),
            live: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// Backends whose body has not returned yet.
    pub fn live_backends(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }
}

struct LiveGuard(Arc<AtomicUsize>);

impl Drop for LiveGuard {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

struct NativeBackend(JoinHandle<()>);

impl Joinable for NativeBackend {
    fn join(self: Box<Self>) {
        let _ = self.0.join();
    }
}

impl Platform for NativePlatform {
    fn spawn(&self, name: &str, body: Box<dyn FnOnce() + Send>) -> Box<dyn Joinable> {
        self.live.fetch_add(1, Ordering::SeqCst);
        let guard = LiveGuard(self.live.clone());
        let handle = std::thread::Builder::new()
            .name(name.to_string())
            .spawn(move || {
                let _guard = guard;
                body();
            })
            .expect("spawn backend thread");
        Box::new(NativeBackend(handle))
    }

    fn yield_now(&self, _: YieldPoint) {}

    fn wait_until(&self, monitor: &Monitor, pred: &mut dyn FnMut() -> bool) {
        let mut guard = monitor.enter();
        while !pred() {
            guard = monitor.cv.wait(guard).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn notify_all(&self, monitor: &Monitor) {
        let _guard = monitor.enter();
        monitor.cv.notify_all();
    }

    fn choose(&self, n: usize) -> usize {
        if n <= 1 {
            return 0;
        }
        self.rng.lock().unwrap_or_else(|e| e.into_inner()).gen_range(0..n)
    }

    fn report(&self, violation: Violation) {
        log::error!("{violation}");
        self.violations.lock().unwrap_or_else(|e| e.into_inner()).push(violation);
    }

    fn violations(&self) -> Vec<Violation> {
        self.violations.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}
