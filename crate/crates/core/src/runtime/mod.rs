//! Supervised threads for real concurrent execution.
//!
//! Every state and command change happens inside the thread's critical
//! section, user-defined hooks run outside it, and every state change
//! notifies all waiters. The same code runs on OS threads
//! ([`NativePlatform`]) or under the schedule explorer, which supplies its
//! own [`Platform`].
//!
//! Log output goes through the `log` facade and is discarded unless the
//! binary installs a logger.

mod config;
mod dummy;
mod platform;
mod session;
mod supervisor;
mod thread;

pub use config::{ConfigError, Settings};
pub use dummy::DummyWorker;
pub use platform::{
    Joinable, Monitor, NativePlatform, Platform, RunAborted, Violation, YieldPoint,
};
pub use session::{run_session, Session, SessionConfig, SessionControl, SessionReport, StatusByte};
pub use supervisor::{SupervisorReport, WorkerFactory};
pub use thread::{
    Context, HookError, HookResult, Hooks, Teardown, ThreadHandle, ThreadOptions,
    TransitionCallback, TriggerError,
};

#[cfg(test)]
mod tests;
