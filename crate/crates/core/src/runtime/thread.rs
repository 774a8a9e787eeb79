use super::platform::{Joinable, Monitor, Platform, RunAborted, Violation, YieldPoint};
use crate::fsm::{legal_transition, try_set_command, StateMask, ThreadCommand, ThreadState};
use crate::model::{CommandStore, ModelVariant, WaitMode, WaitTarget};
use std::any::Any;
use std::cell::Cell;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU8, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, Weak};

pub type HookResult = Result<(), HookError>;

/// Failure raised by user-defined code.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct HookError(pub String);

impl HookError {
    pub fn new(message: impl Into<String>) -> Self {
        HookError(message.into())
    }
}

/// User-defined code run by a thread's backend. `prepare` runs in STARTING,
/// `execute` repeatedly in RUNNING and `finish` in STOPPING; an error from
/// any of them aborts the thread.
///
/// The remaining methods are extension points used by the Supervisor.
pub trait Hooks: Send + 'static {
    fn prepare(&mut self, _ctx: &Context) -> HookResult {
        Ok(())
    }
    fn execute(&mut self, ctx: &Context) -> HookResult;
    fn finish(&mut self, _ctx: &Context) -> HookResult {
        Ok(())
    }
    fn on_paused(&mut self, _ctx: &Context) {}
    fn on_resumed(&mut self, _ctx: &Context) {}
    /// Called at the top of every main-loop iteration.
    fn poll(&mut self, _ctx: &Context) {}
    /// Extra wake-up condition while paused. Evaluated inside the critical
    /// section; must not yield or block.
    fn wants_attention(&self) -> bool {
        false
    }
}

/// Called with the target state on every transition. Must not panic.
pub type TransitionCallback = Arc<dyn Fn(ThreadState) + Send + Sync>;

/// What dropping a [`ThreadHandle`] does with a still-running backend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Teardown {
    /// Join the backend first, then dispose.
    #[default]
    Join,
    /// Dispose immediately and leave the backend running.
    Detach,
}

#[derive(Clone, Default)]
pub struct ThreadOptions {
    pub variant: ModelVariant,
    pub teardown: Teardown,
    pub callback: Option<TransitionCallback>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TriggerError {
    #[error("a thread must trigger itself asynchronously")]
    SynchronousSelfTrigger,
    #[error("waiting on an empty state mask would block forever")]
    EmptyMask,
}

static NEXT_THREAD: AtomicUsize = AtomicUsize::new(1);

thread_local! {
    static CURRENT: Cell<usize> = const { Cell::new(0) };
}

pub(crate) struct Core {
    id: usize,
    name: String,
    platform: Arc<dyn Platform>,
    variant: ModelVariant,
    state: AtomicU8,
    command: AtomicU8,
    monitor: Monitor,
    disposed: AtomicBool,
    reported: AtomicBool,
    history: Mutex<Vec<ThreadState>>,
    hook_failures: AtomicUsize,
    callback: Option<TransitionCallback>,
    observer: Mutex<Option<Weak<Core>>>,
}

impl Core {
    fn touch(&self) {
        if self.disposed.load(Ordering::SeqCst) && !self.reported.swap(true, Ordering::SeqCst) {
            self.platform.report(Violation::UseAfterTeardown { thread: self.name.clone() });
        }
    }

    pub(crate) fn raw_state(&self) -> ThreadState {
        ThreadState::from_bits(self.state.load(Ordering::Acquire)).expect("valid state bits")
    }

    pub(crate) fn raw_command(&self) -> ThreadCommand {
        ThreadCommand::from_u8(self.command.load(Ordering::Acquire)).expect("valid command")
    }

    fn state(&self) -> ThreadState {
        self.touch();
        self.platform.yield_now(YieldPoint::StateRead);
        self.raw_state()
    }

    fn command(&self) -> ThreadCommand {
        self.touch();
        self.platform.yield_now(YieldPoint::CommandRead);
        self.raw_command()
    }

    fn set_state(&self, to: ThreadState) {
        self.touch();
        self.platform.yield_now(YieldPoint::StateWrite);
        {
            let _cs = self.monitor.enter();
            let from = self.raw_state();
            if !legal_transition(from, to) {
                self.platform.report(Violation::IllegalTransition {
                    thread: self.name.clone(),
                    from,
                    to,
                });
            }
            self.state.store(to.bits(), Ordering::Release);
            self.history.lock().unwrap_or_else(|e| e.into_inner()).push(to);
        }
        if let Some(cb) = &self.callback {
            if let Err(payload) = catch_unwind(AssertUnwindSafe(|| cb(to))) {
                if payload.is::<RunAborted>() {
                    resume_unwind(payload);
                }
                self.platform.report(Violation::CallbackFailed { thread: self.name.clone() });
            }
        }
        self.notify();
    }

    fn notify(&self) {
        self.platform.yield_now(YieldPoint::Notify);
        self.touch();
        self.platform.notify_all(&self.monitor);
        let observer = self.observer.lock().unwrap_or_else(|e| e.into_inner()).clone();
        if let Some(o) = observer.and_then(|w| w.upgrade()) {
            self.platform.notify_all(&o.monitor);
        }
    }

    /// Submits `requested` through the variant's command store. Returns
    /// whether the command cell changed hands to `requested`.
    pub(crate) fn store_command(&self, requested: ThreadCommand) -> bool {
        self.store_command_with(requested, &|| {})
    }

    /// As [`Core::store_command`], running `on_accept` inside the critical
    /// section right after an accepted store.
    pub(crate) fn store_command_with(&self, requested: ThreadCommand, on_accept: &dyn Fn()) -> bool {
        self.touch();
        self.platform.yield_now(YieldPoint::CommandWrite);
        let accepted = {
            let _cs = self.monitor.enter();
            let current = self.raw_command();
            let accepted = match self.variant.command_store {
                CommandStore::Guarded => {
                    try_set_command(self.raw_state(), current, requested).accepted
                }
                CommandStore::Unguarded => true,
            };
            if accepted {
                if current == ThreadCommand::Abort && requested != ThreadCommand::Abort {
                    self.platform.report(Violation::RevokedAbort {
                        thread: self.name.clone(),
                        by: requested,
                    });
                }
                self.command.store(requested as u8, Ordering::Release);
                on_accept();
            }
            accepted
        };
        if accepted {
            self.notify();
        }
        accepted
    }

    /// The started thread acknowledges START itself; this is not a trigger.
    fn ack_start(&self) {
        self.touch();
        self.platform.yield_now(YieldPoint::CommandWrite);
        let _cs = self.monitor.enter();
        if self.raw_command() == ThreadCommand::Start {
            self.command.store(ThreadCommand::Continue as u8, Ordering::Release);
        }
    }

    fn block(&self, pred: &mut dyn FnMut() -> bool) {
        self.touch();
        self.platform.yield_now(YieldPoint::Wait);
        self.platform.wait_until(&self.monitor, pred);
    }

    /// Waits until `done` holds and checks, at the instant it held, that the
    /// state was in `expected`.
    fn wait_state(&self, expected: StateMask, done: &dyn Fn(ThreadState) -> bool) {
        let mut seen = self.raw_state();
        self.block(&mut || {
            seen = self.raw_state();
            done(seen)
        });
        if !expected.contains(seen) {
            self.platform.report(Violation::PrematureWake {
                thread: self.name.clone(),
                state: seen,
                expected,
            });
        }
    }

    pub(crate) fn wait_for(&self, target: WaitTarget) {
        let mask = target.mask();
        match self.variant.wait_mode {
            WaitMode::Mask => self.wait_state(mask, &|s| mask.contains(s)),
            WaitMode::Ordinal => {
                let floor = target.ordinal_target().ordinal();
                self.wait_state(mask, &|s| s.ordinal() >= floor)
            }
        }
    }

    fn handle_exception(&self, error: &HookError) {
        self.hook_failures.fetch_add(1, Ordering::SeqCst);
        log::error!("{}: {error}", self.name);
        self.store_command(ThreadCommand::Abort);
        self.set_state(ThreadState::Aborting);
    }

    pub(crate) fn set_observer(&self, observer: &Arc<Core>) {
        *self.observer.lock().unwrap_or_else(|e| e.into_inner()) = Some(Arc::downgrade(observer));
    }
}

fn panic_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic in user-defined code".to_string()
    }
}

fn call_hook(f: impl FnOnce() -> HookResult) -> HookResult {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(payload) if payload.is::<RunAborted>() => resume_unwind(payload),
        Err(payload) => Err(HookError(panic_message(payload.as_ref()))),
    }
}

fn run(core: Arc<Core>, mut hooks: Box<dyn Hooks>) {
    use ThreadCommand as C;
    use ThreadState as S;
    CURRENT.with(|c| c.set(core.id));
    let ctx = Context { core: core.clone() };
    core.set_state(S::Starting);
    core.ack_start();
    if let Err(e) = call_hook(|| hooks.prepare(&ctx)) {
        core.handle_exception(&e);
    }
    'outer: loop {
        loop {
            hooks.poll(&ctx);
            match core.command() {
                C::Continue => {
                    let s = core.state();
                    if s != S::Running {
                        core.set_state(S::Running);
                        if s == S::Paused {
                            hooks.on_resumed(&ctx);
                        }
                    } else if let Err(e) = call_hook(|| hooks.execute(&ctx)) {
                        core.handle_exception(&e);
                    }
                }
                C::Pause => {
                    if core.state() != S::Paused {
                        core.set_state(S::Paused);
                        hooks.on_paused(&ctx);
                    } else {
                        let h = &hooks;
                        core.block(&mut || core.raw_command() != C::Pause || h.wants_attention());
                    }
                }
                C::Start => core.block(&mut || core.raw_command() != C::Start),
                C::Stop | C::Abort => break,
            }
        }
        loop {
            match core.command() {
                C::Stop => {
                    core.set_state(S::Stopping);
                    match call_hook(|| hooks.finish(&ctx)) {
                        Ok(()) => {
                            core.set_state(S::Stopped);
                            break 'outer;
                        }
                        Err(e) => core.handle_exception(&e),
                    }
                }
                C::Abort => {
                    if core.state() == S::Aborting {
                        core.set_state(S::Aborted);
                        break 'outer;
                    }
                    core.set_state(S::Aborting);
                }
                _ => continue 'outer,
            }
        }
    }
    drop(hooks);
    CURRENT.with(|c| c.set(0));
}

/// What user-defined code sees of its own thread. Only asynchronous
/// triggers are offered: a thread waiting for itself would deadlock.
pub struct Context {
    core: Arc<Core>,
}

impl Context {
    pub fn name(&self) -> &str {
        &self.core.name
    }

    pub fn state(&self) -> ThreadState {
        self.core.state()
    }

    pub fn command(&self) -> ThreadCommand {
        self.core.command()
    }

    pub fn pause_async(&self) -> bool {
        self.core.store_command(ThreadCommand::Pause)
    }

    pub fn stop_async(&self) -> bool {
        self.core.store_command(ThreadCommand::Stop)
    }

    /// A value in `0..n`; the schedule explorer enumerates all of them.
    pub fn choose(&self, n: usize) -> usize {
        self.core.platform.yield_now(YieldPoint::Hook);
        self.core.platform.choose(n)
    }

    /// Blocks until the thread's command differs from `command`.
    pub fn block_while_command(&self, command: ThreadCommand) {
        self.core.block(&mut || self.core.raw_command() != command);
    }

    /// Blocks while the command is CONTINUE and `wake` does not hold.
    /// `wake` must not yield or block.
    pub fn block_unless(&self, wake: &dyn Fn() -> bool) {
        self.core.block(&mut || self.core.raw_command() != ThreadCommand::Continue || wake());
    }

    pub fn platform(&self) -> &Arc<dyn Platform> {
        &self.core.platform
    }

    pub(crate) fn core(&self) -> &Arc<Core> {
        &self.core
    }
}

/// Owner's handle on a supervised thread. Dropping it tears the thread
/// down according to its [`Teardown`].
pub struct ThreadHandle {
    core: Arc<Core>,
    hooks: Mutex<Option<Box<dyn Hooks>>>,
    backend: Mutex<Option<Box<dyn Joinable>>>,
    teardown: Teardown,
}

fn target_of(c: ThreadCommand) -> WaitTarget {
    match c {
        ThreadCommand::Start => WaitTarget::Started,
        ThreadCommand::Pause => WaitTarget::Paused,
        ThreadCommand::Continue => WaitTarget::Resumed,
        ThreadCommand::Stop | ThreadCommand::Abort => WaitTarget::Halted,
    }
}

impl ThreadHandle {
    pub fn new(
        name: impl Into<String>,
        hooks: Box<dyn Hooks>,
        options: ThreadOptions,
        platform: Arc<dyn Platform>,
    ) -> Self {
        let core = Arc::new(Core {
            id: NEXT_THREAD.fetch_add(1, Ordering::Relaxed),
            name: name.into(),
            platform,
            variant: options.variant,
            state: AtomicU8::new(ThreadState::Ready.bits()),
            command: AtomicU8::new(ThreadCommand::Continue as u8),
            monitor: Monitor::new(),
            disposed: AtomicBool::new(false),
            reported: AtomicBool::new(false),
            history: Mutex::new(vec![ThreadState::Ready]),
            hook_failures: AtomicUsize::new(0),
            callback: options.callback,
            observer: Mutex::new(None),
        });
        ThreadHandle {
            core,
            hooks: Mutex::new(Some(hooks)),
            backend: Mutex::new(None),
            teardown: options.teardown,
        }
    }

    pub fn name(&self) -> &str {
        &self.core.name
    }

    pub fn state(&self) -> ThreadState {
        self.core.state()
    }

    pub fn command(&self) -> ThreadCommand {
        self.core.command()
    }

    /// Every state the thread has published, starting with READY.
    pub fn history(&self) -> Vec<ThreadState> {
        self.core.history.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn hook_failures(&self) -> usize {
        self.core.hook_failures.load(Ordering::SeqCst)
    }

    fn is_self(&self) -> bool {
        CURRENT.with(|c| c.get()) == self.core.id
    }

    /// Sends START and spawns the backend. Has no effect unless the guard
    /// accepts START.
    pub fn start_async(&self) -> bool {
        if !self.core.store_command(ThreadCommand::Start) {
            return false;
        }
        let hooks = self.hooks.lock().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(hooks) = hooks {
            let core = self.core.clone();
            let backend = self.core.platform.spawn(&self.core.name, Box::new(move || run(core, hooks)));
            *self.backend.lock().unwrap_or_else(|e| e.into_inner()) = Some(backend);
            self.core.platform.yield_now(YieldPoint::Spawn);
        }
        true
    }

    /// Submits `command`; the synchronous form then blocks until the state
    /// the command leads to is reached. Rejected commands never block.
    pub fn trigger(&self, command: ThreadCommand, synchronous: bool) -> Result<bool, TriggerError> {
        if synchronous && self.is_self() {
            return Err(TriggerError::SynchronousSelfTrigger);
        }
        let accepted = match command {
            ThreadCommand::Start => self.start_async(),
            c => self.core.store_command(c),
        };
        if synchronous && accepted {
            self.core.wait_for(target_of(command));
        }
        Ok(accepted)
    }

    pub fn start_sync(&self) -> Result<bool, TriggerError> {
        self.trigger(ThreadCommand::Start, true)
    }

    pub fn pause_async(&self) -> bool {
        self.core.store_command(ThreadCommand::Pause)
    }

    pub fn pause_sync(&self) -> Result<bool, TriggerError> {
        self.trigger(ThreadCommand::Pause, true)
    }

    pub fn resume_async(&self) -> bool {
        self.core.store_command(ThreadCommand::Continue)
    }

    pub fn resume_sync(&self) -> Result<bool, TriggerError> {
        self.trigger(ThreadCommand::Continue, true)
    }

    pub fn stop_async(&self) -> bool {
        self.core.store_command(ThreadCommand::Stop)
    }

    pub fn stop_sync(&self) -> Result<bool, TriggerError> {
        self.trigger(ThreadCommand::Stop, true)
    }

    /// Blocks until the state is in `mask`.
    pub fn wait_for_state_mask(&self, mask: StateMask) -> Result<(), TriggerError> {
        if mask.is_empty() {
            return Err(TriggerError::EmptyMask);
        }
        self.core.wait_state(mask, &|s| mask.contains(s));
        Ok(())
    }

    /// Waits as the configured variant does: by mask, or by the old ordinal
    /// comparison.
    pub fn wait_for(&self, target: WaitTarget) {
        self.core.wait_for(target);
    }

    /// Joins the backend if one was started. Idempotent.
    pub fn join(&self) {
        let backend = self.backend.lock().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(b) = backend {
            self.core.platform.yield_now(YieldPoint::Join);
            b.join();
        }
    }

    pub(crate) fn core(&self) -> &Arc<Core> {
        &self.core
    }
}

impl Drop for ThreadHandle {
    fn drop(&mut self) {
        if self.teardown == Teardown::Join {
            self.join();
        }
        self.core.platform.trace(&format!("dispose {}", self.core.name));
        self.core.disposed.store(true, Ordering::SeqCst);
    }
}
