use super::{Observation, RunEnd};
use crate::checker::Verdict;
use crate::fsm::{StateMask, ThreadCommand, ThreadState};
use crate::model::{CommandStore, ModelVariant, WaitMode};
use crate::runtime::{
    Context, DummyWorker, HookError, HookResult, Hooks, Platform, Session, SessionConfig,
    StatusByte, Teardown, ThreadHandle, ThreadOptions, WorkerFactory,
};
use std::sync::{Arc, Mutex};

/// What a scenario body gets: the platform to build threads on and a place
/// to record facts for its check.
pub struct ScenarioEnv {
    platform: Arc<dyn Platform>,
    notes: Mutex<Vec<String>>,
}

impl ScenarioEnv {
    pub(crate) fn new(platform: Arc<dyn Platform>) -> Self {
        ScenarioEnv { platform, notes: Mutex::new(Vec::new()) }
    }

    pub fn platform(&self) -> Arc<dyn Platform> {
        self.platform.clone()
    }

    pub fn note(&self, note: impl Into<String>) {
        self.notes.lock().unwrap_or_else(|e| e.into_inner()).push(note.into());
    }

    pub(crate) fn take_notes(&self) -> Vec<String> {
        std::mem::take(&mut *self.notes.lock().unwrap_or_else(|e| e.into_inner()))
    }

    fn thread(&self, hooks: Box<dyn Hooks>, variant: ModelVariant, teardown: Teardown) -> ThreadHandle {
        let options = ThreadOptions { variant, teardown, callback: None };
        ThreadHandle::new("w", hooks, options, self.platform())
    }
}

/// A registered harness scenario. `body` runs as virtual thread 0; `check`
/// rejects a run with a reason.
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    /// Verdict of an exhaustive exploration at the default bound.
    pub expected: Verdict,
    pub body: fn(&ScenarioEnv),
    pub check: fn(&Observation) -> Result<(), String>,
}

/// Runs until the command changes.
struct Blocker;

impl Hooks for Blocker {
    fn execute(&mut self, ctx: &Context) -> HookResult {
        ctx.block_while_command(ThreadCommand::Continue);
        Ok(())
    }
}

/// Fails on its first execution.
struct Thrower;

impl Hooks for Thrower {
    fn execute(&mut self, _ctx: &Context) -> HookResult {
        Err(HookError::new("execute failed"))
    }
}

fn clean(obs: &Observation) -> Result<(), String> {
    match obs.end {
        RunEnd::Completed => {}
        RunEnd::Deadlock => return Err("deadlock".into()),
        RunEnd::StepLimit => return Err("step limit exceeded".into()),
    }
    match obs.violations.first() {
        Some(v) => Err(v.to_string()),
        None => Ok(()),
    }
}

fn premature_destructor(env: &ScenarioEnv, teardown: Teardown) {
    let w = env.thread(Box::new(DummyWorker::with_skip_budget(1)), ModelVariant::FIXED, teardown);
    w.start_sync().expect("main thread");
    w.stop_async();
    w.wait_for_state_mask(StateMask::HALTED).expect("non-empty mask");
    drop(w);
}

fn premature_command(env: &ScenarioEnv) {
    let w = env.thread(Box::new(Blocker), ModelVariant::FIXED, Teardown::Join);
    w.start_async();
    if !w.pause_async() {
        env.note("pause ignored");
    }
    w.wait_for_state_mask(StateMask::STARTED).expect("non-empty mask");
    w.stop_sync().expect("main thread");
}

fn premature_command_check(obs: &Observation) -> Result<(), String> {
    clean(obs)?;
    if obs.has_note("pause ignored") {
        return Err("PAUSE sent during startup was ignored".into());
    }
    Ok(())
}

fn ordinal_wait(env: &ScenarioEnv, wait_mode: WaitMode) {
    let variant = ModelVariant { command_store: CommandStore::Guarded, wait_mode };
    let w = env.thread(Box::new(Blocker), variant, Teardown::Join);
    w.start_sync().expect("main thread");
    w.pause_sync().expect("main thread");
    w.resume_sync().expect("main thread");
    w.stop_sync().expect("main thread");
}

fn revoked_abort(env: &ScenarioEnv, command_store: CommandStore) {
    let variant = ModelVariant { command_store, wait_mode: WaitMode::Mask };
    let w = env.thread(Box::new(Thrower), variant, Teardown::Join);
    w.start_sync().expect("main thread");
    if w.pause_async() {
        w.stop_async();
    }
    w.wait_for_state_mask(StateMask::HALTED).expect("non-empty mask");
}

fn dummy_factory() -> WorkerFactory {
    Arc::new(|_| Ok(Box::new(DummyWorker::with_skip_budget(1)) as Box<dyn Hooks>))
}

/// The environment thread is what ends a worker that paused itself.
fn session_with_stop(env: &ScenarioEnv) {
    let platform = env.platform();
    let s = Session::new(SessionConfig::new(vec![dummy_factory()]), platform.clone());
    let control = s.control();
    let accepted = Arc::new(Mutex::new(false));
    let flag = accepted.clone();
    let backend = platform.spawn(
        "env",
        Box::new(move || *flag.lock().unwrap_or_else(|e| e.into_inner()) = control.request_stop()),
    );
    let report = s.run();
    backend.join();
    if *accepted.lock().unwrap_or_else(|e| e.into_inner()) {
        env.note("stop accepted");
    }
    env.note(format!("status {}", report.status));
    if report.supervisor_final == Some(ThreadState::Aborted) {
        env.note("supervisor aborted");
    }
    if report.supervisor.worker_final.iter().any(|s| !StateMask::HALTED.contains(*s)) {
        env.note("worker not halted");
    }
    if report.status.contains(StatusByte::EXTERNAL_STOP) {
        env.note("bit3");
    }
}

fn session_check(obs: &Observation) -> Result<(), String> {
    clean(obs)?;
    for bad in ["supervisor aborted", "worker not halted"] {
        if obs.has_note(bad) {
            return Err(bad.into());
        }
    }
    // A queued request can find the Supervisor already stopping on its own.
    if obs.has_note("bit3") && !obs.has_note("stop accepted") {
        return Err("external stop flag without an accepted request".into());
    }
    Ok(())
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "premature-destructor-no-join",
            summary: "main drops a detached worker as soon as it looks halted",
            expected: Verdict::Fail,
            body: |env| premature_destructor(env, Teardown::Detach),
            check: clean,
        },
        Scenario {
            name: "premature-destructor-joined",
            summary: "same, but teardown joins the backend first",
            expected: Verdict::Pass,
            body: |env| premature_destructor(env, Teardown::Join),
            check: clean,
        },
        Scenario {
            name: "premature-command",
            summary: "PAUSE sent right after an asynchronous start",
            expected: Verdict::Fail,
            body: premature_command,
            check: premature_command_check,
        },
        Scenario {
            name: "ordinal-wait-buggy",
            summary: "resume waits with an ordinal state comparison",
            expected: Verdict::Fail,
            body: |env| ordinal_wait(env, WaitMode::Ordinal),
            check: clean,
        },
        Scenario {
            name: "ordinal-wait-fixed",
            summary: "resume waits for a state mask",
            expected: Verdict::Pass,
            body: |env| ordinal_wait(env, WaitMode::Mask),
            check: clean,
        },
        Scenario {
            name: "revoked-abort-buggy",
            summary: "PAUSE races a failing worker with unguarded command stores",
            expected: Verdict::Fail,
            body: |env| revoked_abort(env, CommandStore::Unguarded),
            check: clean,
        },
        Scenario {
            name: "revoked-abort-fixed",
            summary: "same race with guarded command stores",
            expected: Verdict::Pass,
            body: |env| revoked_abort(env, CommandStore::Guarded),
            check: clean,
        },
        Scenario {
            name: "session-external-stop",
            summary: "a session with one DummyWorker and an external STOP",
            expected: Verdict::Pass,
            body: session_with_stop,
            check: session_check,
        },
    ]
}

pub fn find_scenario(name: &str) -> Option<Scenario> {
    scenarios().into_iter().find(|s| s.name == name)
}
