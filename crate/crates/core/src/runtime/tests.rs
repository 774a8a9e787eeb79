use super::*;
use crate::fsm::{legal_transition, StateMask, ThreadCommand, ThreadState};
use crate::model::ModelVariant;
use std::sync::{mpsc, Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Skip,
    Stop,
    Throw,
    /// Wait until the command changes.
    Block,
}

struct Scripted {
    prepare: Step,
    execute: Step,
    finish: Step,
}

impl Scripted {
    fn new(prepare: Step, execute: Step, finish: Step) -> Box<Self> {
        Box::new(Scripted { prepare, execute, finish })
    }
}

fn act(step: Step, ctx: &Context) -> HookResult {
    match step {
        Step::Skip => {}
        Step::Stop => {
            ctx.stop_async();
        }
        Step::Throw => return Err(HookError::new("scripted failure")),
        Step::Block => ctx.block_while_command(ThreadCommand::Continue),
    }
    Ok(())
}

impl Hooks for Scripted {
    fn prepare(&mut self, ctx: &Context) -> HookResult {
        act(self.prepare, ctx)
    }
    fn execute(&mut self, ctx: &Context) -> HookResult {
        act(self.execute, ctx)
    }
    fn finish(&mut self, ctx: &Context) -> HookResult {
        act(self.finish, ctx)
    }
}

fn native() -> Arc<NativePlatform> {
    Arc::new(NativePlatform::new(7))
}

fn handle(platform: &Arc<NativePlatform>, hooks: Box<dyn Hooks>) -> ThreadHandle {
    ThreadHandle::new("w1", hooks, ThreadOptions::default(), platform.clone())
}

fn assert_legal(history: &[ThreadState]) {
    for w in history.windows(2) {
        assert!(legal_transition(w[0], w[1]), "{history:?}");
    }
}

#[test]
fn started_thread_leaves_startup() {
    let p = native();
    let t = handle(&p, Scripted::new(Step::Skip, Step::Block, Step::Skip));
    assert_eq!(t.state(), ThreadState::Ready);
    assert!(t.start_async());
    assert!(!t.start_async(), "second START is rejected");
    t.wait_for_state_mask(StateMask::STARTED).unwrap();
    assert!(StateMask::STARTED.contains(t.state()));
    assert_eq!(t.stop_sync(), Ok(true));
    assert_eq!(t.state(), ThreadState::Stopped);
    assert_eq!(
        t.history(),
        [ThreadState::Ready, ThreadState::Starting, ThreadState::Running, ThreadState::Stopping, ThreadState::Stopped]
    );
    drop(t);
    assert_eq!(p.live_backends(), 0);
    assert!(p.violations().is_empty());
}

#[test]
fn failing_prepare_aborts() {
    let p = native();
    let t = handle(&p, Scripted::new(Step::Throw, Step::Skip, Step::Skip));
    t.start_sync().unwrap();
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    assert_eq!(t.state(), ThreadState::Aborted);
    assert_eq!(t.hook_failures(), 1);
    assert_eq!(
        t.history(),
        [ThreadState::Ready, ThreadState::Starting, ThreadState::Aborting, ThreadState::Aborted]
    );
    assert!(p.violations().is_empty());
}

#[test]
fn panicking_hook_counts_as_failure() {
    struct Panics;
    impl Hooks for Panics {
        fn execute(&mut self, _: &Context) -> HookResult {
            std::panic::resume_unwind(Box::new("boom"))
        }
    }
    let p = native();
    let t = handle(&p, Box::new(Panics));
    t.start_async();
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    assert_eq!(t.state(), ThreadState::Aborted);
    assert_eq!(t.hook_failures(), 1);
}

#[test]
fn pause_and_resume_synchronously() {
    let p = native();
    let t = handle(&p, Scripted::new(Step::Skip, Step::Block, Step::Skip));
    t.start_sync().unwrap();
    assert_eq!(t.pause_sync(), Ok(true));
    assert_eq!(t.state(), ThreadState::Paused);
    assert_eq!(t.resume_sync(), Ok(true));
    assert!(StateMask::RESUME.contains(t.state()));
    assert_eq!(t.resume_sync(), Ok(false), "CONTINUE needs a pending PAUSE");
    t.stop_sync().unwrap();
    assert_legal(&t.history());
    assert!(t.history().contains(&ThreadState::Paused));
}

#[test]
fn abort_cannot_be_revoked() {
    let p = native();
    let t = handle(&p, Scripted::new(Step::Skip, Step::Block, Step::Skip));
    t.start_sync().unwrap();
    assert_eq!(t.trigger(ThreadCommand::Abort, false), Ok(true));
    assert!(!t.pause_async());
    assert!(!t.stop_async());
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    assert_eq!(t.state(), ThreadState::Aborted);
    assert!(!t.history().contains(&ThreadState::Paused));
    assert!(p.violations().is_empty());
}

#[test]
fn unguarded_store_reports_revocation() {
    let p = native();
    let options = ThreadOptions { variant: ModelVariant::BUGGY_SET_COMMAND, ..Default::default() };
    let t = ThreadHandle::new("w1", Scripted::new(Step::Skip, Step::Block, Step::Skip), options, p.clone());
    t.start_sync().unwrap();
    t.pause_sync().unwrap();
    // ABORT is accepted in any state by the unguarded store, then revoked
    t.trigger(ThreadCommand::Abort, false).unwrap();
    t.resume_async();
    t.stop_sync().unwrap();
    drop(t);
    assert!(p
        .violations()
        .iter()
        .any(|v| matches!(v, Violation::RevokedAbort { by: ThreadCommand::Continue, .. })));
}

#[test]
fn usage_errors() {
    let p = native();
    let slot: Arc<OnceLock<Arc<ThreadHandle>>> = Arc::new(OnceLock::new());
    let (tx, rx) = mpsc::channel();
    struct SelfTrigger {
        slot: Arc<OnceLock<Arc<ThreadHandle>>>,
        tx: mpsc::Sender<Result<bool, TriggerError>>,
    }
    impl Hooks for SelfTrigger {
        fn execute(&mut self, ctx: &Context) -> HookResult {
            let me = self.slot.get().unwrap();
            let _ = self.tx.send(me.stop_sync());
            let _ = self.tx.send(me.trigger(ThreadCommand::Stop, false));
            ctx.block_while_command(ThreadCommand::Continue);
            Ok(())
        }
    }
    let t = Arc::new(handle(&p, Box::new(SelfTrigger { slot: slot.clone(), tx })));
    slot.set(t.clone()).ok().unwrap();
    t.start_async();
    assert_eq!(rx.recv().unwrap(), Err(TriggerError::SynchronousSelfTrigger));
    assert_eq!(rx.recv().unwrap(), Ok(true));
    assert_eq!(t.wait_for_state_mask(StateMask::EMPTY), Err(TriggerError::EmptyMask));
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    assert_eq!(t.state(), ThreadState::Stopped);
}

#[test]
fn callback_sees_every_transition_and_panics_are_reported() {
    let p = native();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let options = ThreadOptions {
        callback: Some(Arc::new(move |s| log.lock().unwrap().push(s))),
        ..Default::default()
    };
    let t = ThreadHandle::new("w1", Scripted::new(Step::Skip, Step::Stop, Step::Skip), options, p.clone());
    t.start_async();
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    t.join();
    assert_eq!(*seen.lock().unwrap(), t.history()[1..]);

    let options = ThreadOptions {
        callback: Some(Arc::new(|_| std::panic::resume_unwind(Box::new("callback")))),
        ..Default::default()
    };
    let t = ThreadHandle::new("w2", Scripted::new(Step::Stop, Step::Skip, Step::Skip), options, p.clone());
    t.start_async();
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
    assert!(p.violations().contains(&Violation::CallbackFailed { thread: "w2".into() }));
}

#[test]
fn premature_command_is_ignored() {
    let p = native();
    let t = handle(&p, Scripted::new(Step::Skip, Step::Block, Step::Skip));
    // READY with START pending: nothing but ABORT gets through
    assert!(t.start_async());
    let stop = t.stop_async();
    t.wait_for_state_mask(StateMask::STARTED).unwrap();
    if !stop {
        assert_eq!(t.state(), ThreadState::Running);
        t.stop_sync().unwrap();
    }
    t.wait_for_state_mask(StateMask::HALTED).unwrap();
}

fn factory(make: impl Fn() -> Box<dyn Hooks> + Send + Sync + 'static) -> WorkerFactory {
    Arc::new(move |_| Ok(make()))
}

#[test]
fn clean_session_is_zero() {
    let p = native();
    let config = SessionConfig::new(vec![
        factory(|| Scripted::new(Step::Skip, Step::Stop, Step::Skip)),
        factory(|| Scripted::new(Step::Skip, Step::Stop, Step::Skip)),
    ]);
    let report = Session::new(config, p.clone()).run();
    assert_eq!(report.status, StatusByte(0));
    assert_eq!(report.supervisor_final, Some(ThreadState::Stopped));
    assert_eq!(report.supervisor.worker_final, [ThreadState::Stopped; 2]);
    assert!(report.supervisor.propagated_stop);
    assert_eq!(p.live_backends(), 0);
}

#[test]
fn aborting_worker_sets_bit0() {
    let config = SessionConfig::new(vec![
        factory(|| Scripted::new(Step::Skip, Step::Throw, Step::Skip)),
        factory(|| Scripted::new(Step::Skip, Step::Block, Step::Skip)),
    ]);
    let p = native();
    let report = Session::new(config, p.clone()).run();
    assert!(report.status.contains(StatusByte::WORKER_ABORTED));
    assert!(report.status.contains(StatusByte::HOOK_EXCEPTION));
    assert!(!report.status.contains(StatusByte::SUPERVISOR_FAILURE));
    assert_eq!(report.supervisor.worker_final, [ThreadState::Aborted, ThreadState::Stopped]);
    assert_eq!(p.live_backends(), 0);
}

#[test]
fn external_stop_sets_bit3() {
    let config = SessionConfig::new(vec![
        factory(|| Scripted::new(Step::Skip, Step::Block, Step::Skip)),
        factory(|| Scripted::new(Step::Skip, Step::Block, Step::Skip)),
    ]);
    let session = Session::new(config, native());
    let control = session.control();
    assert!(control.request_stop(), "queued until startup ends");
    let report = session.run();
    assert_eq!(report.status, StatusByte(StatusByte::EXTERNAL_STOP));
    assert_eq!(report.supervisor.worker_final, [ThreadState::Stopped; 2]);
    assert!(!control.request_stop(), "session is over");
}

#[test]
fn pause_resume_propagates() {
    let config = SessionConfig::new(vec![factory(|| Scripted::new(Step::Skip, Step::Block, Step::Skip))]);
    let session = Session::new(config, native());
    let control = session.control();
    let runner = std::thread::spawn(move || session.run());
    while !control.request_pause() {
        std::thread::yield_now();
    }
    while !control.request_resume() {
        std::thread::yield_now();
    }
    assert!(control.request_stop());
    let report = runner.join().unwrap();
    assert_eq!(report.status, StatusByte(StatusByte::EXTERNAL_STOP));
}

#[test]
fn startup_and_config_failures() {
    let config = SessionConfig::new(vec![
        factory(|| Scripted::new(Step::Skip, Step::Block, Step::Skip)),
        Arc::new(|_| Err("no such device".to_string())),
    ]);
    let report = Session::new(config, native()).run();
    assert_eq!(report.status, StatusByte(StatusByte::STARTUP_FAILURE));
    assert_eq!(report.supervisor.workers_constructed, 0);

    assert_eq!(run_session(SessionConfig::new(Vec::new()), 0), StatusByte(StatusByte::CONFIG_ERROR));
}

#[test]
fn status_byte_formats_as_hex() {
    assert_eq!(StatusByte(0).to_string(), "0x00");
    assert_eq!(StatusByte(StatusByte::WORKER_ABORTED | StatusByte::HOOK_EXCEPTION).to_string(), "0x11");
    assert!(StatusByte(0x19).contains(StatusByte::EXTERNAL_STOP));
}

#[test]
fn settings_file() {
    let s = Settings::parse("# demo\nworkers = 3\nseed=9\nvariant = buggy-set-command # old\nteardown = detach\n")
        .unwrap();
    assert_eq!(s.workers, 3);
    assert_eq!(s.seed, 9);
    assert_eq!(s.variant, ModelVariant::BUGGY_SET_COMMAND);
    assert_eq!(s.teardown, Teardown::Detach);
    assert_eq!(Settings::parse("").unwrap(), Settings::default());
    assert!(matches!(Settings::parse("workers = 0"), Err(ConfigError::Line { line: 1, .. })));
    assert!(matches!(Settings::parse("\ncolour = red"), Err(ConfigError::Line { line: 2, .. })));
    assert!(matches!(Settings::parse("workers"), Err(ConfigError::Line { .. })));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.conf");
    std::fs::write(&path, "workers = 1\n").unwrap();
    assert_eq!(Settings::load(&path).unwrap().workers, 1);
    assert!(matches!(Settings::load(&dir.path().join("missing")), Err(ConfigError::Io(_))));
}

#[test]
fn random_dummy_sessions_end_cleanly() {
    for seed in 0..200u64 {
        let p = Arc::new(NativePlatform::new(seed));
        let config = SessionConfig::new(vec![
            factory(|| Box::new(DummyWorker::new())),
            factory(|| Box::new(DummyWorker::new())),
        ]);
        let session = Session::new(config, p.clone());
        let control = session.control();
        let env = std::thread::spawn(move || control.request_stop());
        let report = session.run();
        env.join().unwrap();
        assert_eq!(p.live_backends(), 0);
        assert_eq!(report.supervisor_final, Some(ThreadState::Stopped), "seed {seed}");
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        let aborted = report.supervisor.worker_final.contains(&ThreadState::Aborted);
        assert_eq!(report.status.contains(StatusByte::WORKER_ABORTED), aborted);
        assert_eq!(report.status.contains(StatusByte::EXTERNAL_STOP), report.external_stop);
    }
}
