use super::platform::{NativePlatform, Platform, Violation};
use super::supervisor::{Supervisor, SupervisorReport, WorkerFactory};
use super::thread::{Core, Teardown, ThreadHandle, ThreadOptions};
use crate::fsm::{StateMask, ThreadCommand, ThreadState};
use crate::model::ModelVariant;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

/// Outcome of a session as eight flags; zero is a fully clean run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StatusByte(pub u8);

impl StatusByte {
    pub const WORKER_ABORTED: u8 = 1 << 0;
    pub const SUPERVISOR_FAILURE: u8 = 1 << 1;
    pub const CONFIG_ERROR: u8 = 1 << 2;
    pub const EXTERNAL_STOP: u8 = 1 << 3;
    pub const HOOK_EXCEPTION: u8 = 1 << 4;
    pub const STARTUP_FAILURE: u8 = 1 << 5;
    pub const INTERNAL_ERROR: u8 = 1 << 6;
    pub const RESERVED: u8 = 1 << 7;

    pub fn contains(self, flag: u8) -> bool {
        self.0 & flag == flag
    }

    pub fn is_clean(self) -> bool {
        self.0 == 0
    }

    fn set(&mut self, flag: u8, on: bool) {
        if on {
            self.0 |= flag;
        }
    }
}

impl fmt::Display for StatusByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02X}", self.0)
    }
}

pub struct SessionConfig {
    pub workers: Vec<WorkerFactory>,
    pub variant: ModelVariant,
    pub teardown: Teardown,
}

impl SessionConfig {
    pub fn new(workers: Vec<WorkerFactory>) -> Self {
        SessionConfig { workers, variant: ModelVariant::FIXED, teardown: Teardown::Join }
    }
}

/// Everything a session observed, from which the status byte is derived.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionReport {
    pub status: StatusByte,
    /// `None` when the Supervisor was never constructed.
    pub supervisor_final: Option<ThreadState>,
    pub supervisor: SupervisorReport,
    pub external_stop: bool,
    pub violations: Vec<Violation>,
}

#[derive(Default)]
struct ControlState {
    supervisor: Option<Arc<Core>>,
    pending_stop: bool,
    closed: bool,
}

/// Lets other threads act as the outside world: send commands to the
/// Supervisor while the session runs.
#[derive(Clone, Default)]
pub struct SessionControl {
    state: Arc<Mutex<ControlState>>,
    external_stop: Arc<AtomicBool>,
}

impl SessionControl {
    fn supervisor(&self) -> Result<Option<Arc<Core>>, ()> {
        let st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if st.closed {
            return Err(());
        }
        Ok(st.supervisor.clone())
    }

    /// External STOP. Before startup has finished the request is queued.
    /// Returns whether it was accepted or queued.
    pub fn request_stop(&self) -> bool {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if st.closed {
            return false;
        }
        match st.supervisor.clone() {
            Some(core) => {
                drop(st);
                let flag = &self.external_stop;
                core.store_command_with(ThreadCommand::Stop, &|| flag.store(true, Ordering::SeqCst))
            }
            None => {
                st.pending_stop = true;
                true
            }
        }
    }

    pub fn request_pause(&self) -> bool {
        matches!(self.supervisor(), Ok(Some(core)) if core.store_command(ThreadCommand::Pause))
    }

    pub fn request_resume(&self) -> bool {
        matches!(self.supervisor(), Ok(Some(core)) if core.store_command(ThreadCommand::Continue))
    }
}

/// Drives startup, the passive runtime phase and teardown on the calling
/// thread.
pub struct Session {
    config: SessionConfig,
    platform: Arc<dyn Platform>,
    control: SessionControl,
}

impl Session {
    pub fn new(config: SessionConfig, platform: Arc<dyn Platform>) -> Self {
        Session { config, platform, control: SessionControl::default() }
    }

    pub fn control(&self) -> SessionControl {
        self.control.clone()
    }

    pub fn run(self) -> SessionReport {
        let Session { config, platform, control } = self;
        if config.workers.is_empty() {
            control.state.lock().unwrap_or_else(|e| e.into_inner()).closed = true;
            return SessionReport {
                status: StatusByte(StatusByte::CONFIG_ERROR),
                supervisor_final: None,
                supervisor: SupervisorReport::default(),
                external_stop: false,
                violations: Vec::new(),
            };
        }
        let options =
            ThreadOptions { variant: config.variant, teardown: config.teardown, callback: None };
        let report = Arc::new(Mutex::new(SupervisorReport::default()));
        let supervisor = ThreadHandle::new(
            "s",
            Box::new(Supervisor::new(config.workers, options.clone(), report.clone())),
            options,
            platform.clone(),
        );
        supervisor.start_async();
        supervisor.wait_for_state_mask(StateMask::STARTED).expect("non-empty mask");
        let pending = {
            let mut st = control.state.lock().unwrap_or_else(|e| e.into_inner());
            st.supervisor = Some(supervisor.core().clone());
            std::mem::take(&mut st.pending_stop)
        };
        if pending && supervisor.core().store_command(ThreadCommand::Stop) {
            control.external_stop.store(true, Ordering::SeqCst);
        }
        supervisor.wait_for_state_mask(StateMask::HALTED).expect("non-empty mask");
        {
            let mut st = control.state.lock().unwrap_or_else(|e| e.into_inner());
            st.closed = true;
            st.supervisor = None;
        }
        supervisor.join();
        let supervisor_final = supervisor.core().raw_state();
        let supervisor_failures = supervisor.hook_failures();
        drop(supervisor);

        let report = report.lock().unwrap_or_else(|e| e.into_inner()).clone();
        let external_stop = control.external_stop.load(Ordering::SeqCst);
        let violations = platform.violations();
        let mut status = StatusByte::default();
        status.set(
            StatusByte::WORKER_ABORTED,
            report.worker_final.contains(&ThreadState::Aborted),
        );
        status.set(
            StatusByte::SUPERVISOR_FAILURE,
            supervisor_final != ThreadState::Stopped || supervisor_failures > 0,
        );
        status.set(StatusByte::EXTERNAL_STOP, external_stop);
        status.set(StatusByte::HOOK_EXCEPTION, report.worker_hook_failures > 0);
        status.set(StatusByte::STARTUP_FAILURE, report.startup_failure);
        status.set(StatusByte::INTERNAL_ERROR, !violations.is_empty());
        SessionReport {
            status,
            supervisor_final: Some(supervisor_final),
            supervisor: report,
            external_stop,
            violations,
        }
    }
}

/// Runs a session on OS threads; `seed` drives hook choices.
pub fn run_session(config: SessionConfig, seed: u64) -> StatusByte {
    Session::new(config, Arc::new(NativePlatform::new(seed))).run().status
}
