use super::thread::{Context, HookResult, Hooks, Teardown, ThreadHandle, ThreadOptions};
use crate::fsm::{ThreadCommand, ThreadState};
use crate::model::WaitTarget;
use std::sync::{Arc, Mutex};

/// Builds the user-defined code of worker `index` (0-based).
pub type WorkerFactory = Arc<dyn Fn(usize) -> Result<Box<dyn Hooks>, String> + Send + Sync>;

/// What the Supervisor saw, collected for the status byte.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SupervisorReport {
    pub startup_failure: bool,
    pub workers_constructed: usize,
    /// Final worker states, in construction order.
    pub worker_final: Vec<ThreadState>,
    pub worker_hook_failures: usize,
    /// The Supervisor stopped itself because workers aborted or all stopped.
    pub propagated_stop: bool,
}

/// The first thread to start and the last to stop. It constructs and
/// starts the workers, mirrors its own PAUSE/CONTINUE/STOP to them, and
/// stops itself once a worker aborted or all workers stopped.
pub(crate) struct Supervisor {
    factories: Vec<WorkerFactory>,
    options: ThreadOptions,
    workers: Vec<ThreadHandle>,
    report: Arc<Mutex<SupervisorReport>>,
}

impl Supervisor {
    pub(crate) fn new(
        factories: Vec<WorkerFactory>,
        options: ThreadOptions,
        report: Arc<Mutex<SupervisorReport>>,
    ) -> Self {
        Supervisor { factories, options, workers: Vec::new(), report }
    }

    fn report(&self) -> std::sync::MutexGuard<'_, SupervisorReport> {
        self.report.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn workers_need_stop(workers: &[ThreadHandle]) -> bool {
    !workers.is_empty()
        && (workers.iter().any(|w| w.core().raw_state() == ThreadState::Aborted)
            || workers.iter().all(|w| w.core().raw_state() == ThreadState::Stopped))
}

impl Hooks for Supervisor {
    fn prepare(&mut self, ctx: &Context) -> HookResult {
        for (i, factory) in self.factories.iter().enumerate() {
            match factory(i) {
                Ok(hooks) => {
                    let name = format!("w{}", i + 1);
                    let w = ThreadHandle::new(name, hooks, self.options.clone(), ctx.platform().clone());
                    w.core().set_observer(ctx.core());
                    self.workers.push(w);
                }
                Err(message) => {
                    log::error!("worker {} could not be constructed: {message}", i + 1);
                    self.report.lock().unwrap_or_else(|e| e.into_inner()).startup_failure = true;
                    // never started, so dropping them does not block
                    self.workers.clear();
                    ctx.stop_async();
                    return Ok(());
                }
            }
        }
        self.report().workers_constructed = self.workers.len();
        for w in &self.workers {
            w.start_async();
        }
        for w in &self.workers {
            w.wait_for(WaitTarget::Started);
        }
        Ok(())
    }

    fn execute(&mut self, ctx: &Context) -> HookResult {
        let workers = &self.workers;
        ctx.block_unless(&|| workers_need_stop(workers));
        Ok(())
    }

    fn finish(&mut self, _ctx: &Context) -> HookResult {
        for w in &self.workers {
            w.stop_async();
        }
        for w in &self.workers {
            w.wait_for(WaitTarget::Halted);
        }
        let mut finals = Vec::new();
        let mut failures = 0;
        for w in self.workers.drain(..) {
            if self.options.teardown == Teardown::Join {
                w.join();
            }
            finals.push(w.core().raw_state());
            failures += w.hook_failures();
        }
        let mut report = self.report.lock().unwrap_or_else(|e| e.into_inner());
        report.worker_final = finals;
        report.worker_hook_failures = failures;
        Ok(())
    }

    fn on_paused(&mut self, _ctx: &Context) {
        for w in &self.workers {
            w.pause_async();
        }
        for w in &self.workers {
            w.wait_for(WaitTarget::Paused);
        }
    }

    fn on_resumed(&mut self, _ctx: &Context) {
        for w in &self.workers {
            w.resume_async();
        }
        for w in &self.workers {
            w.wait_for(WaitTarget::Resumed);
        }
    }

    fn poll(&mut self, ctx: &Context) {
        if !workers_need_stop(&self.workers) {
            return;
        }
        if matches!(ctx.command(), ThreadCommand::Continue | ThreadCommand::Pause) && ctx.stop_async() {
            self.report().propagated_stop = true;
        }
    }

    fn wants_attention(&self) -> bool {
        workers_need_stop(&self.workers)
    }
}
