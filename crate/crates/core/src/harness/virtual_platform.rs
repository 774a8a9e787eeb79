//! Cooperative virtual threads. Each virtual thread is an OS thread, but
//! only the one holding the baton runs; at every yield point the running
//! thread asks the decider who runs next.

use crate::runtime::{Joinable, Monitor, Platform, RunAborted, Violation, YieldPoint};
use std::cell::Cell;
use std::collections::VecDeque;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

thread_local! {
    static VTID: Cell<usize> = const { Cell::new(usize::MAX) };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Runnable,
    OnMonitor(u64),
    OnJoin(usize),
    Finished,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunEnd {
    Completed,
    /// Every unfinished thread was blocked.
    Deadlock,
    /// More yield points than the per-run limit: a livelock or a
    /// non-terminating hook.
    StepLimit,
}

/// One branching point: how many options there were and which was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Decision {
    pub options: usize,
    pub chosen: usize,
}

/// A single scheduling or value choice as it was actually made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Taken {
    Thread(usize),
    Value(usize),
}

pub(crate) enum Decider {
    /// Follow `prefix` (option indices at branching points), then take the
    /// first option, within `bound` preemptions.
    Explore { prefix: Vec<usize>, bound: usize },
    /// Follow recorded threads and values where possible, then defaults.
    Replay { threads: VecDeque<usize>, values: VecDeque<usize> },
}

struct Thread {
    status: Status,
}

struct Ctl {
    threads: Vec<Thread>,
    current: usize,
    decider: Decider,
    decisions: Vec<Decision>,
    taken: Vec<Taken>,
    preemptions: usize,
    steps: usize,
    step_limit: usize,
    end: Option<RunEnd>,
    log: Vec<String>,
    os: Vec<JoinHandle<()>>,
    referenced: usize,
}

struct Shared {
    ctl: Mutex<Ctl>,
    cv: Condvar,
    violations: Mutex<Vec<Violation>>,
}

pub(crate) struct VirtualPlatform {
    shared: Arc<Shared>,
}

/// Everything recorded about one run.
pub(crate) struct RunRecord {
    pub end: RunEnd,
    pub decisions: Vec<Decision>,
    pub taken: Vec<Taken>,
    pub violations: Vec<Violation>,
    pub log: Vec<String>,
    /// Highest thread id a replayed schedule referred to, plus one.
    pub referenced: usize,
    pub threads: usize,
}

fn me() -> usize {
    VTID.with(|v| v.get())
}

fn abort_run() -> ! {
    resume_unwind(Box::new(RunAborted))
}

impl Ctl {
    fn runnable(&self) -> Vec<usize> {
        (0..self.threads.len()).filter(|&t| self.threads[t].status == Status::Runnable).collect()
    }

    fn branch(&mut self, options: usize) -> usize {
        if options <= 1 {
            return 0;
        }
        let chosen = match &self.decider {
            Decider::Explore { prefix, .. } => {
                let i = self.decisions.len();
                prefix.get(i).copied().unwrap_or(0)
            }
            Decider::Replay { .. } => 0,
        };
        assert!(chosen < options, "nondeterministic scenario: option {chosen} of {options}");
        self.decisions.push(Decision { options, chosen });
        chosen
    }

    /// Picks the next thread to run after `me` reached a scheduling point.
    fn pick(&mut self, me: usize) -> Option<usize> {
        let runnable = self.runnable();
        if runnable.is_empty() {
            if self.threads.iter().any(|t| t.status != Status::Finished) {
                self.end = Some(RunEnd::Deadlock);
            }
            return None;
        }
        let me_runnable = runnable.contains(&me);
        let next = match &mut self.decider {
            Decider::Replay { threads, .. } => {
                let wanted = threads.pop_front();
                if let Some(w) = wanted {
                    self.referenced = self.referenced.max(w + 1);
                }
                match wanted {
                    Some(w) if runnable.contains(&w) => w,
                    _ if me_runnable => me,
                    _ => runnable[0],
                }
            }
            Decider::Explore { bound, .. } => {
                let bound = *bound;
                let options: Vec<usize> = if me_runnable {
                    let mut o = vec![me];
                    if self.preemptions < bound {
                        o.extend(runnable.iter().copied().filter(|&t| t != me));
                    }
                    o
                } else {
                    runnable.clone()
                };
                options[self.branch(options.len())]
            }
        };
        if me_runnable && next != me {
            self.preemptions += 1;
        }
        self.taken.push(Taken::Thread(next));
        Some(next)
    }
}

impl VirtualPlatform {
    pub(crate) fn new(decider: Decider, step_limit: usize) -> Self {
        VirtualPlatform {
            shared: Arc::new(Shared {
                ctl: Mutex::new(Ctl {
                    threads: Vec::new(),
                    current: 0,
                    decider,
                    decisions: Vec::new(),
                    taken: Vec::new(),
                    preemptions: 0,
                    steps: 0,
                    step_limit,
                    end: None,
                    log: Vec::new(),
                    os: Vec::new(),
                    referenced: 0,
                }),
                cv: Condvar::new(),
                violations: Mutex::new(Vec::new()),
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Ctl> {
        self.shared.ctl.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Hands the baton from `me` to `next` (or ends the run) and waits to be
    /// scheduled again. Returns `false` if the run was cut short while
    /// unwinding.
    fn switch(&self, mut ctl: MutexGuard<'_, Ctl>, me: usize, next: Option<usize>) -> bool {
        match next {
            Some(n) if n == me => return true,
            Some(n) => ctl.current = n,
            None => {
                if ctl.end.is_none() {
                    ctl.end = Some(RunEnd::Completed);
                }
            }
        }
        self.shared.cv.notify_all();
        loop {
            if ctl.current == me && ctl.threads[me].status == Status::Runnable && ctl.end.is_none() {
                return true;
            }
            if ctl.end.is_some() && ctl.end != Some(RunEnd::Completed) {
                drop(ctl);
                if std::thread::panicking() {
                    return false;
                }
                abort_run();
            }
            ctl = self.shared.cv.wait(ctl).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Returns `false` when the run is over and the caller is unwinding.
    fn enter(&self) -> Option<MutexGuard<'_, Ctl>> {
        let ctl = self.lock();
        if ctl.end.is_some() {
            drop(ctl);
            if std::thread::panicking() {
                return None;
            }
            abort_run();
        }
        Some(ctl)
    }

    fn finish_thread(&self, tid: usize) {
        let mut ctl = self.lock();
        ctl.threads[tid].status = Status::Finished;
        for t in ctl.threads.iter_mut() {
            if t.status == Status::OnJoin(tid) {
                t.status = Status::Runnable;
            }
        }
        if ctl.end.is_some() {
            self.shared.cv.notify_all();
            return;
        }
        let next = ctl.pick(tid);
        match next {
            Some(n) => ctl.current = n,
            None => {
                if ctl.end.is_none() {
                    ctl.end = Some(RunEnd::Completed);
                }
            }
        }
        self.shared.cv.notify_all();
    }

    /// Runs `main` as thread 0 and waits until every thread has exited.
    pub(crate) fn run(self: Arc<Self>, main: Box<dyn FnOnce() + Send>) -> RunRecord {
        self.spawn_thread("main", main);
        let mut ctl = self.lock();
        while ctl.threads.iter().any(|t| t.status != Status::Finished) {
            ctl = self.shared.cv.wait(ctl).unwrap_or_else(|e| e.into_inner());
        }
        let os = std::mem::take(&mut ctl.os);
        drop(ctl);
        for h in os {
            let _ = h.join();
        }
        let mut ctl = self.lock();
        RunRecord {
            end: ctl.end.unwrap_or(RunEnd::Completed),
            decisions: std::mem::take(&mut ctl.decisions),
            taken: std::mem::take(&mut ctl.taken),
            violations: self.shared.violations.lock().unwrap_or_else(|e| e.into_inner()).clone(),
            log: std::mem::take(&mut ctl.log),
            referenced: ctl.referenced,
            threads: ctl.threads.len(),
        }
    }

    fn spawn_thread(self: &Arc<Self>, name: &str, body: Box<dyn FnOnce() + Send>) -> usize {
        let mut ctl = self.lock();
        let tid = ctl.threads.len();
        ctl.threads.push(Thread { status: Status::Runnable });
        ctl.log.push(format!("{tid}: spawned as {name}"));
        let platform = self.clone();
        let handle = std::thread::Builder::new()
            .name(format!("vt{tid}-{name}"))
            .spawn(move || {
                VTID.with(|v| v.set(tid));
                let started = {
                    let mut ctl = platform.lock();
                    loop {
                        if ctl.end.is_some() && ctl.end != Some(RunEnd::Completed) {
                            break false;
                        }
                        if ctl.current == tid {
                            break true;
                        }
                        ctl = platform.shared.cv.wait(ctl).unwrap_or_else(|e| e.into_inner());
                    }
                };
                if started {
                    if let Err(payload) = catch_unwind(AssertUnwindSafe(body)) {
                        if !payload.is::<RunAborted>() {
                            let mut ctl = platform.lock();
                            ctl.log.push(format!("{tid}: panicked"));
                        }
                    }
                }
                platform.finish_thread(tid);
            })
            .expect("spawn virtual thread");
        ctl.os.push(handle);
        tid
    }
}

struct VirtualBackend {
    platform: Arc<VirtualPlatform>,
    tid: usize,
}

impl Joinable for VirtualBackend {
    fn join(self: Box<Self>) {
        let p = &self.platform;
        let me = me();
        loop {
            let Some(mut ctl) = p.enter() else { return };
            if ctl.threads[self.tid].status == Status::Finished {
                return;
            }
            ctl.threads[me].status = Status::OnJoin(self.tid);
            let next = ctl.pick(me);
            if !p.switch(ctl, me, next) {
                return;
            }
        }
    }
}

/// Shares one [`VirtualPlatform`] as a runtime [`Platform`].
pub(crate) struct VirtualHandle(pub Arc<VirtualPlatform>);

impl Platform for VirtualHandle {
    fn spawn(&self, name: &str, body: Box<dyn FnOnce() + Send>) -> Box<dyn Joinable> {
        let tid = self.0.spawn_thread(name, body);
        Box::new(VirtualBackend { platform: self.0.clone(), tid })
    }

    fn yield_now(&self, point: YieldPoint) {
        let p = &self.0;
        let me = me();
        let Some(mut ctl) = p.enter() else { return };
        ctl.steps += 1;
        if ctl.steps > ctl.step_limit {
            ctl.end = Some(RunEnd::StepLimit);
            p.shared.cv.notify_all();
            drop(ctl);
            if std::thread::panicking() {
                return;
            }
            abort_run();
        }
        ctl.log.push(format!("{me}: {point:?}"));
        let next = ctl.pick(me);
        p.switch(ctl, me, next);
    }

    fn wait_until(&self, monitor: &Monitor, pred: &mut dyn FnMut() -> bool) {
        let p = &self.0;
        let me = me();
        loop {
            {
                let _cs = monitor.enter();
                if pred() {
                    return;
                }
            }
            let Some(mut ctl) = p.enter() else { return };
            ctl.threads[me].status = Status::OnMonitor(monitor.id());
            ctl.log.push(format!("{me}: blocked"));
            let next = ctl.pick(me);
            if next.is_none() {
                p.shared.cv.notify_all();
                drop(ctl);
                if std::thread::panicking() {
                    return;
                }
                abort_run();
            }
            if !p.switch(ctl, me, next) {
                return;
            }
        }
    }

    fn notify_all(&self, monitor: &Monitor) {
        let mut ctl = self.0.lock();
        let id = monitor.id();
        for t in ctl.threads.iter_mut() {
            if t.status == Status::OnMonitor(id) {
                t.status = Status::Runnable;
            }
        }
    }

    fn choose(&self, n: usize) -> usize {
        let p = &self.0;
        let Some(mut ctl) = p.enter() else { return 0 };
        let value = match &mut ctl.decider {
            Decider::Replay { values, .. } => values.pop_front().filter(|&v| v < n).unwrap_or(0),
            Decider::Explore { .. } => ctl.branch(n),
        };
        ctl.taken.push(Taken::Value(value));
        ctl.log.push(format!("{}: choose({n}) = {value}", me()));
        value
    }

    fn report(&self, violation: Violation) {
        let mut ctl = self.0.lock();
        ctl.log.push(format!("{}: violation: {violation}", me()));
        drop(ctl);
        self.0.shared.violations.lock().unwrap_or_else(|e| e.into_inner()).push(violation);
    }

    fn violations(&self) -> Vec<Violation> {
        self.0.shared.violations.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn trace(&self, event: &str) {
        let mut ctl = self.0.lock();
        let me = me();
        ctl.log.push(format!("{me}: {event}"));
    }
}
