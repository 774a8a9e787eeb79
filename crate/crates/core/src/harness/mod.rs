//! Deterministic interleaving tests for the runtime.
//!
//! A scenario runs on a virtual platform where exactly one thread makes
//! progress at a time. [`explore`] enumerates schedules depth-first, with a
//! bound on preemptions (switching away from a thread that could have kept
//! running), and every value a hook asks the platform to choose.

mod scenarios;
mod virtual_platform;

pub use scenarios::{find_scenario, scenarios, Scenario, ScenarioEnv};

use crate::checker::Verdict;
use crate::runtime::{Platform, Violation};
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;
use virtual_platform::{Decider, RunRecord, Taken, VirtualHandle, VirtualPlatform};

pub use virtual_platform::RunEnd;

pub const DEFAULT_BOUND: usize = 3;
pub const DEFAULT_SCHEDULE_LIMIT: usize = 20_000;
pub const DEFAULT_STEP_LIMIT: usize = 5_000;

/// One line of a schedule file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleItem {
    /// Let `thread` take `steps` consecutive scheduling decisions.
    Run { thread: usize, steps: usize },
    /// The next value handed out by `choose`.
    Choose(usize),
}

/// A replayable interleaving.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Schedule {
    pub items: Vec<ScheduleItem>,
}

impl Schedule {
    fn from_taken(taken: &[Taken]) -> Self {
        let mut items: Vec<ScheduleItem> = Vec::new();
        for t in taken {
            match *t {
                Taken::Thread(tid) => match items.last_mut() {
                    Some(ScheduleItem::Run { thread, steps }) if *thread == tid => *steps += 1,
                    _ => items.push(ScheduleItem::Run { thread: tid, steps: 1 }),
                },
                Taken::Value(v) => items.push(ScheduleItem::Choose(v)),
            }
        }
        Schedule { items }
    }

    fn decider(&self) -> Decider {
        let mut threads = VecDeque::new();
        let mut values = VecDeque::new();
        for item in &self.items {
            match *item {
                ScheduleItem::Run { thread, steps } => {
                    threads.extend(std::iter::repeat(thread).take(steps))
                }
                ScheduleItem::Choose(v) => values.push_back(v),
            }
        }
        Decider::Replay { threads, values }
    }

    /// Number of scheduling decisions.
    pub fn steps(&self) -> usize {
        self.items
            .iter()
            .map(|i| match i {
                ScheduleItem::Run { steps, .. } => *steps,
                ScheduleItem::Choose(_) => 0,
            })
            .sum()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            match item {
                ScheduleItem::Run { thread, steps } => writeln!(f, "{thread} {steps}")?,
                ScheduleItem::Choose(v) => writeln!(f, "choose {v}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("schedule refers to thread {0}, which the scenario never created")]
    UnknownThread(usize),
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    /// Blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self, ScheduleError> {
        let mut items = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| ScheduleError::Malformed { line: i + 1, message: message.into() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let item = match fields.as_slice() {
                ["choose", v] => ScheduleItem::Choose(v.parse().map_err(|_| bad("bad value"))?),
                [t, s] => ScheduleItem::Run {
                    thread: t.parse().map_err(|_| bad("bad thread id"))?,
                    steps: s.parse().map_err(|_| bad("bad step count"))?,
                },
                _ => return Err(bad("expected `<thread> <steps>` or `choose <value>`")),
            };
            items.push(item);
        }
        Ok(Schedule { items })
    }
}

/// What one run of a scenario produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub end: RunEnd,
    pub violations: Vec<Violation>,
    /// Facts the scenario recorded about itself.
    pub notes: Vec<String>,
    /// Every yield point, block, dispose and violation, in order.
    pub log: Vec<String>,
    pub schedule: Schedule,
    pub threads: usize,
}

impl Observation {
    pub fn has_note(&self, note: &str) -> bool {
        self.notes.iter().any(|n| n == note)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub bound: usize,
    pub schedule_limit: usize,
    pub step_limit: usize,
    /// Keep every explored schedule in the result.
    pub collect: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            bound: DEFAULT_BOUND,
            schedule_limit: DEFAULT_SCHEDULE_LIMIT,
            step_limit: DEFAULT_STEP_LIMIT,
            collect: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExploreResult {
    pub verdict: Verdict,
    pub schedules: usize,
    /// The first run the scenario rejected, with its reason.
    pub failure: Option<(Observation, String)>,
    pub explored: Vec<Schedule>,
}

fn run_once(scenario: &Scenario, decider: Decider, step_limit: usize) -> (RunRecord, Vec<String>) {
    let platform = Arc::new(VirtualPlatform::new(decider, step_limit));
    let handle: Arc<dyn Platform> = Arc::new(VirtualHandle(platform.clone()));
    let env = Arc::new(ScenarioEnv::new(handle));
    let body = scenario.body;
    let env2 = env.clone();
    let record = platform.run(Box::new(move || body(&env2)));
    (record, env.take_notes())
}

fn observe(record: RunRecord, notes: Vec<String>) -> Observation {
    Observation {
        end: record.end,
        violations: record.violations,
        notes,
        log: record.log,
        schedule: Schedule::from_taken(&record.taken),
        threads: record.threads,
    }
}

/// Depth-first search over all schedules within `options.bound` preemptions.
pub fn explore(scenario: &Scenario, options: ExploreOptions) -> ExploreResult {
    let mut prefix: Vec<usize> = Vec::new();
    let mut schedules = 0;
    let mut explored = Vec::new();
    loop {
        let decider = Decider::Explore { prefix: prefix.clone(), bound: options.bound };
        let (record, notes) = run_once(scenario, decider, options.step_limit);
        let decisions = record.decisions.clone();
        let obs = observe(record, notes);
        schedules += 1;
        if options.collect {
            explored.push(obs.schedule.clone());
        }
        if let Err(reason) = (scenario.check)(&obs) {
            return ExploreResult {
                verdict: Verdict::Fail,
                schedules,
                failure: Some((obs, reason)),
                explored,
            };
        }
        let Some(i) = decisions.iter().rposition(|d| d.chosen + 1 < d.options) else {
            return ExploreResult { verdict: Verdict::Pass, schedules, failure: None, explored };
        };
        if schedules >= options.schedule_limit {
            return ExploreResult { verdict: Verdict::Inconclusive, schedules, failure: None, explored };
        }
        prefix = decisions[..i].iter().map(|d| d.chosen).collect();
        prefix.push(decisions[i].chosen + 1);
    }
}

/// Runs `scenario` once along `schedule`. Where the schedule names a thread
/// that cannot run, the run falls back to the default choice.
pub fn replay_schedule(scenario: &Scenario, schedule: &Schedule) -> Result<Observation, ScheduleError> {
    let (record, notes) = run_once(scenario, schedule.decider(), DEFAULT_STEP_LIMIT);
    if record.referenced > record.threads {
        return Err(ScheduleError::UnknownThread(record.referenced - 1));
    }
    if let Some(unused) = schedule_threads(schedule).find(|&t| t >= record.threads) {
        return Err(ScheduleError::UnknownThread(unused));
    }
    Ok(observe(record, notes))
}

fn schedule_threads(schedule: &Schedule) -> impl Iterator<Item = usize> + '_ {
    schedule.items.iter().filter_map(|i| match i {
        ScheduleItem::Run { thread, .. } => Some(*thread),
        ScheduleItem::Choose(_) => None,
    })
}
