//! Command-line front end. Exit codes: 0 pass, 2 violation, 3
//! inconclusive, 64 usage error. `demo` exits with its status byte.

use crate::checker::{
    check_invariant, check_ltl, write_trace, CheckOptions, TraceHeader, Verdict,
    DEFAULT_STATE_LIMIT,
};
use crate::corpus;
use crate::harness::{
    explore, find_scenario, replay_schedule, scenarios, ExploreOptions, Schedule, DEFAULT_BOUND,
    DEFAULT_SCHEDULE_LIMIT,
};
use crate::ltl::{parse_with, LtlFormula, ParseContext};
use crate::model::{AdaproModel, ModelVariant, MAX_WORKERS};
use crate::runtime::{
    Context, HookError, HookResult, Hooks, NativePlatform, Session, SessionConfig, Settings,
    WorkerFactory,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Overrides the default state limit of `check`.
pub const STATE_LIMIT_ENV: &str = "ADAPRO_STATE_LIMIT";

#[derive(Debug, Parser)]
#[command(name = "adapro", version, about = "Supervised FSM threads: model checker, schedule explorer, demo")]
pub struct Cli {
    /// Log runtime events to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model-check lifecycle properties of the design-level model.
    Check(CheckArgs),
    /// Explore interleavings of a runtime scenario.
    Harness(HarnessArgs),
    /// Run a session with two sample workers and print its status byte.
    Demo(DemoArgs),
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=MAX_WORKERS as i64))]
    pub workers: u8,
    /// fixed, buggy-set-command, buggy-ordinal-wait or buggy-both.
    #[arg(long, default_value = "fixed")]
    pub variant: ModelVariant,
    /// `all`, or numbers and ranges such as `1-15,17`.
    #[arg(long, default_value = "all", value_parser = parse_selection)]
    pub formulas: Selection,
    /// Check a formula read from a file instead of the numbered ones.
    #[arg(long, conflicts_with = "formulas")]
    pub formula_file: Option<PathBuf>,
    /// Only consider runs that are weakly fair to every process.
    #[arg(long)]
    pub fair: bool,
    /// Defaults to the environment variable ADAPRO_STATE_LIMIT, if set.
    #[arg(long)]
    pub state_limit: Option<usize>,
    /// Counterexample path; with several failures, `.N` is appended per
    /// formula. Defaults to `formula-N.trace`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Print formula N as expanded for the worker count, then exit.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=corpus::COUNT as i64))]
    pub print_formula: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection(pub Vec<usize>);

fn parse_selection(text: &str) -> Result<Selection, String> {
    if text == "all" {
        return Ok(Selection((1..=corpus::COUNT).collect()));
    }
    let num = |s: &str| -> Result<usize, String> {
        let n: usize = s.trim().parse().map_err(|_| format!("`{s}` is not a formula number"))?;
        if (1..=corpus::COUNT).contains(&n) {
            Ok(n)
        } else {
            Err(format!("formula numbers run from 1 to {}", corpus::COUNT))
        }
    };
    let mut out = Vec::new();
    for part in text.split(',') {
        match part.split_once('-') {
            Some((a, b)) => out.extend(num(a)?..=num(b)?),
            None => out.push(num(part)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err("empty formula selection".into());
    }
    Ok(Selection(out))
}

#[derive(Debug, clap::Args)]
pub struct HarnessArgs {
    /// Scenario name; see `--list`.
    #[arg(required_unless_present = "list")]
    pub scenario: Option<String>,
    #[arg(long)]
    pub list: bool,
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    pub bound: usize,
    #[arg(long, default_value_t = DEFAULT_SCHEDULE_LIMIT)]
    pub schedule_limit: usize,
    /// Where to write a failing schedule. Defaults to `<scenario>.schedule`.
    #[arg(long)]
    pub schedule_out: Option<PathBuf>,
    /// Run one schedule from a file instead of exploring.
    #[arg(long, conflicts_with = "schedule_out")]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DemoArgs {
    /// Make the first worker fail in its third execution.
    #[arg(long)]
    pub inject_abort: bool,
    /// Request a stop from outside after this many milliseconds; the
    /// workers then run until stopped.
    #[arg(long)]
    pub external_stop_after_ms: Option<u64>,
    /// key=value settings: workers, seed, variant, teardown.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Harness(a) => cmd_harness(&a),
        Command::Demo(a) => cmd_demo(&a),
    }
}

fn state_limit(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(STATE_LIMIT_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{STATE_LIMIT_ENV}={v} is not a number")),
        Err(_) => Ok(DEFAULT_STATE_LIMIT),
    }
}

/// `[] p` with `p` propositional: checked by plain reachability.
fn invariant_body(f: &LtlFormula) -> Option<&LtlFormula> {
    match f {
        LtlFormula::Always(p) if p.is_propositional() => Some(p),
        _ => None,
    }
}

fn combine(verdicts: &[Verdict]) -> i32 {
    if verdicts.contains(&Verdict::Fail) {
        EXIT_FAIL
    } else if verdicts.contains(&Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

pub fn cmd_check(a: &CheckArgs) -> i32 {
    let workers = a.workers as usize;
    if let Some(n) = a.print_formula {
        let n = n as usize;
        println!("{}", corpus::formula(n, workers).expect("in range").expect("corpus parses"));
        return EXIT_PASS;
    }
    let limit = match state_limit(a.state_limit) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut jobs: Vec<(String, LtlFormula)> = Vec::new();
    if let Some(path) = &a.formula_file {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        match parse_with(&text, &ParseContext::with_workers(workers)) {
            Ok(f) => jobs.push((path.display().to_string(), f)),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    } else {
        for &n in &a.formulas.0 {
            jobs.push((n.to_string(), corpus::formula(n, workers).expect("in range").expect("corpus parses")));
        }
    }
    let model = AdaproModel::new(workers, a.variant).expect("worker count validated");
    let opts = CheckOptions { weak_fairness: a.fair, state_limit: limit };
    println!(
        "model adapro, {workers} worker(s), variant {}, fairness {}",
        a.variant,
        if a.fair { "on" } else { "off" }
    );
    let single = jobs.len() == 1;
    let mut verdicts = Vec::new();
    for (name, f) in &jobs {
        let outcome = match invariant_body(f) {
            Some(p) => check_invariant(&model, p, limit),
            None => check_ltl(&model, f, opts),
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: formula {name}: {e}");
                return EXIT_USAGE;
            }
        };
        println!("formula {name:>2}: {:<12} {}", outcome.verdict.to_string(), outcome.stats);
        if let Some(trace) = &outcome.trace {
            let path = match &a.trace {
                Some(p) if single => p.clone(),
                Some(p) => PathBuf::from(format!("{}.{name}", p.display())),
                None => PathBuf::from(format!("formula-{name}.trace")),
            };
            let header = TraceHeader {
                model: "adapro".into(),
                variant: a.variant.to_string(),
                workers,
                formula: f.to_string(),
                verdict: outcome.verdict,
            };
            match std::fs::write(&path, write_trace(&model, &header, trace)) {
                Ok(()) => println!("  counterexample ({} steps) written to {}", trace.len(), path.display()),
                Err(e) => eprintln!("error: {}: {e}", path.display()),
            }
        }
        verdicts.push(outcome.verdict);
    }
    combine(&verdicts)
}

pub fn cmd_harness(a: &HarnessArgs) -> i32 {
    if a.list {
        for s in scenarios() {
            println!("{:<30} {:<6} {}", s.name, s.expected.to_string(), s.summary);
        }
        return EXIT_PASS;
    }
    let name = a.scenario.as_deref().expect("required unless --list");
    let Some(scenario) = find_scenario(name) else {
        eprintln!("error: unknown scenario `{name}`; available:");
        for s in scenarios() {
            eprintln!("  {}", s.name);
        }
        return EXIT_USAGE;
    };
    if let Some(path) = &a.replay {
        let schedule: Schedule = match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| t.parse().map_err(|e: crate::harness::ScheduleError| e.to_string()))
        {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        let obs = match replay_schedule(&scenario, &schedule) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        return match (scenario.check)(&obs) {
            Ok(()) => {
                println!("{name}: replay PASS ({:?})", obs.end);
                EXIT_PASS
            }
            Err(reason) => {
                println!("{name}: replay FAIL: {reason}");
                EXIT_FAIL
            }
        };
    }
    let options = ExploreOptions {
        bound: a.bound,
        schedule_limit: a.schedule_limit,
        ..Default::default()
    };
    let result = explore(&scenario, options);
    println!("{name}: {} after {} schedule(s) at preemption bound {}", result.verdict, result.schedules, a.bound);
    if let Some((obs, reason)) = &result.failure {
        println!("  {reason}");
        let path = a.schedule_out.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.schedule")));
        let text = format!("# scenario {name}\n# {reason}\n{}", obs.schedule);
        match std::fs::write(&path, text) {
            Ok(()) => println!("  schedule written to {}", path.display()),
            Err(e) => eprintln!("error: {}: {e}", path.display()),
        }
    }
    combine(&[result.verdict])
}

/// Sample worker: ticks once a millisecond and stops itself after
/// `ticks`, unless it runs until stopped.
struct Sample {
    ticks: Option<usize>,
    fail_at: Option<usize>,
    done: usize,
}

impl Hooks for Sample {
    fn execute(&mut self, ctx: &Context) -> HookResult {
        self.done += 1;
        if self.fail_at == Some(self.done) {
            return Err(HookError::new(format!("{} failed on tick {}", ctx.name(), self.done)));
        }
        log::debug!("{} tick {}", ctx.name(), self.done);
        std::thread::sleep(Duration::from_millis(1));
        if self.ticks.is_some_and(|t| self.done >= t) {
            ctx.stop_async();
        }
        Ok(())
    }
}

pub fn cmd_demo(a: &DemoArgs) -> i32 {
    let settings = match &a.config {
        Some(path) => match Settings::load(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        None => Settings::default(),
    };
    let until_stopped = a.external_stop_after_ms.is_some();
    let inject = a.inject_abort;
    let workers: Vec<WorkerFactory> = (0..settings.workers)
        .map(|i| -> WorkerFactory {
            Arc::new(move |_| {
                Ok(Box::new(Sample {
                    ticks: if until_stopped { None } else { Some(20) },
                    fail_at: (inject && i == 0).then_some(3),
                    done: 0,
                }) as Box<dyn Hooks>)
            })
        })
        .collect();
    let config = SessionConfig { workers, variant: settings.variant, teardown: settings.teardown };
    let session = Session::new(config, Arc::new(NativePlatform::new(settings.seed)));
    let stopper = a.external_stop_after_ms.map(|ms| {
        let control = session.control();
        std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(ms));
            control.request_stop()
        })
    });
    let report = session.run();
    if let Some(h) = stopper {
        let _ = h.join();
    }
    println!("{}", report.status);
    report.status.0 as i32
}
