//! Line-oriented counterexample files and independent replay.
//!
//! ```text
//! # counterexample
//! model adapro
//! variant buggy-set-command
//! workers 2
//! formula [] (aborting_w1 -> ...)
//! verdict FAIL
//! 0	-	init	0002...	s=[NULL CONTINUE Unborn] ...
//! 1	3	p3:construct(s)	0002...	...
//! #cycle
//! 7	1	p1:set_state(PAUSED)	...
//! ```
//!
//! Step lines are tab separated: index, acting process (`-` for none),
//! action label, hex state encoding, and a free-form description.

use super::{CounterexampleTrace, TraceStep, TransitionSystem, Verdict};
use crate::ltl::{eval_on_lasso, Letter, LtlFormula};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub model: String,
    pub variant: String,
    pub workers: usize,
    pub formula: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile<S> {
    pub header: TraceHeader,
    pub trace: CounterexampleTrace<S>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing header field `{0}`")]
    MissingHeader(&'static str),
}

pub fn write_trace<T: TransitionSystem>(
    ts: &T,
    header: &TraceHeader,
    trace: &CounterexampleTrace<T::State>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# counterexample");
    let _ = writeln!(out, "model {}", header.model);
    let _ = writeln!(out, "variant {}", header.variant);
    let _ = writeln!(out, "workers {}", header.workers);
    let _ = writeln!(out, "formula {}", header.formula);
    let _ = writeln!(out, "verdict {}", header.verdict);
    let line = |i: usize, st: &TraceStep<T::State>| {
        let hex: String = ts.encode(&st.state).iter().map(|b| format!("{b:02x}")).collect();
        let proc = st.process.map_or("-".to_string(), |p| p.to_string());
        format!("{i}\t{proc}\t{}\t{hex}\t{}\n", st.action, ts.describe(&st.state))
    };
    for (i, st) in trace.prefix.iter().enumerate() {
        out.push_str(&line(i, st));
    }
    if !trace.cycle.is_empty() {
        out.push_str("#cycle\n");
        for (i, st) in trace.cycle.iter().enumerate() {
            out.push_str(&line(trace.prefix.len() + i, st));
        }
    }
    out
}

pub fn read_trace<T: TransitionSystem>(
    ts: &T,
    text: &str,
) -> Result<TraceFile<T::State>, ReplayError> {
    let mut model = None;
    let mut variant = None;
    let mut workers = None;
    let mut formula = None;
    let mut verdict = None;
    let mut prefix = Vec::new();
    let mut cycle = Vec::new();
    let mut in_cycle = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let bad = |message: &str| ReplayError::Malformed { line, message: message.to_string() };
        if raw.trim() == "#cycle" {
            if in_cycle {
                return Err(bad("duplicate #cycle marker"));
            }
            in_cycle = true;
            continue;
        }
        if raw.starts_with('#') || raw.trim().is_empty() {
            continue;
        }
        if raw.contains('\t') {
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() < 4 {
                return Err(bad("step line needs index, process, action and state"));
            }
            let process = match fields[1] {
                "-" => None,
                p => Some(p.parse::<usize>().map_err(|_| bad("bad process id"))?),
            };
            let hex = fields[3];
            if hex.len() % 2 != 0 {
                return Err(bad("odd-length state encoding"));
            }
            let bytes = (0..hex.len())
                .step_by(2)
                .map(|i| u8::from_str_radix(&hex[i..i + 2], 16))
                .collect::<Result<Vec<u8>, _>>()
                .map_err(|_| bad("state encoding is not hex"))?;
            let state = ts.decode(&bytes).ok_or_else(|| bad("state does not decode"))?;
            let step = TraceStep { process, action: fields[2].to_string(), state };
            if in_cycle {
                cycle.push(step);
            } else {
                prefix.push(step);
            }
            continue;
        }
        let (key, value) = raw.split_once(' ').ok_or_else(|| bad("expected `key value`"))?;
        match key {
            "model" => model = Some(value.to_string()),
            "variant" => variant = Some(value.to_string()),
            "workers" => workers = Some(value.parse().map_err(|_| bad("bad worker count"))?),
            "formula" => formula = Some(value.to_string()),
            "verdict" => {
                verdict = Some(match value {
                    "PASS" => Verdict::Pass,
                    "FAIL" => Verdict::Fail,
                    "INCONCLUSIVE" => Verdict::Inconclusive,
                    _ => return Err(bad("unknown verdict")),
                })
            }
            _ => return Err(bad("unknown header field")),
        }
    }
    Ok(TraceFile {
        header: TraceHeader {
            model: model.ok_or(ReplayError::MissingHeader("model"))?,
            variant: variant.ok_or(ReplayError::MissingHeader("variant"))?,
            workers: workers.ok_or(ReplayError::MissingHeader("workers"))?,
            formula: formula.ok_or(ReplayError::MissingHeader("formula"))?,
            verdict: verdict.ok_or(ReplayError::MissingHeader("verdict"))?,
        },
        trace: CounterexampleTrace { prefix, cycle },
    })
}

fn valid_step<T: TransitionSystem>(ts: &T, from: &T::State, to: &TraceStep<T::State>) -> bool {
    let succ = ts.successors(from);
    if to.action == "stutter" {
        return succ.is_empty() && *from == to.state;
    }
    succ.iter().any(|(a, s)| a.to_string() == to.action && *s == to.state)
}

fn has_edge<T: TransitionSystem>(ts: &T, from: &T::State, to: &T::State) -> bool {
    let succ = ts.successors(from);
    if succ.is_empty() {
        return from == to;
    }
    succ.iter().any(|(_, s)| s == to)
}

/// Re-validates `trace` against `ts` without using the checker's search:
/// the first state is initial, each step is an existing edge with the
/// recorded label, a cycle closes, and, when `violated` is given, its
/// negation holds on the resulting lasso. A finite trace is read as a lasso
/// that stutters on its last state.
pub fn replay<T: TransitionSystem>(
    ts: &T,
    trace: &CounterexampleTrace<T::State>,
    violated: Option<&LtlFormula>,
) -> bool {
    let steps: Vec<&TraceStep<T::State>> = trace.steps().collect();
    let Some(first) = steps.first() else { return false };
    if first.state != ts.initial_state() {
        return false;
    }
    for w in steps.windows(2) {
        if !valid_step(ts, &w[0].state, w[1]) {
            return false;
        }
    }
    if let (Some(first), Some(last)) = (trace.cycle.first(), trace.cycle.last()) {
        if !has_edge(ts, &last.state, &first.state) {
            return false;
        }
    }
    let Some(f) = violated else { return true };
    let atoms: Vec<_> = f.atoms().into_iter().collect();
    let mut resolved = Vec::new();
    for a in &atoms {
        match ts.resolve(a) {
            Some(p) => resolved.push((a.clone(), p)),
            None => return false,
        }
    }
    let letter = |s: &T::State| -> Letter {
        resolved.iter().filter(|(_, p)| ts.holds(s, *p)).map(|(a, _)| a.clone()).collect()
    };
    let not_f = LtlFormula::not(f.clone());
    if trace.cycle.is_empty() {
        let letters: Vec<Letter> = trace.prefix.iter().map(|s| letter(&s.state)).collect();
        let (init, last) = letters.split_at(letters.len() - 1);
        eval_on_lasso(&not_f, init, last)
    } else {
        let p: Vec<Letter> = trace.prefix.iter().map(|s| letter(&s.state)).collect();
        let c: Vec<Letter> = trace.cycle.iter().map(|s| letter(&s.state)).collect();
        eval_on_lasso(&not_f, &p, &c)
    }
}
