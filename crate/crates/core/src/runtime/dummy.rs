use super::thread::{Context, HookError, HookResult, Hooks};

/// A worker with no domain logic: each hook picks one of the actions the
/// design model allows it through [`Context::choose`].
///
/// * prepare: pause itself, stop itself, throw, or do nothing
/// * execute: stop itself, throw, or do nothing
/// * finish: throw or do nothing
///
/// With a skip budget, `execute` stops doing nothing after that many
/// iterations so that every run terminates.
#[derive(Clone, Debug, Default)]
pub struct DummyWorker {
    skip_budget: Option<usize>,
    skips: usize,
}

impl DummyWorker {
    pub fn new() -> Self {
        DummyWorker::default()
    }

    pub fn with_skip_budget(budget: usize) -> Self {
        DummyWorker { skip_budget: Some(budget), skips: 0 }
    }
}

impl Hooks for DummyWorker {
    fn prepare(&mut self, ctx: &Context) -> HookResult {
        match ctx.choose(4) {
            0 => {
                ctx.pause_async();
            }
            1 => {
                ctx.stop_async();
            }
            2 => return Err(HookError::new(format!("{}: prepare failed", ctx.name()))),
            _ => {}
        }
        Ok(())
    }

    fn execute(&mut self, ctx: &Context) -> HookResult {
        let may_skip = self.skip_budget.map_or(true, |b| self.skips < b);
        match ctx.choose(if may_skip { 3 } else { 2 }) {
            0 => {
                ctx.stop_async();
            }
            1 => return Err(HookError::new(format!("{}: execute failed", ctx.name()))),
            _ => self.skips += 1,
        }
        Ok(())
    }

    fn finish(&mut self, ctx: &Context) -> HookResult {
        match ctx.choose(2) {
            0 => Err(HookError::new(format!("{}: finish failed", ctx.name()))),
            _ => Ok(()),
        }
    }
}
