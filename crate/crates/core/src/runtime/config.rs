use super::thread::Teardown;
use crate::model::ModelVariant;
use std::path::Path;

/// Session settings, optionally read from a `key = value` file.
/// `#` starts a comment; unknown keys are errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Settings {
    pub workers: usize,
    pub seed: u64,
    pub variant: ModelVariant,
    pub teardown: Teardown,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { workers: 2, seed: 0, variant: ModelVariant::FIXED, teardown: Teardown::Join }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot read configuration: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

impl Settings {
    pub fn parse(text: &str) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Line { line, message };
            let (key, value) =
                content.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "workers" => {
                    s.workers = value.parse().map_err(|_| err(format!("bad worker count `{value}`")))?;
                    if s.workers == 0 {
                        return Err(err("at least one worker is required".into()));
                    }
                }
                "seed" => s.seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
                "variant" => s.variant = value.parse().map_err(err)?,
                "teardown" => {
                    s.teardown = match value {
                        "join" => Teardown::Join,
                        "detach" => Teardown::Detach,
                        _ => return Err(err(format!("bad teardown `{value}` (join or detach)"))),
                    }
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Settings::parse(&text)
    }
}
