use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Action, StepResult};

/// One line of an episode recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub tick: u64,
    pub action_code: u8,
    pub action_name: String,
    pub reward: f64,
    pub unlocks: Vec<String>,
    pub health_delta: i32,
    pub done: bool,
}

impl StepRecord {
    pub fn new(tick: u64, action: Action, result: &StepResult) -> Self {
        StepRecord {
            tick,
            action_code: action.code(),
            action_name: action.name().to_string(),
            reward: result.reward,
            unlocks: result.unlocks.iter().map(|a| a.name().to_string()).collect(),
            health_delta: result.health_delta,
            done: result.done,
        }
    }
}

/// Writes an episode as JSON lines, one object per step.
pub struct EpisodeRecorder<W: Write> {
    out: W,
}

impl<W: Write> EpisodeRecorder<W> {
    pub fn new(out: W) -> Self {
        EpisodeRecorder { out }
    }

    pub fn record(&mut self, tick: u64, action: Action, result: &StepResult) -> io::Result<()> {
        let line = serde_json::to_string(&StepRecord::new(tick, action, result))?;
        writeln!(self.out, "{line}")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
