//! Prompt construction for the adapter and decision models, completion
//! backends, and sub-goal parsing.

mod backend;
mod parse;
mod prompts;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::craftworld::{Achievement, Inventory, PlayerStatus};

pub use backend::{Backend, BackendKind, BackendSpec, HttpBackend, LmError, ScriptedOracle};
pub use parse::{parse_subgoals, ParseFailure};
pub use prompts::{
    build_adapter_prompt, build_decision_prompt, DecisionInput, PromptError, ACTION_LIST,
};

/// Environment variable holding the bearer token for HTTP backends.
pub const API_KEY_ENV: &str = "ADAREFINER_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Adapter,
    Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for PromptParams {
    fn default() -> Self {
        PromptParams { temperature: 0.5, top_p: 1.0, max_tokens: 100 }
    }
}

/// Facts the scripted oracle needs that the prompt text does not carry.
/// HTTP backends ignore it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub unlocked: Vec<Achievement>,
    pub inventory: Inventory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub role: Role,
    pub system: String,
    pub user: String,
    pub params: PromptParams,
    pub grounding: Option<Grounding>,
}

/// Exactly three trimmed, non-empty sub-goals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SubGoals([String; 3]);

impl SubGoals {
    pub fn new<S: AsRef<str>>(goals: &[S]) -> Result<Self, ParseFailure> {
        let trimmed: Vec<String> = goals.iter().map(|g| g.as_ref().trim().to_string()).collect();
        match <[String; 3]>::try_from(trimmed) {
            Ok(arr) if arr.iter().all(|g| !g.is_empty()) => Ok(SubGoals(arr)),
            _ => Err(ParseFailure { usable: goals.iter().filter(|g| !g.as_ref().trim().is_empty()).count() }),
        }
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }
}

impl TryFrom<Vec<String>> for SubGoals {
    type Error = ParseFailure;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        SubGoals::new(&v)
    }
}

impl From<SubGoals> for Vec<String> {
    fn from(g: SubGoals) -> Self {
        g.0.into()
    }
}

impl fmt::Display for SubGoals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(", "))
    }
}

/// Text emitted by the adapter model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterSummary(String);

impl AdapterSummary {
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into().trim().to_string();
        (!text.is_empty()).then_some(AdapterSummary(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// The slice of replay-buffer state a prompt is built from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBufferView {
    pub sees: Option<Vec<String>>,
    pub status: Option<PlayerStatus>,
    pub past_action: Option<String>,
    /// `None` before the first generation.
    pub previous_goals: Option<SubGoals>,
    pub grounding: Option<Grounding>,
}
