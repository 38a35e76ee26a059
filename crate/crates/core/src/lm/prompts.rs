use std::fmt::Write;

use crate::craftworld::Action;
use crate::textembed::ComprehensionScore;

use super::{AdapterSummary, PromptBundle, PromptParams, ReplayBufferView, Role};

/// The 16 actions offered to the models (noop is never suggested).
pub const ACTION_LIST: [Action; 16] = [
    Action::MoveLeft,
    Action::MoveRight,
    Action::MoveUp,
    Action::MoveDown,
    Action::Do,
    Action::Sleep,
    Action::PlaceStone,
    Action::PlaceTable,
    Action::PlaceFurnace,
    Action::PlacePlant,
    Action::MakeWoodPickaxe,
    Action::MakeStonePickaxe,
    Action::MakeIronPickaxe,
    Action::MakeWoodSword,
    Action::MakeStoneSword,
    Action::MakeIronSword,
];

const ANALYST_PREAMBLE: &str =
    "You are a professional game analyst. A player is playing a game similar to Minecraft. Available actions are: ";
const ADAPTER_CLOSING: &str = "Analyze the environment and the player's understanding capability,then generate concise summaries and suggestions about this player.";
const DECISION_CLOSING: &str =
    "Based on the provided information, suggest 3 sub-goals that the player should accomplish next.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt context is missing the `{0}` section")]
    MissingSection(&'static str),
    #[error("adapter summary is empty")]
    EmptySummary,
}

/// What fills the decision prompt's penultimate section.
#[derive(Debug, Clone, Copy)]
pub enum DecisionInput<'a> {
    /// "Analysis: <...>" carrying the adapter output.
    Analysis(&'a AdapterSummary),
    /// Adapter bypassed: the raw comprehension score, or nothing when the score
    /// is ablated as well.
    Score(Option<ComprehensionScore>),
}

fn system_message(task: &str) -> String {
    let actions: Vec<&str> = ACTION_LIST.iter().map(|a| a.name()).collect();
    format!("{ANALYST_PREAMBLE}\n<{}>. \n\n{task}", actions.join(", "))
}

fn score_line(l: ComprehensionScore) -> String {
    format!("Comprehension score: <{:.3}>", l.value())
}

/// The observation, status, past-action and past-sub-goal sections shared by every prompt.
fn context_sections(ctx: &ReplayBufferView) -> Result<String, PromptError> {
    let sees = ctx.sees.as_ref().ok_or(PromptError::MissingSection("Player sees"))?;
    let status = ctx.status.as_ref().ok_or(PromptError::MissingSection("Player status"))?;
    let action = ctx.past_action.as_ref().ok_or(PromptError::MissingSection("Past action"))?;
    let mut out = String::new();
    write!(out, "Player sees: <{}>\n\n", sees.join(", ")).unwrap();
    write!(out, "Player status: <{}>\n\n", status.render()).unwrap();
    write!(out, "Past action: <{action}>\n\n").unwrap();
    out.push_str("Past sub-goals:\n");
    match &ctx.previous_goals {
        Some(goals) => {
            for g in goals.iter() {
                writeln!(out, "- {g}").unwrap();
            }
        }
        None => out.push_str("- none\n"),
    }
    out.push('\n');
    Ok(out)
}

/// Adapter prompt. `score = None` drops the comprehension score from both messages.
pub fn build_adapter_prompt(
    ctx: &ReplayBufferView,
    score: Option<ComprehensionScore>,
) -> Result<PromptBundle, PromptError> {
    let mut user = context_sections(ctx)?;
    let task = match score {
        Some(l) => {
            user.push_str(&score_line(l));
            user.push_str("\n\n");
            "You will get the player's observation, status information, and its comprehension score of language guidance (between 0 and 1). You are collaborating with another analyst, and you will be asked to provide concise summaries and suggestions about this player."
        }
        None => "You will get the player's observation and status information. You are collaborating with another analyst, and you will be asked to provide concise summaries and suggestions about this player.",
    };
    user.push_str(ADAPTER_CLOSING);
    Ok(PromptBundle {
        role: Role::Adapter,
        system: system_message(task),
        user,
        params: PromptParams::default(),
        grounding: ctx.grounding.clone(),
    })
}

pub fn build_decision_prompt(
    ctx: &ReplayBufferView,
    input: DecisionInput<'_>,
) -> Result<PromptBundle, PromptError> {
    let mut user = context_sections(ctx)?;
    let task = match input {
        DecisionInput::Analysis(summary) => {
            if summary.as_str().trim().is_empty() {
                return Err(PromptError::EmptySummary);
            }
            write!(user, "Analysis: <{}>\n\n", summary.as_str()).unwrap();
            "You will get analysis about this player from another analyst, and you will be asked to provide the next sub-goals for this player."
        }
        DecisionInput::Score(Some(l)) => {
            user.push_str(&score_line(l));
            user.push_str("\n\n");
            "You will get necessary information and player's comprehension score of language guidance (between 0 and 1). You will be asked to provide the next sub-goals for this player."
        }
        DecisionInput::Score(None) => {
            "You will get necessary information. You will be asked to provide the next sub-goals for this player."
        }
    };
    user.push_str(DECISION_CLOSING);
    Ok(PromptBundle {
        role: Role::Decision,
        system: system_message(task),
        user,
        params: PromptParams::default(),
        grounding: ctx.grounding.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::PlayerStatus;
    use crate::lm::SubGoals;

    fn ctx() -> ReplayBufferView {
        ReplayBufferView {
            sees: Some(vec!["grass".into(), "water".into(), "cow".into()]),
            status: Some(PlayerStatus::new(7, 5, 6, 4)),
            past_action: Some("sleep".into()),
            previous_goals: Some(SubGoals::new(&["eat cow", "collect stone", "place stone"]).unwrap()),
            grounding: None,
        }
    }

    #[test]
    fn zero_score_formats_with_three_decimals() {
        let p = build_adapter_prompt(&ctx(), Some(ComprehensionScore::ZERO)).unwrap();
        assert!(p.user.contains("Comprehension score: <0.000>"));
    }

    #[test]
    fn ablated_score_is_absent() {
        let p = build_adapter_prompt(&ctx(), None).unwrap();
        assert!(!p.user.contains("Comprehension score"));
        assert!(!p.system.contains("comprehension score"));
        assert!(p.user.ends_with(ADAPTER_CLOSING));
    }

    #[test]
    fn missing_sections_are_errors() {
        let mut c = ctx();
        c.status = None;
        assert_eq!(build_adapter_prompt(&c, None), Err(PromptError::MissingSection("Player status")));
        let mut c = ctx();
        c.sees = None;
        assert!(build_decision_prompt(&c, DecisionInput::Score(None)).is_err());
    }

    #[test]
    fn first_generation_has_no_previous_goals() {
        let mut c = ctx();
        c.previous_goals = None;
        let p = build_adapter_prompt(&c, Some(ComprehensionScore::ZERO)).unwrap();
        assert!(p.user.contains("Past sub-goals:\n- none\n\n"));
    }

    #[test]
    fn default_params() {
        let p = build_decision_prompt(&ctx(), DecisionInput::Score(None)).unwrap();
        assert_eq!(p.params, PromptParams { temperature: 0.5, top_p: 1.0, max_tokens: 100 });
        assert_eq!(p.role, Role::Decision);
    }
}
