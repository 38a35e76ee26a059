use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::craftworld::{achievement_depth, prerequisites, Achievement, Item, PlayerStatus};

use super::{PromptBundle, Role, API_KEY_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Scripted,
    Http,
}

/// How to reach a model. Loaded from `[llm.adapter]` / `[llm.decision]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSpec {
    pub kind: BackendKind,
    /// Base URL; requests go to `{endpoint}/v1/chat/completions`.
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    pub timeout_secs: f64,
    pub retry_budget: u32,
    /// First retry delay; each further retry doubles it.
    pub backoff_base_secs: f64,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec {
            kind: BackendKind::Scripted,
            endpoint: None,
            model_name: None,
            timeout_secs: 60.0,
            retry_budget: 3,
            backoff_base_secs: 1.0,
        }
    }
}

impl BackendSpec {
    pub fn scripted() -> Self {
        Self::default()
    }

    pub fn http(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendSpec {
            kind: BackendKind::Http,
            endpoint: Some(endpoint.into()),
            model_name: Some(model.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self, section: &str) -> Result<(), String> {
        if self.kind == BackendKind::Http {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(format!("{section}.endpoint is required for http backends"));
            }
            if self.model_name.as_deref().is_none_or(str::is_empty) {
                return Err(format!("{section}.model_name is required for http backends"));
            }
        }
        if self.retry_budget == 0 {
            return Err(format!("{section}.retry_budget must be at least 1"));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(format!("{section}.timeout_secs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("HTTP status {status}: {body}")]
    Protocol { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Malformed(String),
}

/// Deterministic stand-in for hosted models.
///
/// Adapter role: one sentence naming the comprehension band, the weakest stat,
/// and the lowest-depth locked achievement. Decision role: eat or drink when
/// hungry or thirsty and the source is visible, otherwise the three
/// lowest-depth achievements whose prerequisites are met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedOracle {
    /// Score below `thresholds.0` is "struggling"; above `thresholds.1` is "proficient".
    pub thresholds: (f64, f64),
    /// Hunger/thirst level at or below which survival goals take over.
    pub survival_level: i32,
}

impl Default for ScriptedOracle {
    fn default() -> Self {
        ScriptedOracle { thresholds: (0.2, 0.6), survival_level: 5 }
    }
}

/// Text between `"{label}: <"` and the next `">"`.
fn section<'a>(text: &'a str, label: &str) -> Option<&'a str> {
    let start = text.find(&format!("{label}: <"))? + label.len() + 3;
    let end = text[start..].find('>')? + start;
    Some(&text[start..end])
}

fn parse_status(text: &str) -> Option<PlayerStatus> {
    let body = section(text, "Player status")?;
    let nums: Vec<i32> = body
        .split(',')
        .map(|part| part.split_whitespace().next().and_then(|n| n.parse().ok()))
        .collect::<Option<_>>()?;
    match nums[..] {
        [h, f, d, e] => Some(PlayerStatus::new(h, f, d, e)),
        _ => None,
    }
}

fn parse_sees(text: &str) -> Vec<String> {
    section(text, "Player sees")
        .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
        .unwrap_or_default()
}

/// Object whose presence makes an achievement directly actionable.
fn target_object(a: Achievement) -> Option<&'static str> {
    Some(match a {
        Achievement::CollectWood => "tree",
        Achievement::CollectDrink => "water",
        Achievement::EatCow => "cow",
        Achievement::CollectSapling => "grass",
        Achievement::DefeatZombie => "zombie",
        Achievement::DefeatSkeleton => "skeleton",
        Achievement::CollectStone => "stone",
        Achievement::CollectCoal => "coal",
        Achievement::CollectIron => "iron",
        Achievement::CollectDiamond => "diamond",
        Achievement::EatPlant => "plant",
        _ => return None,
    })
}

/// Achievements implied by holding an item.
fn implied_by(item: Item) -> Option<Achievement> {
    Some(match item {
        Item::Wood => Achievement::CollectWood,
        Item::Stone => Achievement::CollectStone,
        Item::Coal => Achievement::CollectCoal,
        Item::Iron => Achievement::CollectIron,
        Item::Diamond => Achievement::CollectDiamond,
        Item::Sapling => Achievement::CollectSapling,
        Item::WoodPickaxe => Achievement::MakeWoodPickaxe,
        Item::StonePickaxe => Achievement::MakeStonePickaxe,
        Item::IronPickaxe => Achievement::MakeIronPickaxe,
        Item::WoodSword => Achievement::MakeWoodSword,
        Item::StoneSword => Achievement::MakeStoneSword,
        Item::IronSword => Achievement::MakeIronSword,
    })
}

const FILLER_GOALS: [&str; 4] = ["collect drink", "eat cow", "place stone", "collect wood"];

impl ScriptedOracle {
    pub fn complete(&self, prompt: &PromptBundle, _seed: u64) -> String {
        match prompt.role {
            Role::Adapter => self.summarize(prompt),
            Role::Decision => self.decide(prompt),
        }
    }

    fn unlocked(prompt: &PromptBundle) -> BTreeSet<Achievement> {
        prompt
            .grounding
            .as_ref()
            .map(|g| g.unlocked.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Locked achievements, lowest depth first; visible targets break ties before names.
    fn frontier(prompt: &PromptBundle, sees: &[String]) -> Vec<Achievement> {
        let unlocked = Self::unlocked(prompt);
        let mut satisfied = unlocked.clone();
        if let Some(g) = &prompt.grounding {
            for (&item, &n) in &g.inventory {
                if n > 0 {
                    satisfied.extend(implied_by(item));
                }
            }
        }
        let visible = |a: Achievement| target_object(a).is_some_and(|o| sees.iter().any(|s| s == o));
        let mut out: Vec<Achievement> = Achievement::ALL
            .iter()
            .copied()
            .filter(|a| !unlocked.contains(a))
            .filter(|a| prerequisites(*a).iter().all(|p| satisfied.contains(p)))
            .collect();
        out.sort_by_key(|&a| (achievement_depth(a), !visible(a), a.name()));
        out
    }

    fn band(&self, score: f64) -> &'static str {
        if score < self.thresholds.0 {
            "struggling to follow"
        } else if score <= self.thresholds.1 {
            "making progress on"
        } else {
            "proficient at following"
        }
    }

    fn summarize(&self, prompt: &PromptBundle) -> String {
        let score = section(&prompt.user, "Comprehension score").and_then(|s| s.trim().parse::<f64>().ok());
        let comprehension = match score {
            Some(l) => format!("The player is {} past sub-goals (score {l:.3})", self.band(l)),
            None => "The player's comprehension of past sub-goals is unknown".to_string(),
        };
        let weakest = parse_status(&prompt.user)
            .map(|s| {
                let (name, value) = s.fields().into_iter().min_by_key(|&(_, v)| v).expect("four fields");
                format!("its weakest stat is {name} ({value})")
            })
            .unwrap_or_else(|| "its status is unknown".to_string());
        let sees = parse_sees(&prompt.user);
        let next = Self::frontier(prompt, &sees)
            .first()
            .map(|a| format!("the lowest-depth locked achievement is {}", a.phrase()))
            .unwrap_or_else(|| "every reachable achievement is unlocked".to_string());
        format!("{comprehension}; {weakest}, and {next}.")
    }

    fn decide(&self, prompt: &PromptBundle) -> String {
        let sees = parse_sees(&prompt.user);
        if let Some(status) = parse_status(&prompt.user) {
            let visible = |o: &str| sees.iter().any(|s| s == o);
            let mut needs = Vec::new();
            if status.food <= self.survival_level && visible("cow") {
                needs.push((status.food, 0, "find cow, move to cow, eat cow"));
            }
            if status.drink <= self.survival_level && visible("water") {
                needs.push((status.drink, 1, "find water, move to water, collect drink"));
            }
            if let Some((_, _, goals)) = needs.into_iter().min() {
                return goals.to_string();
            }
        }
        let mut goals: Vec<String> = Self::frontier(prompt, &sees).iter().take(3).map(|a| a.phrase()).collect();
        for filler in FILLER_GOALS {
            if goals.len() == 3 {
                break;
            }
            if !goals.iter().any(|g| g == filler) {
                goals.push(filler.to_string());
            }
        }
        goals.join(", ")
    }

    /// Re-derives the band thresholds from the tertiles of the most recent
    /// (up to 100) comprehension scores.
    pub fn refresh_thresholds(&mut self, recent_scores: &[f64]) {
        let tail = &recent_scores[recent_scores.len().saturating_sub(100)..];
        let mut sorted: Vec<f64> = tail.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return;
        }
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (sorted.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        self.thresholds = (quantile(1.0 / 3.0), quantile(2.0 / 3.0));
    }
}

/// OpenAI-compatible chat completions client.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    spec: BackendSpec,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(spec: BackendSpec) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(spec.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { spec, agent }
    }

    pub fn url(&self) -> String {
        let base = self.spec.endpoint.as_deref().unwrap_or_default();
        format!("{}/v1/chat/completions", base.trim_end_matches('/'))
    }

    pub fn request_body(&self, prompt: &PromptBundle) -> serde_json::Value {
        serde_json::json!({
            "model": self.spec.model_name.clone().unwrap_or_default(),
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": prompt.params.temperature,
            "top_p": prompt.params.top_p,
            "max_tokens": prompt.params.max_tokens,
        })
    }

    pub fn complete(&self, prompt: &PromptBundle) -> Result<String, LmError> {
        let body = self.request_body(prompt);
        let url = self.url();
        let key = std::env::var(API_KEY_ENV).ok();
        let attempts = self.spec.retry_budget.max(1);
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            let mut request = self.agent.post(&url);
            if let Some(key) = &key {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(&body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    let text = response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| LmError::Malformed(e.to_string()))?;
                    if !(200..300).contains(&status) {
                        return Err(LmError::Protocol { status, body: text });
                    }
                    let json: serde_json::Value =
                        serde_json::from_str(&text).map_err(|e| LmError::Malformed(e.to_string()))?;
                    return json["choices"][0]["message"]["content"]
                        .as_str()
                        .map(str::to_string)
                        .ok_or_else(|| LmError::Malformed("missing choices[0].message.content".into()));
                }
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("chat request to {url} failed (attempt {attempt}/{attempts}): {e}");
                    if attempt < attempts {
                        let delay = self.spec.backoff_base_secs * 2f64.powi(attempt as i32 - 1);
                        std::thread::sleep(Duration::from_secs_f64(delay));
                    }
                }
            }
        }
        Err(LmError::Transport { attempts, message: last_error })
    }
}

/// A completion backend bound to one role.
#[derive(Debug, Clone)]
pub enum Backend {
    Scripted(ScriptedOracle),
    Http(HttpBackend),
}

impl Backend {
    pub fn from_spec(spec: &BackendSpec) -> Self {
        match spec.kind {
            BackendKind::Scripted => Backend::Scripted(ScriptedOracle::default()),
            BackendKind::Http => Backend::Http(HttpBackend::new(spec.clone())),
        }
    }

    pub fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, LmError> {
        match self {
            Backend::Scripted(oracle) => Ok(oracle.complete(prompt, seed)),
            Backend::Http(http) => http.complete(prompt),
        }
    }

    pub fn is_scripted(&self) -> bool {
        matches!(self, Backend::Scripted(_))
    }
}
