//! The run configuration file (TOML). Every section and key is optional;
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapter_loop::SftConfig;
use crate::craftworld::EnvConfig;
use crate::lm::BackendSpec;
use crate::policy::{feature_len, PpoHyperparams};
use crate::textembed::{fnv1a64, EmbedConfig, ScoreMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Drop the comprehension score from prompts and fine-tuning data.
    NoLScore,
    /// Skip the adapter model; the decision model sees the raw score.
    NoAdapter,
    /// Threshold the comprehension score at 0.5.
    BinaryScore,
    /// Plain PPO: no model queries, zero goal embedding.
    NoLlm,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::NoLScore, Ablation::NoAdapter, Ablation::BinaryScore, Ablation::NoLlm];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::NoLScore => "no_l_score",
            Ablation::NoAdapter => "no_adapter",
            Ablation::BinaryScore => "binary_score",
            Ablation::NoLlm => "no_llm",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown ablation `{s}` (expected one of no_l_score, no_adapter, binary_score, no_llm)"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub mode: ScoreMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub adapter: BackendSpec,
    pub decision: BackendSpec,
}

/// The `[loop]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub seed: u64,
    pub total_steps: u64,
    /// Steps between sub-goal generations.
    pub n_gen: u64,
    pub buffer_capacity: usize,
    /// Steps between intermediate checkpoints; 0 keeps only the final one.
    pub checkpoint_interval: u64,
    /// Steps between recorded action distributions; 0 disables them.
    pub policy_frame_interval: u64,
    pub ablations: Vec<Ablation>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            seed: 0,
            total_steps: 1_000_000,
            n_gen: 20,
            buffer_capacity: 10_000,
            checkpoint_interval: 100_000,
            policy_frame_interval: 10_000,
            ablations: Vec::new(),
        }
    }
}

/// The `[eval]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: u64,
    /// Seed of the first evaluation episode; episode i uses `base_seed + i`.
    pub base_seed: u64,
    /// Take the most likely action instead of sampling.
    pub greedy: bool,
    /// Episodes in the report written at the end of training.
    pub train_report_episodes: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { episodes: 500, base_seed: 1_000_000, greedy: false, train_report_episodes: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub embed: EmbedConfig,
    pub score: ScoreConfig,
    pub llm: LlmConfig,
    pub sft: SftConfig,
    pub ppo: PpoHyperparams,
    #[serde(rename = "loop")]
    pub run: LoopConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let config = Self::from_toml_str(&text).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let run = &self.run;
        let checks = [
            self.env.validate(),
            self.embed.validate(),
            self.sft.validate(),
            self.ppo.validate(),
            self.llm.adapter.validate("llm.adapter"),
            self.llm.decision.validate("llm.decision"),
            if run.n_gen == 0 { Err("loop.n_gen must be at least 1".into()) } else { Ok(()) },
            if run.total_steps == 0 { Err("loop.total_steps must be at least 1".into()) } else { Ok(()) },
            if run.buffer_capacity == 0 { Err("loop.buffer_capacity must be at least 1".into()) } else { Ok(()) },
            if self.eval.episodes == 0 { Err("eval.episodes must be at least 1".into()) } else { Ok(()) },
        ];
        checks.into_iter().collect::<Result<Vec<()>, String>>().map(drop).map_err(ConfigError::Invalid)
    }

    pub fn has(&self, a: Ablation) -> bool {
        self.run.ablations.contains(&a)
    }

    pub fn score_mode(&self) -> ScoreMode {
        if self.has(Ablation::BinaryScore) {
            ScoreMode::Binary
        } else {
            self.score.mode
        }
    }

    pub fn feature_len(&self) -> usize {
        feature_len(self.embed.dimension)
    }

    /// Digest of everything that fixes what the policy network sees.
    pub fn fingerprint(&self) -> String {
        let key = serde_json::json!({
            "embed": self.embed,
            "hidden_width": self.ppo.hidden_width,
            "features": self.feature_len(),
            "goals": !self.has(Ablation::NoLlm),
        });
        format!("{:016x}", fnv1a64(key.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c.run.n_gen, 20);
        assert_eq!(c.sft.interval, 1000);
        assert_eq!(c.ppo.learning_rate, 7e-4);
        assert_eq!(c.ppo.update_epochs, 16);
        assert_eq!(c.ppo.gamma, 0.97);
        assert_eq!(c.ppo.clip_ratio, 0.1);
        assert_eq!(c.eval.episodes, 500);
        assert_eq!(c.embed.dimension, 256);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = RunConfig::from_toml_str("[ppo]\nlearnin_rate = 0.1\n").unwrap_err();
        assert!(err.contains("learnin_rate"), "{err}");
        let err = RunConfig::from_toml_str("[llm.adapter]\nkind = \"scripted\"\nendpont = \"x\"\n").unwrap_err();
        assert!(err.contains("endpont"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.run.ablations = vec![Ablation::NoLScore, Ablation::BinaryScore];
        c.env.size = 32;
        c.llm.decision = BackendSpec::http("http://localhost:1", "m");
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.score_mode(), ScoreMode::Binary);
    }

    #[test]
    fn validation_names_the_key() {
        let mut c = RunConfig::default();
        c.run.n_gen = 0;
        assert!(c.validate().unwrap_err().to_string().contains("loop.n_gen"));
        let mut c = RunConfig::default();
        c.llm.adapter.kind = crate::lm::BackendKind::Http;
        assert!(c.validate().unwrap_err().to_string().contains("llm.adapter.endpoint"));
    }

    #[test]
    fn fingerprint_tracks_network_inputs() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.run.total_steps = 5;
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.embed.dimension = 128;
        assert_ne!(a.fingerprint(), b.fingerprint());
        let mut c = a.clone();
        c.run.ablations.push(Ablation::NoLlm);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
