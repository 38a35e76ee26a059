//! Text embedding and the comprehension score.
//!
//! The default embedder is a hashed bag of words: text is lowercased, split on
//! runs of non-alphanumeric characters, and every token adds one count to the
//! bucket `fnv1a64(token) mod D`. The comprehension score is the cosine between
//! the embedded sub-goals and the embedded recent trajectory.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::craftworld::{Achievement, Action};

pub const DEFAULT_DIMENSION: usize = 256;

/// Name of the token hash, recorded in resolved configs.
pub const HASH_ALGORITHM: &str = "fnv1a64";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        EmbeddingVector { values: self.values.iter().map(|v| v * alpha).collect() }
    }
}

/// Lowercased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Hashed bag-of-words embedding. With `signed`, bit 63 of the hash picks the
/// sign of each token's contribution; otherwise all counts are nonnegative.
pub fn embed_hashed(text: &str, dim: usize, signed: bool) -> EmbeddingVector {
    let mut v = EmbeddingVector::zeros(dim);
    if dim == 0 {
        return v;
    }
    for token in tokenize(text) {
        let h = fnv1a64(token.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if signed && (h >> 63) == 1 { -1.0 } else { 1.0 };
        v.values[bucket] += sign;
    }
    v
}

/// `u.v / (|u||v|)`, or 0 when either vector has zero norm.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> f64 {
    assert_eq!(u.dim(), v.dim(), "cosine of vectors with different dimensions");
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    #[default]
    Cosine,
    /// 1 when the cosine is strictly above 0.5, else 0.
    Binary,
}

pub const BINARY_THRESHOLD: f64 = 0.5;

/// Scalar measuring how closely recent behaviour matches the sub-goals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComprehensionScore(pub f64);

impl ComprehensionScore {
    pub const ZERO: ComprehensionScore = ComprehensionScore(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn from_cosine(cos: f64, mode: ScoreMode) -> Self {
        match mode {
            ScoreMode::Cosine => ComprehensionScore(cos),
            ScoreMode::Binary => ComprehensionScore(if cos > BINARY_THRESHOLD { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub tick: u64,
    pub action: Action,
    pub unlocks: Vec<Achievement>,
    pub events: Vec<String>,
}

/// Steps taken since the last sub-goal generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryWindow {
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: TrajectoryStep) {
        debug_assert!(self.steps.last().is_none_or(|s| s.tick <= step.tick));
        self.steps.push(step);
    }

    pub fn clear(&mut self) {
        self.steps.clear();
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// "move up do eat cow": each action with underscores as spaces, then its unlocks.
pub fn render_trajectory(window: &TrajectoryWindow) -> String {
    let mut words: Vec<String> = Vec::new();
    for step in &window.steps {
        words.push(step.action.name().replace('_', " "));
        words.extend(step.unlocks.iter().map(|a| a.phrase()));
    }
    words.join(" ")
}

/// Sub-goals are joined with "; " into one text before embedding.
pub fn join_goals<S: AsRef<str>>(goals: &[S]) -> String {
    goals.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedBackendKind {
    #[default]
    Hashed,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dimension: usize,
    pub backend: EmbedBackendKind,
    /// Records the token hash; only "fnv1a64" is supported.
    pub hash: String,
    pub signed: bool,
    /// Base URL of an OpenAI-compatible embeddings endpoint (http backend only).
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dimension: DEFAULT_DIMENSION,
            backend: EmbedBackendKind::Hashed,
            hash: HASH_ALGORITHM.to_string(),
            signed: false,
            endpoint: None,
            model: None,
            timeout_secs: 30.0,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dimension == 0 {
            return Err("embed.dimension must be positive".into());
        }
        if self.hash != HASH_ALGORITHM {
            return Err(format!("embed.hash: unsupported hash `{}`", self.hash));
        }
        if self.backend == EmbedBackendKind::Http && self.endpoint.is_none() {
            return Err("embed.endpoint is required for the http backend".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("embedding response malformed: {0}")]
    Protocol(String),
    #[error("embedding has dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// Embedding function used by the training loop.
#[derive(Debug, Clone)]
pub struct Embedder {
    config: EmbedConfig,
}

impl Embedder {
    pub fn new(config: EmbedConfig) -> Self {
        Embedder { config }
    }

    pub fn dim(&self) -> usize {
        self.config.dimension
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        match self.config.backend {
            EmbedBackendKind::Hashed => Ok(embed_hashed(text, self.config.dimension, self.config.signed)),
            EmbedBackendKind::Http => self.embed_http(text),
        }
    }

    fn embed_http(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let url = format!("{}/v1/embeddings", endpoint.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model.clone().unwrap_or_default(),
            "input": text,
        });
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(self.config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let mut request = agent.post(&url);
        if let Ok(key) = std::env::var(crate::lm::API_KEY_ENV) {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(EmbedError::Protocol(format!("status {status}")));
        }
        let json: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Protocol(e.to_string()))?;
        let values: Vec<f64> = json["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| EmbedError::Protocol("missing data[0].embedding".into()))?
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| EmbedError::Protocol("non-numeric component".into())))
            .collect::<Result<_, _>>()?;
        if values.len() != self.config.dimension {
            return Err(EmbedError::Dimension { got: values.len(), expected: self.config.dimension });
        }
        Ok(EmbeddingVector { values })
    }
}

/// Cosine (or thresholded cosine) between the joined goals and the rendered window.
pub fn comprehension_score<S: AsRef<str>>(
    embedder: &Embedder,
    goals: &[S],
    window: &TrajectoryWindow,
    mode: ScoreMode,
) -> Result<ComprehensionScore, EmbedError> {
    let g = embedder.embed(&join_goals(goals))?;
    let t = embedder.embed(&render_trajectory(window))?;
    Ok(ComprehensionScore::from_cosine(cosine(&g, &t), mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hashed() -> Embedder {
        Embedder::new(EmbedConfig::default())
    }

    fn window_of(actions: &[(Action, &[Achievement])]) -> TrajectoryWindow {
        let mut w = TrajectoryWindow::new();
        for (i, (a, u)) in actions.iter().enumerate() {
            w.push(TrajectoryStep { tick: i as u64, action: *a, unlocks: u.to_vec(), events: vec![] });
        }
        w
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_text_embeds_to_zero() {
        assert!(embed_hashed("", 256, false).is_zero());
    }

    #[test]
    fn normalization_and_linearity() {
        assert_eq!(embed_hashed("eat cow", 256, false), embed_hashed("Eat  Cow!", 256, false));
        assert_eq!(embed_hashed("eat cow eat cow", 256, false), embed_hashed("eat cow", 256, false).scaled(2.0));
    }

    #[test]
    fn cosine_examples() {
        let mut a = EmbeddingVector::zeros(4);
        let mut b = EmbeddingVector::zeros(4);
        a.values[0] = 1.0;
        b.values[1] = 1.0;
        assert_eq!(cosine(&a, &b), 0.0);
        let u = EmbeddingVector { values: vec![1.0, 0.0] };
        let v = EmbeddingVector { values: vec![1.0, 1.0] };
        assert!((cosine(&u, &v) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine(&u, &EmbeddingVector::zeros(2)), 0.0);
    }

    #[test]
    fn render_examples() {
        let w = window_of(&[(Action::MoveUp, &[]), (Action::Do, &[Achievement::EatCow])]);
        assert_eq!(render_trajectory(&w), "move up do eat cow");
        assert_eq!(render_trajectory(&TrajectoryWindow::new()), "");
        let w = window_of(&[(Action::MoveLeft, &[]), (Action::MoveLeft, &[]), (Action::MoveLeft, &[])]);
        assert_eq!(render_trajectory(&w), "move left move left move left");
    }

    #[test]
    fn score_examples() {
        let e = hashed();
        // "do" + "eat cow" renders as "do eat cow"; compare against identical goal text.
        let w = window_of(&[(Action::Do, &[Achievement::EatCow])]);
        let s = comprehension_score(&e, &["do eat cow"], &w, ScoreMode::Cosine).unwrap();
        assert!((s.value() - 1.0).abs() < 1e-12);

        let w = window_of(&[(Action::Sleep, &[]), (Action::Sleep, &[])]);
        let s = comprehension_score(&e, &["collect wood"], &w, ScoreMode::Cosine).unwrap();
        // {collect, wood} and {sleep} share no bucket at D = 256.
        let buckets = |t: &str| fnv1a64(t.as_bytes()) % 256;
        assert!(["collect", "wood"].iter().all(|t| buckets(t) != buckets("sleep")));
        assert_eq!(s.value(), 0.0);

        assert_eq!(ComprehensionScore::from_cosine(0.4, ScoreMode::Binary).value(), 0.0);
        assert_eq!(ComprehensionScore::from_cosine(0.5, ScoreMode::Binary).value(), 0.0);
        assert_eq!(ComprehensionScore::from_cosine(0.5000001, ScoreMode::Binary).value(), 1.0);
    }

    #[test]
    fn signed_embedding_can_be_negative() {
        let v = embed_hashed("the quick brown fox jumps over the lazy dog again and again", 256, true);
        assert!(v.values.iter().any(|&x| x < 0.0));
        assert!(embed_hashed("the quick brown fox", 256, false).values.iter().all(|&x| x >= 0.0));
    }

    proptest! {
        #[test]
        fn bag_of_words_ignores_order(words in proptest::collection::vec("[a-z]{1,6}", 0..12)) {
            let forward = words.join(" ");
            let mut rev = words.clone();
            rev.reverse();
            prop_assert_eq!(embed_hashed(&forward, 64, true), embed_hashed(&rev.join(" "), 64, true));
        }

        #[test]
        fn repeating_window_text_keeps_score(n in 1usize..6, reps in 1usize..4) {
            let e = hashed();
            let base: Vec<(Action, &[Achievement])> =
                (0..n).map(|i| (Action::ALL[i % Action::COUNT], &[][..])).collect();
            let repeated: Vec<_> = base.iter().cycle().take(n * reps).cloned().collect();
            let goals = ["move left", "collect wood", "noop"];
            let a = comprehension_score(&e, &goals, &window_of(&base), ScoreMode::Cosine).unwrap();
            let b = comprehension_score(&e, &goals, &window_of(&repeated), ScoreMode::Cosine).unwrap();
            prop_assert!((a.value() - b.value()).abs() < 1e-12);
        }
    }
}
