//! The training loop: interval-gated sub-goal generation, environment
//! interaction, PPO updates, comprehension scoring and fine-tune bookkeeping.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adapter_loop::{
    export_sft_jsonl, maybe_finetune, record_sft_pair, FinetuneOutcome, SftCadence, SftDataset, SftError,
};
use crate::config::{Ablation, ConfigError, RunConfig};
use crate::craftworld::{render_scene_text, Action, Observation, StepResult, WorldError, WorldState};
use crate::evalkit::{self, fmt_sig, EpisodeLog, EvalError, EvalReport, PolicyFrame, STEPS_HEADER};
use crate::lm::{
    build_adapter_prompt, build_decision_prompt, parse_subgoals, AdapterSummary, Backend, DecisionInput, Grounding,
    ReplayBufferView, SubGoals,
};
use crate::policy::{
    encode_goal_into, encode_obs_into, save_checkpoint, CheckpointError, PolicyError, PolicyParams, PpoError,
    PpoTrainer, Rollout, RolloutStep, OBS_FEATURES,
};
use crate::textembed::{
    comprehension_score, join_goals, ComprehensionScore, Embedder, EmbeddingVector, ScoreMode, TrajectoryStep,
    TrajectoryWindow,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("simulator: {0}")]
    World(#[from] WorldError),
    #[error("policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("PPO update at step {step}: {source}")]
    Ppo { step: u64, source: PpoError },
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("SFT data: {0}")]
    Sft(#[from] SftError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// True when a generation is due at step `t`.
pub fn should_query(t: u64, n_gen: u64) -> bool {
    t.is_multiple_of(n_gen)
}

/// Independent seed for `(stream, index)` derived from `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_WORLD: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_PPO: u64 = 3;
const STREAM_ACT: u64 = 4;
const STREAM_LLM: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: String,
    pub action: Action,
    pub next_observation: String,
    pub reward: f64,
    pub goals: Option<SubGoals>,
}

/// Outcome of one generation event.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub id: u64,
    pub tick: u64,
    pub summary: Option<AdapterSummary>,
    pub goals: Option<SubGoals>,
    /// Score that was fed to this generation's prompts.
    pub score: ComprehensionScore,
    /// Context the prompts were built from.
    pub context: ReplayBufferView,
}

/// Recent transitions, the trajectory window since the last generation, and
/// the latest generation.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: VecDeque<Transition>,
    capacity: usize,
    pub window: TrajectoryWindow,
    pub last: Option<Generation>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { entries: VecDeque::new(), capacity: capacity.max(1), window: TrajectoryWindow::new(), last: None }
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub generations: u64,
    pub adapter_calls: u64,
    pub decision_calls: u64,
    pub dropped_queries: u64,
    pub parse_failures: u64,
    pub sft_pairs: u64,
    pub sft_triggers: u64,
    pub ppo_updates: u64,
    pub episodes: u64,
}

#[derive(Debug, Clone)]
pub struct Backends {
    pub adapter: Backend,
    pub decision: Backend,
}

impl Backends {
    pub fn from_config(config: &RunConfig) -> Self {
        Backends { adapter: Backend::from_spec(&config.llm.adapter), decision: Backend::from_spec(&config.llm.decision) }
    }
}

/// One adapter + decision round. Failures (transport errors, empty summaries,
/// unparseable sub-goals) carry `previous` forward.
pub fn generation_step(
    view: &ReplayBufferView,
    backends: &Backends,
    ablations: &[Ablation],
    l: ComprehensionScore,
    seed: u64,
    previous: Option<&Generation>,
    counters: &mut Counters,
) -> (Option<AdapterSummary>, Option<SubGoals>) {
    let carry = || (previous.and_then(|g| g.summary.clone()), previous.and_then(|g| g.goals.clone()));
    let score = (!ablations.contains(&Ablation::NoLScore)).then_some(l);
    let summary = if ablations.contains(&Ablation::NoAdapter) {
        None
    } else {
        let prompt = match build_adapter_prompt(view, score) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("adapter prompt: {e}");
                return carry();
            }
        };
        counters.adapter_calls += 1;
        match backends.adapter.complete(&prompt, seed) {
            Ok(text) => match AdapterSummary::new(text) {
                Some(c) => Some(c),
                None => {
                    counters.parse_failures += 1;
                    return carry();
                }
            },
            Err(e) => {
                log::warn!("adapter query dropped: {e}");
                counters.dropped_queries += 1;
                return carry();
            }
        }
    };
    let input = match &summary {
        Some(c) => DecisionInput::Analysis(c),
        None => DecisionInput::Score(score),
    };
    let prompt = match build_decision_prompt(view, input) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("decision prompt: {e}");
            return carry();
        }
    };
    counters.decision_calls += 1;
    match backends.decision.complete(&prompt, seed.wrapping_add(1)) {
        Ok(text) => match parse_subgoals(&text) {
            Ok(g) => (summary, Some(g)),
            Err(e) => {
                log::debug!("unusable sub-goals {text:?}: {e}");
                counters.parse_failures += 1;
                carry()
            }
        },
        Err(e) => {
            log::warn!("decision query dropped: {e}");
            counters.dropped_queries += 1;
            carry()
        }
    }
}

/// Owns the language side of an agent: the buffer, backends, active goal
/// embedding and comprehension scoring. Shared by training and evaluation.
#[derive(Debug, Clone)]
pub struct GoalDriver {
    embedder: Embedder,
    pub backends: Backends,
    ablations: Vec<Ablation>,
    mode: ScoreMode,
    n_gen: u64,
    seed: u64,
    cadence: SftCadence,
    pub buffer: ReplayBuffer,
    pub counters: Counters,
    goal_embedding: EmbeddingVector,
    past_action: Option<Action>,
}

impl GoalDriver {
    pub fn new(config: &RunConfig, seed: u64) -> Self {
        GoalDriver {
            embedder: Embedder::new(config.embed.clone()),
            backends: Backends::from_config(config),
            ablations: config.run.ablations.clone(),
            mode: config.score_mode(),
            n_gen: config.run.n_gen,
            seed,
            cadence: config.sft.cadence,
            buffer: ReplayBuffer::new(config.run.buffer_capacity),
            counters: Counters::default(),
            goal_embedding: EmbeddingVector::zeros(config.embed.dimension),
            past_action: None,
        }
    }

    pub fn llm_enabled(&self) -> bool {
        !self.ablations.contains(&Ablation::NoLlm)
    }

    fn records_sft(&self) -> bool {
        self.llm_enabled() && !self.ablations.contains(&Ablation::NoAdapter)
    }

    pub fn goal_embedding(&self) -> &EmbeddingVector {
        &self.goal_embedding
    }

    pub fn current_goals(&self) -> Option<&SubGoals> {
        self.buffer.last.as_ref().and_then(|g| g.goals.as_ref())
    }

    /// Forget the last action at an episode boundary.
    pub fn reset_episode(&mut self) {
        self.past_action = None;
    }

    pub fn view(&self, world: &WorldState, obs: &Observation) -> ReplayBufferView {
        ReplayBufferView {
            sees: Some(render_scene_text(obs).sees),
            status: Some(obs.status),
            past_action: Some(self.past_action.map_or("noop", Action::name).to_string()),
            previous_goals: self.current_goals().cloned(),
            grounding: Some(Grounding {
                unlocked: world.unlocked().iter().copied().collect(),
                inventory: obs.inventory.clone(),
            }),
        }
    }

    fn score_window(&self, goals: Option<&SubGoals>) -> f64 {
        let Some(g) = goals else { return 0.0 };
        match comprehension_score(&self.embedder, g.as_slice(), &self.buffer.window, self.mode) {
            Ok(l) => l.value(),
            Err(e) => {
                log::warn!("comprehension score unavailable: {e}");
                0.0
            }
        }
    }

    /// Generation gate for step `t`. When a window closes, scores it against
    /// the goals that were active, records the fine-tune pair, and returns l'.
    pub fn before_step(
        &mut self,
        t: u64,
        world: &WorldState,
        obs: &Observation,
        sft: Option<&mut SftDataset>,
    ) -> Result<Option<f64>, RunError> {
        if !self.llm_enabled() || !should_query(t, self.n_gen) {
            return Ok(None);
        }
        let mut fresh = None;
        if let Some(prev) = &self.buffer.last {
            let l = self.score_window(prev.goals.as_ref());
            fresh = Some(l);
            if self.records_sft() && self.cadence == SftCadence::PerGeneration {
                if let (Some(c), Some(d)) = (&prev.summary, sft) {
                    let score = (!self.ablations.contains(&Ablation::NoLScore)).then_some(ComprehensionScore(l));
                    record_sft_pair(d, &prev.context, score, c, t)?;
                    self.counters.sft_pairs += 1;
                }
            }
            self.buffer.window.clear();
        }
        let l = ComprehensionScore(fresh.unwrap_or(0.0));
        let view = self.view(world, obs);
        let id = self.counters.generations;
        let seed = derive_seed(self.seed, STREAM_LLM, id);
        let (summary, goals) =
            generation_step(&view, &self.backends, &self.ablations, l, seed, self.buffer.last.as_ref(), &mut self.counters);
        if goals.as_ref() != self.current_goals() {
            self.goal_embedding = match &goals {
                Some(g) => self.embedder.embed(&join_goals(g.as_slice())).unwrap_or_else(|e| {
                    log::warn!("goal embedding unavailable: {e}");
                    self.goal_embedding.clone()
                }),
                None => EmbeddingVector::zeros(self.embedder.dim()),
            };
        }
        self.buffer.last = Some(Generation { id, tick: t, summary, goals, score: l, context: view });
        self.counters.generations += 1;
        Ok(fresh)
    }

    pub fn after_step(
        &mut self,
        t: u64,
        action: Action,
        before: &Observation,
        result: &StepResult,
        sft: Option<&mut SftDataset>,
    ) -> Result<(), RunError> {
        self.past_action = Some(action);
        if !self.llm_enabled() {
            return Ok(());
        }
        self.buffer.window.push(TrajectoryStep {
            tick: t,
            action,
            unlocks: result.unlocks.clone(),
            events: result.events.iter().map(|e| e.name.clone()).collect(),
        });
        self.buffer.push(Transition {
            observation: render_scene_text(before).sees_line(),
            action,
            next_observation: render_scene_text(&result.observation).sees_line(),
            reward: result.reward,
            goals: self.current_goals().cloned(),
        });
        if self.records_sft() && self.cadence == SftCadence::PerStep {
            if let (Some(prev), Some(d)) = (&self.buffer.last, sft) {
                if let Some(c) = &prev.summary {
                    let l = self.score_window(prev.goals.as_ref());
                    let score = (!self.ablations.contains(&Ablation::NoLScore)).then_some(ComprehensionScore(l));
                    record_sft_pair(d, &prev.context, score, c, t)?;
                    self.counters.sft_pairs += 1;
                }
            }
        }
        Ok(())
    }
}

/// What a training run leaves behind in memory.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub counters: Counters,
    pub episodes: Vec<EpisodeLog>,
    /// `(step, l')` for every closed generation window.
    pub comprehension: Vec<(u64, f64)>,
    pub sft: SftDataset,
    pub report: Option<EvalReport>,
}

struct RunFiles {
    dir: PathBuf,
    steps: BufWriter<File>,
    episodes: BufWriter<File>,
    frames: BufWriter<File>,
}

impl RunFiles {
    fn create(dir: &Path, config: &RunConfig) -> Result<Self, RunError> {
        let io = |path: PathBuf| move |source| RunError::Io { path, source };
        std::fs::create_dir_all(dir.join("checkpoints")).map_err(io(dir.join("checkpoints")))?;
        let resolved = dir.join("config-resolved.toml");
        std::fs::write(&resolved, config.to_toml_string()).map_err(io(resolved.clone()))?;
        let open = |name: &str| -> Result<BufWriter<File>, RunError> {
            let p = dir.join(name);
            Ok(BufWriter::new(File::create(&p).map_err(io(p.clone()))?))
        };
        let mut files = RunFiles { dir: dir.to_path_buf(), steps: open("steps.csv")?, episodes: open("episodes.jsonl")?, frames: open("policy-frames.jsonl")? };
        writeln!(files.steps, "{STEPS_HEADER}").map_err(io(dir.join("steps.csv")))?;
        Ok(files)
    }

    fn io_err(&self, name: &str) -> impl FnOnce(std::io::Error) -> RunError {
        let path = self.dir.join(name);
        move |source| RunError::Io { path, source }
    }

    fn flush(&mut self) -> Result<(), RunError> {
        self.steps.flush().map_err(self.io_err("steps.csv"))?;
        self.episodes.flush().map_err(self.io_err("episodes.jsonl"))?;
        self.frames.flush().map_err(self.io_err("policy-frames.jsonl"))
    }
}

/// Runs the full loop for `config.run.total_steps` steps. With `out_dir`
/// set, writes the resolved config, steps.csv, episodes.jsonl,
/// policy-frames.jsonl, checkpoints/, SFT snapshots, sft.jsonl and
/// eval-report.json there.
pub fn train(config: &RunConfig, out_dir: Option<&Path>) -> Result<TrainOutcome, RunError> {
    config.validate()?;
    let seed = config.run.seed;
    let mut files = out_dir.map(|d| RunFiles::create(d, config)).transpose()?;

    let mut episode = 0u64;
    let mut episode_seed = derive_seed(seed, STREAM_WORLD, episode);
    let mut world = WorldState::new(config.env.clone(), episode_seed);
    let mut obs = world.observation();
    let mut params = PolicyParams::new(config.feature_len(), config.ppo.hidden_width, derive_seed(seed, STREAM_POLICY, 0));
    let mut trainer = PpoTrainer::new(&params, config.ppo.clone(), derive_seed(seed, STREAM_PPO, 0));
    let mut act_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_ACT, 0));
    let mut driver = GoalDriver::new(config, seed);
    let mut sft = SftDataset::with_capacity(config.sft.capacity);
    let mut rollout = Rollout::default();
    let mut features = vec![0.0f32; config.feature_len()];

    let mut episodes = Vec::new();
    let mut comprehension = Vec::new();
    let mut current = EpisodeLog { episode, seed: episode_seed, end_step: 0, length: 0, episode_return: 0.0, unlocks: vec![], impossible_actions: 0 };

    for t in 0..config.run.total_steps {
        let fresh = driver.before_step(t, &world, &obs, Some(&mut sft))?;
        if let Some(l) = fresh {
            comprehension.push((t, l));
        }
        let generated = driver.llm_enabled() && should_query(t, config.run.n_gen);

        encode_obs_into(&obs, &mut features);
        encode_goal_into(driver.goal_embedding(), &mut features[OBS_FEATURES..]);
        let out = params.act(&features, &mut act_rng)?;
        if let Some(f) = files.as_mut() {
            if config.run.policy_frame_interval > 0 && t % config.run.policy_frame_interval == 0 {
                let frame = PolicyFrame { step: t, probs: out.probs.to_vec() };
                serde_json::to_writer(&mut f.frames, &frame).expect("frame serializes");
                writeln!(f.frames).map_err(f.io_err("policy-frames.jsonl"))?;
            }
        }
        if !world.feasible(out.action) {
            current.impossible_actions += 1;
        }
        let result = world.step(out.action)?;
        driver.after_step(t, out.action, &obs, &result, Some(&mut sft))?;

        current.length += 1;
        current.episode_return += result.reward;
        current.unlocks.extend(result.unlocks.iter().copied());
        rollout.steps.push(RolloutStep {
            features: features.clone(),
            action: out.action,
            log_prob: out.log_prob,
            value: out.value,
            reward: result.reward,
            done: result.done,
            goal_id: driver.counters.generations,
        });
        let (reward, done, episode_return) = (result.reward, result.done, current.episode_return);
        let row_episode = episode;

        if done {
            current.end_step = t;
            if let Some(f) = files.as_mut() {
                serde_json::to_writer(&mut f.episodes, &current).expect("episode log serializes");
                writeln!(f.episodes).map_err(f.io_err("episodes.jsonl"))?;
            }
            episodes.push(current);
            driver.counters.episodes += 1;
            episode += 1;
            episode_seed = derive_seed(seed, STREAM_WORLD, episode);
            obs = world.reset(episode_seed);
            driver.reset_episode();
            current = EpisodeLog { episode, seed: episode_seed, end_step: 0, length: 0, episode_return: 0.0, unlocks: vec![], impossible_actions: 0 };
        } else {
            obs = result.observation;
        }

        if rollout.len() == config.ppo.horizon {
            rollout.bootstrap_value = if done {
                0.0
            } else {
                encode_obs_into(&obs, &mut features);
                encode_goal_into(driver.goal_embedding(), &mut features[OBS_FEATURES..]);
                params.evaluate(&features)?.1
            };
            let stats = trainer.update(&mut params, &rollout).map_err(|source| RunError::Ppo { step: t, source })?;
            log::debug!("step {}: {stats:?}", t + 1);
            rollout.steps.clear();
            driver.counters.ppo_updates += 1;
        }

        if driver.llm_enabled() {
            let outcome = maybe_finetune(
                t + 1,
                config.sft.interval,
                &mut driver.backends.adapter,
                &mut sft,
                out_dir,
                config.sft.hook_url.as_deref(),
            );
            if outcome == FinetuneOutcome::Triggered {
                driver.counters.sft_triggers += 1;
            }
        }

        if let Some(f) = files.as_mut() {
            let c = &driver.counters;
            let l = fresh.map(fmt_sig).unwrap_or_default();
            writeln!(
                f.steps,
                "{t},{row_episode},{},{},{},{l},{},{},{},{},{},{},{}",
                fmt_sig(reward),
                fmt_sig(episode_return),
                done as u8,
                generated as u8,
                c.adapter_calls,
                c.decision_calls,
                c.dropped_queries,
                c.sft_pairs,
                c.sft_triggers,
                c.ppo_updates,
            )
            .map_err(f.io_err("steps.csv"))?;
            let interval = config.run.checkpoint_interval;
            if interval > 0 && (t + 1) % interval == 0 {
                let path = f.dir.join("checkpoints").join(format!("step-{}.ckpt", t + 1));
                save_checkpoint(&path, &params, config.embed.dimension, &config.fingerprint(), t + 1)?;
            }
        }
        if (t + 1) % 10_000 == 0 {
            log::info!("step {} | episodes {} | {:?}", t + 1, episodes.len(), driver.counters);
        }
    }

    let mut report = None;
    if let Some(f) = files.as_mut() {
        f.flush()?;
        let final_path = f.dir.join("checkpoints").join("final.ckpt");
        save_checkpoint(&final_path, &params, config.embed.dimension, &config.fingerprint(), config.run.total_steps)?;
        export_sft_jsonl(&sft, &f.dir.join("sft.jsonl"))?;
        if config.eval.train_report_episodes > 0 {
            let r = evalkit::evaluate(&params, None, config, config.eval.train_report_episodes)?;
            let path = f.dir.join("eval-report.json");
            std::fs::write(&path, serde_json::to_string_pretty(&r).expect("report serializes"))
                .map_err(|source| RunError::Io { path, source })?;
            report = Some(r);
        }
    }
    Ok(TrainOutcome { params, counters: driver.counters, episodes, comprehension, sft, report })
}
