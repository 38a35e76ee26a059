//! Goal-conditioned actor-critic trained with PPO.

mod checkpoint;
mod encode;
mod mlp;
mod ppo;

pub use checkpoint::{
    from_bytes, load_checkpoint, save_checkpoint, to_bytes, ArraySpec, CheckpointError, CheckpointHeader,
};
pub use encode::{
    encode_goal_into, encode_obs_into, encode_observation, feature_len, DimensionMismatch, CELL_ALPHABET,
    OBS_FEATURES, VIEW_FEATURES,
};
pub use mlp::{Adam, Dense, Mlp, Trace};
pub use ppo::{
    clipped_surrogate, gae, log_softmax, normalize_advantages, ppo_loss, ppo_loss_and_grads,
    surrogate_grad_log_prob, ActOutput, LossCoefs, LossTerms, PolicyError, PolicyParams, PpoError,
    PpoHyperparams, PpoStats, PpoTrainer, Rollout, RolloutStep, Sample, ACTION_COUNT,
};
