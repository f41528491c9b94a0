//! Deep Q-learning: network, optimizer, replay, exploration and the
//! training loop for the avatar controller.

mod adam;
mod checkpoint;
mod dqn;
mod env;
mod mlp;
mod policy;
mod replay;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta};
pub use dqn::{
    episode_seed, evaluate_policy, evaluation_seeds, td_target, train, DqnHyper, EpisodeLog,
    InputMap, Resume, TrainingLog,
};
pub use env::{KuramotoEnv, StepResult, TrainingScenario};
pub use mlp::{mlp_backward, ForwardCache, MlpParams, QTarget, Transposed, DEFAULT_LAYERS};
pub use policy::{argmax, select_action};
pub use replay::{ReplayBuffer, Transition, DEFAULT_CAPACITY};
