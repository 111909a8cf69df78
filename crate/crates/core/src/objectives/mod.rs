//! The adversarial objective and its baselines: the Boltzmann distribution
//! over stories, exact objectives on enumerable spaces, Monte Carlo gradient
//! estimators for both players, and the training loops.

mod config;
mod estimators;
pub mod exact;
mod log;
mod train;

pub use config::{BaselineState, EntropyMode, TrainConfig, TrainMode};
pub use estimators::{
    gan_d, gan_policy_gradient, gan_policy_weight, gan_reward_gradient, metric_rl_gradient, policy_gradient,
    reward_gradient, sample_episode, xe_gradient, Episode, PolicyStepStats, RewardStepStats, StoryRef,
};
pub use exact::{boltzmann, policy_objective_exact, ExactObjective};
pub use log::{LogRecord, Phase};
pub use train::{
    arel_train, gan_train, metric_rl_train, phase_of, scheduled_sampling_prob, train, xe_ss_train, Observer, RecordLog,
};
