//! Training loops. Each episode is one optimizer update of one player and
//! emits one [`LogRecord`].

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::config::{BaselineState, TrainConfig, TrainMode};
use super::estimators::{
    gan_policy_gradient, gan_reward_gradient, metric_rl_gradient, policy_gradient, reward_gradient, xe_gradient,
    PolicyStepStats, RewardStepStats, StoryRef,
};
use super::log::{LogRecord, Phase};
use crate::metrics::{CiderStats, Metric};
use crate::numerics::{rng_from_seed, Adam, AdamConfig, Grads, ParamStore, Rng};
use crate::policy::{Album, Policy, Story, STORY_LEN};
use crate::reward::RewardModel;
use crate::{Error, Result};

/// Receives log records as they are produced and supplies wall-clock time.
pub trait Observer {
    /// Milliseconds on any monotone clock; the default reports 0.
    fn now_ms(&mut self) -> u64 {
        0
    }

    fn record(&mut self, record: &LogRecord) -> Result<()>;
}

/// Collects records in memory, without a clock.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordLog(pub Vec<LogRecord>);

impl Observer for RecordLog {
    fn record(&mut self, record: &LogRecord) -> Result<()> {
        self.0.push(record.clone());
        Ok(())
    }
}

/// Scheduled-sampling probability for `epoch` (0-based): linear from 0 on
/// the first epoch to `max` on the last.
pub fn scheduled_sampling_prob(epoch: usize, epochs: usize, max: f64) -> f64 {
    if epochs <= 1 {
        0.0
    } else {
        max * epoch.min(epochs - 1) as f64 / (epochs - 1) as f64
    }
}

/// Cycles through the corpus in a fresh random order on every pass.
struct Batcher {
    order: Vec<usize>,
    pos: usize,
}

impl Batcher {
    fn new(n: usize, rng: &mut Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, pos: 0 }
    }

    fn next(&mut self, size: usize, rng: &mut Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

fn pick_reference<'a>(album: &'a Album, rng: &mut Rng) -> Result<&'a Story> {
    if album.references.is_empty() {
        return Err(Error::InvalidAlbum(format!("album {} has no references", album.id)));
    }
    Ok(&album.references[rng.gen_range(0..album.references.len())])
}

fn apply(store: &mut ParamStore, adam: &mut Adam, grads: Grads) -> Result<()> {
    store.put_grads(grads);
    adam.step(store)
}

fn check(corpus: &[Album], config: &TrainConfig) -> Result<()> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

fn adam_config(lr: f64) -> AdamConfig {
    AdamConfig {
        lr,
        ..AdamConfig::default()
    }
}

fn mean_story_reward(reward: &RewardModel, items: &[StoryRef<'_>]) -> Result<f64> {
    let mut s = 0.0;
    for it in items {
        s += reward.story_reward(it.story, it.features)?.0;
    }
    Ok(s / items.len() as f64)
}

/// Cross-entropy training on reference stories with scheduled sampling.
/// One episode per batch; every album contributes one randomly chosen
/// reference per epoch.
pub fn xe_ss_train(policy: &mut Policy, corpus: &[Album], config: &TrainConfig, obs: &mut dyn Observer) -> Result<()> {
    check(corpus, config)?;
    let mut rng = rng_from_seed(config.seed);
    let mut adam = Adam::new(policy.store(), adam_config(config.lr));
    let start = obs.now_ms();
    let mode = format!("{}/{}", TrainMode::XeSs.name(), Phase::Xe.name());
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut episode = 0u64;
    for epoch in 0..config.epochs {
        let p = scheduled_sampling_prob(epoch, config.epochs, config.ss_max);
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &i in chunk {
                batch.push(StoryRef {
                    story: pick_reference(&corpus[i], &mut rng)?,
                    features: &corpus[i].features,
                });
            }
            let (grads, loss) = xe_gradient(policy, &batch, p, &mut rng)?;
            apply(policy.store_mut(), &mut adam, grads)?;
            episode += 1;
            let wall_ms = obs.now_ms().saturating_sub(start);
            obs.record(&LogRecord {
                episode,
                mode: mode.clone(),
                loss,
                mean_reward_real: 0.0,
                mean_reward_fake: 0.0,
                baseline: 0.0,
                wall_ms,
            })?;
        }
    }
    Ok(())
}

/// Phase of `episode` (0-based) under alternation period `n`: `n` policy
/// episodes, then `n` reward episodes, repeating.
pub fn phase_of(episode: usize, n: usize) -> Phase {
    if (episode / n) % 2 == 0 {
        Phase::Policy
    } else {
        Phase::Reward
    }
}

/// The adversarial loop shared by AREL and the GAN baselines.
fn adversarial_train(
    policy: &mut Policy,
    reward: &mut RewardModel,
    corpus: &[Album],
    config: &TrainConfig,
    obs: &mut dyn Observer,
) -> Result<()> {
    check(corpus, config)?;
    let mut rng = rng_from_seed(config.seed);
    let mut adam_p = Adam::new(policy.store(), adam_config(config.lr));
    let mut adam_r = Adam::new(reward.store(), adam_config(config.reward_lr.unwrap_or(config.lr)));
    let mut baseline = BaselineState::new(config.baseline_decay);
    let mut batcher = Batcher::new(corpus.len(), &mut rng);
    let start = obs.now_ms();
    for e in 0..config.episodes {
        let phase = phase_of(e, config.alternation_period);
        let idx = batcher.next(config.batch_size, &mut rng);
        let mut real = Vec::with_capacity(idx.len());
        for &i in &idx {
            real.push(StoryRef {
                story: pick_reference(&corpus[i], &mut rng)?,
                features: &corpus[i].features,
            });
        }
        let (loss, mean_real, mean_fake) = match phase {
            Phase::Policy => {
                let feats: Vec<&[Vec<f64>; STORY_LEN]> = idx.iter().map(|&i| &corpus[i].features).collect();
                let (grads, st): (Grads, PolicyStepStats) = match config.mode {
                    TrainMode::Arel => policy_gradient(policy, reward, &feats, &mut baseline, config, &mut rng)?,
                    m @ (TrainMode::Gan1 | TrainMode::Gan2) => {
                        gan_policy_gradient(policy, reward, &feats, &mut baseline, m, &mut rng)?
                    }
                    m => return Err(Error::Config(format!("{} is not an adversarial mode", m.name()))),
                };
                apply(policy.store_mut(), &mut adam_p, grads)?;
                (st.loss, mean_story_reward(reward, &real)?, st.mean_reward)
            }
            _ => {
                let mut fakes = Vec::with_capacity(idx.len());
                for &i in &idx {
                    fakes.push(policy.sample_story(&corpus[i].features, &mut rng, 1.0)?.0);
                }
                let fake: Vec<StoryRef<'_>> = idx
                    .iter()
                    .zip(&fakes)
                    .map(|(&i, story)| StoryRef {
                        story,
                        features: &corpus[i].features,
                    })
                    .collect();
                let (grads, st): (Grads, RewardStepStats) = match config.mode {
                    TrainMode::Arel => reward_gradient(reward, &real, &fake)?,
                    _ => gan_reward_gradient(reward, &real, &fake)?,
                };
                apply(reward.store_mut(), &mut adam_r, grads)?;
                (st.loss, st.mean_real, st.mean_fake)
            }
        };
        let wall_ms = obs.now_ms().saturating_sub(start);
        obs.record(&LogRecord {
            episode: e as u64 + 1,
            mode: format!("{}/{}", config.mode.name(), phase.name()),
            loss,
            mean_reward_real: mean_real,
            mean_reward_fake: mean_fake,
            baseline: baseline.b,
            wall_ms,
        })?;
    }
    Ok(())
}

/// Alternates policy and reward updates with the Boltzmann objective.
pub fn arel_train(
    policy: &mut Policy,
    reward: &mut RewardModel,
    corpus: &[Album],
    config: &TrainConfig,
    obs: &mut dyn Observer,
) -> Result<()> {
    if config.mode != TrainMode::Arel {
        return Err(Error::Config("arel_train needs mode arel".into()));
    }
    adversarial_train(policy, reward, corpus, config, obs)
}

/// GAN baseline: logistic discriminator and the GAN1/GAN2 generator loss.
pub fn gan_train(
    policy: &mut Policy,
    reward: &mut RewardModel,
    corpus: &[Album],
    config: &TrainConfig,
    obs: &mut dyn Observer,
) -> Result<()> {
    if !matches!(config.mode, TrainMode::Gan1 | TrainMode::Gan2) {
        return Err(Error::Config("gan_train needs mode gan1 or gan2".into()));
    }
    adversarial_train(policy, reward, corpus, config, obs)
}

/// REINFORCE on a metric; every episode updates the policy.
pub fn metric_rl_train(policy: &mut Policy, corpus: &[Album], config: &TrainConfig, obs: &mut dyn Observer) -> Result<()> {
    check(corpus, config)?;
    let TrainMode::MetricRl(metric) = config.mode else {
        return Err(Error::Config("metric_rl_train needs mode metric-rl".into()));
    };
    let stats = match metric {
        Metric::Cider => {
            let refs: Vec<_> = corpus.iter().map(|a| a.reference_words()).collect();
            Some(CiderStats::new(&refs))
        }
        _ => None,
    };
    let mut rng = rng_from_seed(config.seed);
    let mut adam = Adam::new(policy.store(), adam_config(config.lr));
    let mut baseline = BaselineState::new(config.baseline_decay);
    let mut batcher = Batcher::new(corpus.len(), &mut rng);
    let start = obs.now_ms();
    let mode = format!("{}/{}", config.mode.name(), Phase::Policy.name());
    for e in 0..config.episodes {
        let batch: Vec<&Album> = batcher.next(config.batch_size, &mut rng).into_iter().map(|i| &corpus[i]).collect();
        let (grads, st) = metric_rl_gradient(policy, &batch, metric, stats.as_ref(), &mut baseline, &mut rng)?;
        apply(policy.store_mut(), &mut adam, grads)?;
        let wall_ms = obs.now_ms().saturating_sub(start);
        obs.record(&LogRecord {
            episode: e as u64 + 1,
            mode: mode.clone(),
            loss: st.loss,
            mean_reward_real: 0.0,
            mean_reward_fake: st.mean_reward,
            baseline: baseline.b,
            wall_ms,
        })?;
    }
    Ok(())
}

/// Dispatches on `config.mode`.
pub fn train(
    policy: &mut Policy,
    reward: &mut RewardModel,
    corpus: &[Album],
    config: &TrainConfig,
    obs: &mut dyn Observer,
) -> Result<()> {
    match config.mode {
        TrainMode::XeSs => xe_ss_train(policy, corpus, config, obs),
        TrainMode::Arel => arel_train(policy, reward, corpus, config, obs),
        TrainMode::Gan1 | TrainMode::Gan2 => gan_train(policy, reward, corpus, config, obs),
        TrainMode::MetricRl(_) => metric_rl_train(policy, corpus, config, obs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends_at_max() {
        assert_eq!(scheduled_sampling_prob(0, 5, 0.25), 0.0);
        assert_eq!(scheduled_sampling_prob(4, 5, 0.25), 0.25);
        assert!((scheduled_sampling_prob(2, 5, 0.25) - 0.125).abs() < 1e-15);
        assert_eq!(scheduled_sampling_prob(0, 1, 0.25), 0.0);
    }

    #[test]
    fn alternation_blocks() {
        let phases: Vec<Phase> = (0..6).map(|e| phase_of(e, 2)).collect();
        assert_eq!(
            phases,
            [Phase::Policy, Phase::Policy, Phase::Reward, Phase::Reward, Phase::Policy, Phase::Policy]
        );
    }
}
