//! Monte Carlo gradient estimators. Every function returns gradients of a
//! loss, so the optimizer always descends; ascent objectives are negated.

use alloc::vec::Vec;

use super::config::{BaselineState, EntropyMode, TrainConfig, TrainMode};
use crate::metrics::{CiderStats, Metric};
use crate::numerics::kernels::sigmoid;
use crate::numerics::{Grads, Rng, Tape, Var};
use crate::policy::{Album, Policy, Story, TokenId, STORY_LEN};
use crate::reward::RewardModel;
use crate::{Error, Result};

/// A story paired with the features it describes.
#[derive(Clone, Copy, Debug)]
pub struct StoryRef<'a> {
    pub story: &'a Story,
    pub features: &'a [Vec<f64>; STORY_LEN],
}

/// One sampled story and its reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub story: Story,
    pub log_prob: f64,
    pub reward: f64,
    pub partials: [f64; STORY_LEN],
}

pub fn sample_episode(
    policy: &Policy,
    reward: &RewardModel,
    features: &[Vec<f64>; STORY_LEN],
    rng: &mut Rng,
) -> Result<Episode> {
    let (story, log_prob) = policy.sample_story(features, rng, 1.0)?;
    let (r, partials) = reward.story_reward(&story, features)?;
    Ok(Episode {
        story,
        log_prob,
        reward: r,
        partials,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolicyStepStats {
    /// Negated estimate of the objective on this batch.
    pub loss: f64,
    pub mean_reward: f64,
    pub mean_log_prob: f64,
    /// Baseline after the update.
    pub baseline: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardStepStats {
    pub loss: f64,
    pub mean_real: f64,
    pub mean_fake: f64,
}

/// Records `log π` of every sub-story of `story`; returns the per-slot
/// nodes, their sum and the number of sampled decisions.
fn record_story_log_prob(
    policy: &Policy,
    tape: &mut Tape<'_>,
    story: &Story,
    features: &[Vec<f64>; STORY_LEN],
) -> Result<([Var; STORY_LEN], f64, usize)> {
    let lps = policy.record_log_probs(tape, features, story, None)?;
    let total: f64 = lps.iter().map(|l| tape.scalar(l.log_prob)).sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("story log-probability"));
    }
    let tokens = lps.iter().map(|l| l.tokens).sum();
    Ok((core::array::from_fn(|i| lps[i].log_prob), total, tokens))
}

/// REINFORCE on `E_π[R] + λ H(π)` for a batch of feature sequences.
///
/// Each sampled story gets weight `R(W) - λ h(W) - b`, where `h` is
/// `log π(W)` (whole story) or its per-token mean. With
/// `partial_rewards`, sub-story `i` uses its own partial reward in place of
/// `R(W)`. The baseline then moves toward the batch's mean story reward.
pub fn policy_gradient(
    policy: &Policy,
    reward: &RewardModel,
    batch: &[&[Vec<f64>; STORY_LEN]],
    baseline: &mut BaselineState,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Grads, PolicyStepStats)> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let store = policy.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    let scale = 1.0 / batch.len() as f64;
    let lambda = config.entropy_weight;
    let mut stats = PolicyStepStats::default();
    for features in batch {
        let ep = sample_episode(policy, reward, features, rng)?;
        tape.clear();
        let (slots, lp, tokens) = record_story_log_prob(policy, &mut tape, &ep.story, features)?;
        let h = match config.entropy_mode {
            EntropyMode::WholeStory => lp,
            EntropyMode::PerTokenMean => lp / tokens.max(1) as f64,
        };
        let terms: Vec<(Var, f64)> = (0..STORY_LEN)
            .map(|i| {
                let r = if config.partial_rewards { ep.partials[i] } else { ep.reward };
                (slots[i], -scale * (r - lambda * h - baseline.b))
            })
            .collect();
        let out = tape.weighted_sum(&terms);
        tape.backward(out, &mut grads);
        stats.loss -= scale * (ep.reward - lambda * h);
        stats.mean_reward += scale * ep.reward;
        stats.mean_log_prob += scale * lp;
    }
    baseline.update(stats.mean_reward);
    stats.baseline = baseline.b;
    Ok((grads, stats))
}

/// Accumulates `sum_k coef_k ∂R(W_k)/∂θ` (or of the story logit).
fn accumulate_reward(reward: &RewardModel, batch: &[StoryRef<'_>], coefs: &[f64], logit: bool) -> Result<Grads> {
    let store = reward.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    for (item, &c) in batch.iter().zip(coefs) {
        tape.clear();
        let out = if logit {
            let mut terms = Vec::with_capacity(STORY_LEN);
            for (sub, f) in item.story.subs().iter().zip(item.features) {
                terms.push((reward.record_logit(&mut tape, sub, f)?, c / STORY_LEN as f64));
            }
            tape.weighted_sum(&terms)
        } else {
            let (total, _) = reward.record_story(&mut tape, item.story, item.features)?;
            tape.weighted_sum(&[(total, c)])
        };
        tape.backward(out, &mut grads);
    }
    Ok(grads)
}

/// Gradient of `-(mean_real R - mean_fake R)`: descending it raises the
/// reward of real stories and lowers it on samples.
///
/// The two halves are accumulated separately and subtracted at the end, so
/// identical batches give an exactly zero gradient.
pub fn reward_gradient(reward: &RewardModel, real: &[StoryRef<'_>], fake: &[StoryRef<'_>]) -> Result<(Grads, RewardStepStats)> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mean = |batch: &[StoryRef<'_>]| -> Result<f64> {
        let mut s = 0.0;
        for item in batch {
            s += reward.story_reward(item.story, item.features)?.0;
        }
        Ok(s / batch.len() as f64)
    };
    let (mean_real, mean_fake) = (mean(real)?, mean(fake)?);
    let real_coefs = alloc::vec![1.0 / real.len() as f64; real.len()];
    let fake_coefs = alloc::vec![1.0 / fake.len() as f64; fake.len()];
    let mut grads = accumulate_reward(reward, fake, &fake_coefs, false)?;
    let real_grads = accumulate_reward(reward, real, &real_coefs, false)?;
    grads.add_scaled(&real_grads, -1.0);
    Ok((
        grads,
        RewardStepStats {
            loss: mean_fake - mean_real,
            mean_real,
            mean_fake,
        },
    ))
}

/// Discriminator probability from a story logit.
pub fn gan_d(logit: f64) -> f64 {
    sigmoid(logit)
}

/// Generator loss of one story: `-log D` (GAN1) or `log(1 - D)` (GAN2).
pub fn gan_policy_weight(mode: TrainMode, d: f64) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Invalid("discriminator output must lie in (0, 1)".into()));
    }
    match mode {
        TrainMode::Gan1 => Ok(-libm::log(d)),
        TrainMode::Gan2 => Ok(libm::log1p(-d)),
        _ => Err(Error::Config("GAN weights need mode gan1 or gan2".into())),
    }
}

/// REINFORCE on the GAN generator loss, with the baseline tracking the
/// mean loss.
pub fn gan_policy_gradient(
    policy: &Policy,
    reward: &RewardModel,
    batch: &[&[Vec<f64>; STORY_LEN]],
    baseline: &mut BaselineState,
    mode: TrainMode,
    rng: &mut Rng,
) -> Result<(Grads, PolicyStepStats)> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let store = policy.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    let scale = 1.0 / batch.len() as f64;
    let mut stats = PolicyStepStats::default();
    for features in batch {
        let (story, _) = policy.sample_story(features, rng, 1.0)?;
        let d = gan_d(reward.story_logit(&story, features)?);
        let loss = gan_policy_weight(mode, d)?;
        tape.clear();
        let (slots, lp, _) = record_story_log_prob(policy, &mut tape, &story, features)?;
        let terms: Vec<(Var, f64)> = slots.iter().map(|&v| (v, scale * (loss - baseline.b))).collect();
        let out = tape.weighted_sum(&terms);
        tape.backward(out, &mut grads);
        stats.loss += scale * loss;
        stats.mean_reward += scale * reward.story_reward(&story, features)?.0;
        stats.mean_log_prob += scale * lp;
    }
    baseline.update(stats.loss);
    stats.baseline = baseline.b;
    Ok((grads, stats))
}

/// Binary cross-entropy discriminator update on `D = σ(mean logit)`.
pub fn gan_reward_gradient(reward: &RewardModel, real: &[StoryRef<'_>], fake: &[StoryRef<'_>]) -> Result<(Grads, RewardStepStats)> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats = RewardStepStats::default();
    let mut real_coefs = Vec::with_capacity(real.len());
    for item in real {
        let d = gan_d(reward.story_logit(item.story, item.features)?);
        stats.loss -= libm::log(d) / real.len() as f64;
        stats.mean_real += reward.story_reward(item.story, item.features)?.0 / real.len() as f64;
        real_coefs.push((1.0 - d) / real.len() as f64);
    }
    let mut fake_coefs = Vec::with_capacity(fake.len());
    for item in fake {
        let d = gan_d(reward.story_logit(item.story, item.features)?);
        stats.loss -= libm::log1p(-d) / fake.len() as f64;
        stats.mean_fake += reward.story_reward(item.story, item.features)?.0 / fake.len() as f64;
        fake_coefs.push(d / fake.len() as f64);
    }
    let mut grads = accumulate_reward(reward, fake, &fake_coefs, true)?;
    let real_grads = accumulate_reward(reward, real, &real_coefs, true)?;
    grads.add_scaled(&real_grads, -1.0);
    Ok((grads, stats))
}

/// REINFORCE with the story-level metric score against all references as
/// the return.
pub fn metric_rl_gradient(
    policy: &Policy,
    batch: &[&Album],
    metric: Metric,
    stats: Option<&CiderStats<TokenId>>,
    baseline: &mut BaselineState,
    rng: &mut Rng,
) -> Result<(Grads, PolicyStepStats)> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let store = policy.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    let scale = 1.0 / batch.len() as f64;
    let mut out_stats = PolicyStepStats::default();
    for album in batch {
        let (story, _) = policy.sample_story(&album.features, rng, 1.0)?;
        let ret = metric.score(&story.flat_words(), &album.reference_words(), stats);
        tape.clear();
        let (slots, lp, _) = record_story_log_prob(policy, &mut tape, &story, &album.features)?;
        let terms: Vec<(Var, f64)> = slots.iter().map(|&v| (v, -scale * (ret - baseline.b))).collect();
        let out = tape.weighted_sum(&terms);
        tape.backward(out, &mut grads);
        out_stats.loss -= scale * ret;
        out_stats.mean_reward += scale * ret;
        out_stats.mean_log_prob += scale * lp;
    }
    baseline.update(out_stats.mean_reward);
    out_stats.baseline = baseline.b;
    Ok((grads, out_stats))
}

/// Mean negative log-likelihood of reference stories, with decoder inputs
/// replaced by model samples with probability `ss_prob`.
pub fn xe_gradient(policy: &Policy, batch: &[StoryRef<'_>], ss_prob: f64, rng: &mut Rng) -> Result<(Grads, f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let store = policy.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for item in batch {
        tape.clear();
        let scheduled = if ss_prob > 0.0 { Some((&mut *rng, ss_prob)) } else { None };
        let lps = policy.record_log_probs(&mut tape, item.features, item.story, scheduled)?;
        let terms: Vec<(Var, f64)> = lps.iter().map(|l| (l.log_prob, -scale)).collect();
        let out = tape.weighted_sum(&terms);
        let v = tape.scalar(out);
        if !v.is_finite() {
            return Err(Error::NonFinite("cross-entropy loss"));
        }
        loss += v;
        tape.backward(out, &mut grads);
    }
    Ok((grads, loss))
}
