//! Exact quantities on story spaces small enough to enumerate.

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{Tape, Var};
use crate::policy::{Policy, Story, SubStory, TokenId, EOS, STORY_LEN, UNK};
use crate::reward::RewardModel;
use crate::{Error, Result};

/// Default upper bound on the number of enumerated stories.
pub const DEFAULT_CAP: usize = 1 << 20;

fn check_cap(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::SpaceTooLarge { size, cap })
    } else {
        Ok(())
    }
}

/// `log sum_k exp(r_k)`, computed stably.
pub fn log_partition(rewards: &[f64]) -> f64 {
    let m = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + libm::log(rewards.iter().map(|r| libm::exp(r - m)).sum::<f64>())
}

/// `p(W) = exp(R(W)) / Z` over an explicitly listed space.
pub fn boltzmann(rewards: &[f64], cap: usize) -> Result<Vec<f64>> {
    check_cap(rewards.len(), cap)?;
    if rewards.is_empty() {
        return Err(Error::Invalid("empty story space".into()));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("reward"));
    }
    let log_z = log_partition(rewards);
    Ok(rewards.iter().map(|r| libm::exp(r - log_z)).collect())
}

/// Both sides of `-KL(π || p) = E_π[R] - log Z + H(π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactObjective {
    /// `-KL(π || p)` summed term by term.
    pub neg_kl: f64,
    pub expected_reward: f64,
    pub log_z: f64,
    pub entropy: f64,
}

impl ExactObjective {
    pub fn decomposed(&self) -> f64 {
        self.expected_reward - self.log_z + self.entropy
    }
}

/// `policy` holds `π(W)` for every story of the space, `rewards` holds
/// `R(W)` in the same order.
pub fn policy_objective_exact(policy: &[f64], rewards: &[f64], cap: usize) -> Result<ExactObjective> {
    if policy.len() != rewards.len() {
        return Err(Error::Shape("policy and reward tables differ in length".into()));
    }
    let p = boltzmann(rewards, cap)?;
    let log_z = log_partition(rewards);
    let (mut neg_kl, mut expected_reward, mut entropy) = (0.0, 0.0, 0.0);
    for ((&q, &pk), &r) in policy.iter().zip(&p).zip(rewards) {
        if !(q >= 0.0) {
            return Err(Error::Invalid("policy probabilities must be non-negative".into()));
        }
        if q == 0.0 {
            continue;
        }
        let lq = libm::log(q);
        neg_kl -= q * (lq - libm::log(pk));
        expected_reward += q * r;
        entropy -= q * lq;
    }
    Ok(ExactObjective {
        neg_kl,
        expected_reward,
        log_z,
        entropy,
    })
}

/// Every sub-story of at most `max_sub_len` tokens (EOS included) over the
/// word ids `UNK..vocab`, shortest first.
pub fn enumerate_sub_stories(vocab: usize, max_sub_len: usize, cap: usize) -> Result<Vec<SubStory>> {
    let words: Vec<TokenId> = (UNK..vocab as TokenId).collect();
    if max_sub_len == 0 {
        return Err(Error::Config("sub-stories need room for EOS".into()));
    }
    let mut layer: Vec<Vec<TokenId>> = vec![Vec::new()];
    let mut all = Vec::new();
    for len in 0..max_sub_len {
        for w in &layer {
            check_cap(all.len() + 1, cap)?;
            let mut t = w.clone();
            t.push(EOS);
            all.push(SubStory::new(t)?);
        }
        if len + 1 < max_sub_len {
            let mut next = Vec::with_capacity(layer.len() * words.len());
            for w in &layer {
                for &x in &words {
                    let mut t = w.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            layer = next;
        }
    }
    Ok(all)
}

/// All stories over a sub-story list, with per-slot log-probabilities under
/// a policy and per-slot partial rewards under a reward model.
#[derive(Clone, Debug)]
pub struct StorySpace {
    pub subs: Vec<SubStory>,
    pub slot_log_probs: [Vec<f64>; STORY_LEN],
    pub slot_partials: [Vec<f64>; STORY_LEN],
}

impl StorySpace {
    pub fn build(policy: &Policy, reward: &RewardModel, features: &[Vec<f64>; STORY_LEN], cap: usize) -> Result<Self> {
        let dims = policy.dims();
        let subs = enumerate_sub_stories(dims.vocab, dims.max_sub_len, cap)?;
        let size = subs.len().checked_pow(STORY_LEN as u32).unwrap_or(usize::MAX);
        check_cap(size, cap)?;
        let contexts = policy.encode(features)?;
        let mut slot_log_probs: [Vec<f64>; STORY_LEN] = Default::default();
        let mut slot_partials: [Vec<f64>; STORY_LEN] = Default::default();
        for i in 0..STORY_LEN {
            for sub in &subs {
                slot_log_probs[i].push(policy.sub_story_log_prob(&contexts[i], sub)?);
                slot_partials[i].push(reward.partial_reward(sub, &features[i])?);
            }
        }
        Ok(Self {
            subs,
            slot_log_probs,
            slot_partials,
        })
    }

    pub fn len(&self) -> usize {
        self.subs.len().pow(STORY_LEN as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    /// Sub-story index of each slot for story `k` (slot 0 varies slowest).
    pub fn index(&self, mut k: usize) -> [usize; STORY_LEN] {
        let n = self.subs.len();
        let mut idx = [0; STORY_LEN];
        for slot in (0..STORY_LEN).rev() {
            idx[slot] = k % n;
            k /= n;
        }
        idx
    }

    pub fn story(&self, k: usize) -> Story {
        let idx = self.index(k);
        Story::from_array(core::array::from_fn(|i| self.subs[idx[i]].clone()))
    }

    /// `log π(W)` for every story.
    pub fn log_probs(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let idx = self.index(k);
                (0..STORY_LEN).map(|i| self.slot_log_probs[i][idx[i]]).sum()
            })
            .collect()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs().into_iter().map(libm::exp).collect()
    }

    /// Story rewards (mean of partials) for every story.
    pub fn rewards(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let idx = self.index(k);
                (0..STORY_LEN).map(|i| self.slot_partials[i][idx[i]]).sum::<f64>() / STORY_LEN as f64
            })
            .collect()
    }
}

/// Exact flat gradient of `E_π[R] + λ H(π)` with respect to the policy
/// parameters, by enumeration.
///
/// Every story contributes `π(W) (R(W) - λ log π(W)) ∇log π(W)`; because the
/// slots are conditionally independent, `∇log π(W)` splits into one term per
/// slot, so the story-level coefficients are summed per (slot, sub-story)
/// before any differentiation.
pub fn exact_policy_gradient(
    policy: &Policy,
    space: &StorySpace,
    features: &[Vec<f64>; STORY_LEN],
    entropy_weight: f64,
) -> Result<Vec<f64>> {
    let n = space.subs.len();
    let mut coef = [(); STORY_LEN].map(|_| vec![0.0; n]);
    let log_probs = space.log_probs();
    let rewards = space.rewards();
    for (k, (&lp, &r)) in log_probs.iter().zip(&rewards).enumerate() {
        let c = libm::exp(lp) * (r - entropy_weight * lp);
        for (slot, &s) in space.index(k).iter().enumerate() {
            coef[slot][s] += c;
        }
    }
    let store = policy.store();
    let mut grads = store.zero_grads();
    let mut tape = Tape::new(store);
    for (s, sub) in space.subs.iter().enumerate() {
        tape.clear();
        let story = Story::from_array(core::array::from_fn(|_| sub.clone()));
        let lps = policy.record_log_probs(&mut tape, features, &story, None)?;
        let terms: Vec<(Var, f64)> = (0..STORY_LEN).map(|i| (lps[i].log_prob, coef[i][s])).collect();
        let out = tape.weighted_sum(&terms);
        tape.backward(out, &mut grads);
    }
    Ok(grads.flat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_equal_rewards_split_evenly() {
        assert_eq!(boltzmann(&[0.0, 0.0], 10).unwrap(), vec![0.5, 0.5]);
        let p = boltzmann(&[libm::log(3.0), 0.0], 10).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(boltzmann(&[0.0; 5], 4), Err(Error::SpaceTooLarge { size: 5, cap: 4 })));
        assert!(enumerate_sub_stories(6, 3, 5).is_err());
    }

    #[test]
    fn vocab_three_length_two_matches_scalar_loop() {
        let subs = enumerate_sub_stories(6, 2, 100).unwrap();
        // EOS alone, then each of the three words followed by EOS.
        assert_eq!(subs.len(), 4);
        let rewards = [0.3, -0.7, 0.1, 0.9];
        let p = boltzmann(&rewards, 100).unwrap();
        let z: f64 = rewards.iter().map(|r| r.exp()).sum();
        for (pk, r) in p.iter().zip(rewards) {
            assert!((pk - r.exp() / z).abs() < 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_distributions_have_zero_objective() {
        let rewards = [0.2, -0.4, 0.9];
        let p = boltzmann(&rewards, 10).unwrap();
        let obj = policy_objective_exact(&p, &rewards, 10).unwrap();
        assert!(obj.neg_kl.abs() < 1e-15);
        assert!(obj.decomposed().abs() < 1e-15);

        let uniform = [0.25; 4];
        let obj = policy_objective_exact(&uniform, &[0.5; 4], 10).unwrap();
        assert!(obj.neg_kl.abs() < 1e-15 && obj.decomposed().abs() < 1e-15);
    }
}
