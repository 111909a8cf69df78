use alloc::vec::Vec;

use rand::Rng as _;

use super::{CiderStats, Metric, MetricScores};
use crate::numerics::{rng_from_seed, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub metric: Metric,
    /// Number of proposed mutations.
    pub budget: usize,
    pub seed: u64,
    /// Hypotheses never grow past this many tokens.
    pub max_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackResult<T> {
    pub hypothesis: Vec<T>,
    /// Corpus-mean score under the targeted metric.
    pub target_score: f64,
    /// Corpus-mean score under every metric.
    pub scores: MetricScores,
    pub accepted: usize,
}

fn objective<T: Ord + Clone>(metric: Metric, hyp: &[T], targets: &[Vec<Vec<T>>], stats: &CiderStats<T>) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    targets.iter().map(|refs| metric.score(hyp, refs, Some(stats))).sum::<f64>() / targets.len() as f64
}

fn mutate<T: Clone>(hyp: &[T], tokens: &[T], max_len: usize, rng: &mut Rng) -> Vec<T> {
    let mut out = hyp.to_vec();
    let n = out.len();
    let pick = |rng: &mut Rng| tokens[rng.gen_range(0..tokens.len())].clone();
    match rng.gen_range(0..4u8) {
        0 if n < max_len => {
            let at = rng.gen_range(0..=n);
            out.insert(at, pick(rng));
        }
        1 if n > 1 => {
            out.remove(rng.gen_range(0..n));
        }
        3 if n > 1 => {
            let i = rng.gen_range(0..n - 1);
            out.swap(i, i + 1);
        }
        _ if n > 0 => {
            let at = rng.gen_range(0..n);
            out[at] = pick(rng);
        }
        _ => out.push(pick(rng)),
    }
    out
}

/// Stochastic hill climbing on one hypothesis shared by every album:
/// insert / delete / replace / swap mutations drawn from `tokens`, kept
/// whenever the corpus-mean target score does not decrease. The result
/// never scores below `seed_hyp`.
pub fn metric_attack<T: Ord + Clone>(
    config: &AttackConfig,
    targets: &[Vec<Vec<T>>],
    stats: &CiderStats<T>,
    tokens: &[T],
    seed_hyp: &[T],
) -> AttackResult<T> {
    let mut rng = rng_from_seed(config.seed);
    let mut best = seed_hyp.to_vec();
    let mut best_score = objective(config.metric, &best, targets, stats);
    let mut accepted = 0;
    if !tokens.is_empty() {
        for _ in 0..config.budget {
            let cand = mutate(&best, tokens, config.max_len.max(1), &mut rng);
            let s = objective(config.metric, &cand, targets, stats);
            if s >= best_score {
                best = cand;
                best_score = s;
                accepted += 1;
            }
        }
    }
    let per_album: Vec<MetricScores> = targets
        .iter()
        .map(|refs| MetricScores::compute(&best, refs, stats))
        .collect();
    AttackResult {
        scores: MetricScores::mean(&per_album),
        hypothesis: best,
        target_score: best_score,
        accepted,
    }
}
