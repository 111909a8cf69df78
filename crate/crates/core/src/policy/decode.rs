use alloc::vec::Vec;

use super::model::Policy;
use super::story::{Story, SubStory, STORY_LEN};
use super::vocab::{TokenId, BOS, EOS};
use crate::{Error, Result};

fn check_limits(min_len: usize, max_len: usize) -> Result<()> {
    if min_len == 0 || min_len >= max_len {
        return Err(Error::Config(alloc::format!(
            "decoding needs 1 <= min_len < max_len, got {min_len} / {max_len}"
        )));
    }
    Ok(())
}

/// Whether `tok` may be emitted at 1-based position `t`; a finished
/// sentence holds between `min_len` and `max_len - 1` words.
fn allowed(tok: usize, t: usize, min_len: usize, max_len: usize) -> bool {
    if t == max_len {
        tok == EOS as usize
    } else {
        !(t <= min_len && tok == EOS as usize)
    }
}

/// Argmax decoding of one sentence; ties go to the smaller token id.
pub fn greedy_sub_story(policy: &Policy, context: &[f64], min_len: usize, max_len: usize) -> Result<SubStory> {
    check_limits(min_len, max_len)?;
    let mut state = policy.initial_state();
    let mut prev = BOS;
    let mut tokens = Vec::new();
    for t in 1..=max_len {
        let (next, logits) = policy.step(&state, prev, context)?;
        state = next;
        let lp = policy.log_probs(&logits);
        let mut best: Option<(usize, f64)> = None;
        for (tok, &v) in lp.iter().enumerate() {
            if v == f64::NEG_INFINITY || !allowed(tok, t, min_len, max_len) {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((tok, v));
            }
        }
        let (tok, _) = best.ok_or(Error::NonFinite("decoder distribution"))?;
        tokens.push(tok as TokenId);
        if tok == EOS as usize {
            break;
        }
        prev = tok as TokenId;
    }
    SubStory::new(tokens)
}

struct Hyp {
    tokens: Vec<TokenId>,
    state: Vec<f64>,
    log_prob: f64,
}

/// Beam search over one sentence.
///
/// Each step expands every live hypothesis, ranks candidates by summed
/// log-probability (ties: smaller token id, then earlier insertion) and keeps
/// the best `beam`; candidates ending in EOS retire to the finished set.
/// EOS is masked before `min_len` tokens and forced at `max_len`. The result
/// is the finished hypothesis with the highest per-token log-probability.
pub fn beam_search_sub_story(
    policy: &Policy,
    context: &[f64],
    beam: usize,
    min_len: usize,
    max_len: usize,
) -> Result<SubStory> {
    check_limits(min_len, max_len)?;
    if beam == 0 {
        return Err(Error::Config("beam must be at least 1".into()));
    }
    let mut live = alloc::vec![Hyp {
        tokens: Vec::new(),
        state: policy.initial_state(),
        log_prob: 0.0,
    }];
    let mut finished: Vec<(Vec<TokenId>, f64)> = Vec::new();
    for t in 1..=max_len {
        // (score, token, insertion order, parent, next state index)
        let mut cands: Vec<(f64, usize, usize, usize)> = Vec::new();
        let mut states = Vec::with_capacity(live.len());
        for (pi, h) in live.iter().enumerate() {
            let prev = h.tokens.last().copied().unwrap_or(BOS);
            let (next, logits) = policy.step(&h.state, prev, context)?;
            let lp = policy.log_probs(&logits);
            for (tok, &v) in lp.iter().enumerate() {
                if v == f64::NEG_INFINITY || !allowed(tok, t, min_len, max_len) {
                    continue;
                }
                let order = cands.len();
                cands.push((h.log_prob + v, tok, order, pi));
            }
            states.push(next);
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut next_live = Vec::with_capacity(beam);
        for &(score, tok, _, pi) in cands.iter().take(beam) {
            let mut tokens = live[pi].tokens.clone();
            tokens.push(tok as TokenId);
            if tok == EOS as usize {
                finished.push((tokens, score));
            } else {
                next_live.push(Hyp {
                    tokens,
                    state: states[pi].clone(),
                    log_prob: score,
                });
            }
        }
        live = next_live;
        if live.is_empty() {
            break;
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (tokens, score)) in finished.iter().enumerate() {
        let norm = score / tokens.len() as f64;
        if best.is_none_or(|(_, b)| norm > b) {
            best = Some((i, norm));
        }
    }
    let (i, _) = best.ok_or(Error::NonFinite("beam search produced no hypothesis"))?;
    SubStory::new(finished.swap_remove(i).0)
}

impl Policy {
    pub fn greedy(&self, features: &[Vec<f64>; STORY_LEN], min_len: usize, max_len: usize) -> Result<Story> {
        let contexts = self.encode(features)?;
        let subs = contexts
            .iter()
            .map(|c| greedy_sub_story(self, c, min_len, max_len))
            .collect::<Result<Vec<_>>>()?;
        Story::new(subs)
    }

    /// Beam search applied independently to each of the five positions.
    pub fn beam_search(&self, features: &[Vec<f64>; STORY_LEN], beam: usize, min_len: usize, max_len: usize) -> Result<Story> {
        let contexts = self.encode(features)?;
        let subs = contexts
            .iter()
            .map(|c| beam_search_sub_story(self, c, beam, min_len, max_len))
            .collect::<Result<Vec<_>>>()?;
        Story::new(subs)
    }
}
