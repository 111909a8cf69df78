//! Independent reference implementations used as test oracles, written as
//! plain loops over parameter values looked up by name.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use arel_core::numerics::{rng_from_seed, ParamStore, Rng};
use arel_core::policy::{Policy, PolicyDims, Story, SubStory, TokenId, BOS, EOS, PAD, STORY_LEN};
use arel_core::reward::{RewardDims, RewardModel};
use rand::Rng as _;

pub fn param<'a>(store: &'a ParamStore, name: &str) -> &'a [f64] {
    store.value(store.id(name).unwrap_or_else(|| panic!("no parameter {name}"))).data()
}

fn mv(w: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    let rows = w.len() / cols;
    let mut y = vec![0.0; rows];
    for i in 0..rows {
        for j in 0..cols {
            y[i] += w[i * cols + j] * x[j];
        }
    }
    y
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn gru(store: &ParamStore, prefix: &str, h: &[f64], x: &[f64]) -> Vec<f64> {
    let p = |n: &str| param(store, &format!("{prefix}.{n}"));
    let gate = |w: &str, u: &str, b: &str, hv: &[f64]| -> Vec<f64> {
        let a = mv(p(w), x);
        let c = mv(p(u), hv);
        (0..h.len()).map(|i| a[i] + c[i] + p(b)[i]).collect()
    };
    let z: Vec<f64> = gate("w_z", "u_z", "b_z", h).into_iter().map(sig).collect();
    let r: Vec<f64> = gate("w_r", "u_r", "b_r", h).into_iter().map(sig).collect();
    let rh: Vec<f64> = (0..h.len()).map(|i| r[i] * h[i]).collect();
    let c: Vec<f64> = gate("w_h", "u_h", "b_h", &rh).into_iter().map(f64::tanh).collect();
    (0..h.len()).map(|i| (1.0 - z[i]) * h[i] + z[i] * c[i]).collect()
}

fn linear(store: &ParamStore, prefix: &str, x: &[f64]) -> Vec<f64> {
    let y = mv(param(store, &format!("{prefix}.w")), x);
    y.iter().zip(param(store, &format!("{prefix}.b"))).map(|(a, b)| a + b).collect()
}

pub fn contexts(policy: &Policy, features: &[Vec<f64>; STORY_LEN]) -> Vec<Vec<f64>> {
    let s = policy.store();
    let hdim = policy.dims().enc_hidden;
    let xs: Vec<Vec<f64>> = features.iter().map(|f| linear(s, "enc.proj", f)).collect();
    let mut fwd = Vec::new();
    let mut h = vec![0.0; hdim];
    for x in &xs {
        h = gru(s, "enc.fwd", &h, x);
        fwd.push(h.clone());
    }
    let mut bwd = vec![Vec::new(); STORY_LEN];
    let mut h = vec![0.0; hdim];
    for i in (0..STORY_LEN).rev() {
        h = gru(s, "enc.bwd", &h, &xs[i]);
        bwd[i] = h.clone();
    }
    (0..STORY_LEN).map(|i| [fwd[i].clone(), bwd[i].clone()].concat()).collect()
}

/// Log-softmax over all tokens except PAD and BOS.
pub fn masked_log_softmax(logits: &[f64]) -> Vec<f64> {
    let allowed = |i: usize| i != PAD as usize && i != BOS as usize;
    let m = (0..logits.len()).filter(|&i| allowed(i)).map(|i| logits[i]).fold(f64::MIN, f64::max);
    let z: f64 = (0..logits.len()).filter(|&i| allowed(i)).map(|i| (logits[i] - m).exp()).sum();
    (0..logits.len())
        .map(|i| if allowed(i) { logits[i] - m - z.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Decoder step: returns the next state and logits.
pub fn decoder_step(policy: &Policy, h: &[f64], prev: TokenId, ctx: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = policy.store();
    let e = policy.dims().embed;
    let table = param(s, "dec.embed");
    let mut x = table[prev as usize * e..(prev as usize + 1) * e].to_vec();
    x.extend_from_slice(ctx);
    let next = gru(s, "dec.gru", h, &x);
    let logits = linear(s, "dec.out", &next);
    (next, logits)
}

/// Teacher-forced log-probability; the end marker at the length cap is
/// forced and costs nothing.
pub fn sub_log_prob(policy: &Policy, ctx: &[f64], sub: &SubStory) -> f64 {
    let cap = policy.dims().max_sub_len;
    let mut h = vec![0.0; policy.dims().dec_hidden];
    let mut prev = BOS;
    let mut lp = 0.0;
    for (t, &tok) in sub.tokens().iter().enumerate() {
        if t + 1 == cap {
            assert_eq!(tok, EOS);
            break;
        }
        let (next, logits) = decoder_step(policy, &h, prev, ctx);
        h = next;
        lp += masked_log_softmax(&logits)[tok as usize];
        prev = tok;
    }
    lp
}

pub fn story_log_prob(policy: &Policy, features: &[Vec<f64>; STORY_LEN], story: &Story) -> f64 {
    let ctx = contexts(policy, features);
    story.subs().iter().zip(&ctx).map(|(s, c)| sub_log_prob(policy, c, s)).sum()
}

/// Reward model as plain loops: embed, valid convolutions, pairwise max
/// pooling, flatten, add the projected image, affine map, squash.
pub fn partial_reward(model: &RewardModel, sub: &SubStory, feature: &[f64], squash: fn(f64) -> f64) -> f64 {
    squash(reward_logit(model, sub, feature))
}

pub fn reward_logit(model: &RewardModel, sub: &SubStory, feature: &[f64]) -> f64 {
    let d = model.dims();
    let s = model.store();
    let mut ids: Vec<usize> = sub.words().iter().take(d.seq_len).map(|&t| t as usize).collect();
    while ids.len() < d.seq_len {
        ids.push(PAD as usize);
    }
    let table = param(s, "rew.embed");
    let row = |p: usize, c: usize| table[ids[p] * d.embed + c];
    let mut sentence = Vec::new();
    for k in [2usize, 3, 4] {
        let w = param(s, &format!("rew.conv{k}.w"));
        let b = param(s, &format!("rew.conv{k}.b"));
        let positions = d.seq_len - k + 1;
        let mut conv = vec![vec![0.0; d.filters]; positions];
        for p in 0..positions {
            for f in 0..d.filters {
                let mut acc = b[f];
                for o in 0..k {
                    for c in 0..d.embed {
                        acc += w[f * k * d.embed + o * d.embed + c] * row(p + o, c);
                    }
                }
                conv[p][f] = acc;
            }
        }
        let mut p = 0;
        while p < positions {
            for f in 0..d.filters {
                let v = if p + 1 < positions { conv[p][f].max(conv[p + 1][f]) } else { conv[p][f] };
                sentence.push(v);
            }
            p += 2;
        }
    }
    let image = mv(param(s, "rew.image.w"), feature);
    let joint: Vec<f64> = sentence.iter().zip(&image).map(|(a, b)| a + b).collect();
    linear(s, "rew.out", &joint)[0]
}

pub fn softsign(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

/// Smallest useful model shapes.
pub fn tiny_policy_dims(vocab: usize, max_sub_len: usize) -> PolicyDims {
    PolicyDims {
        vocab,
        d_img: 3,
        proj: 2,
        enc_hidden: 2,
        dec_hidden: 3,
        embed: 2,
        max_sub_len,
    }
}

pub fn small_policy_dims(vocab: usize) -> PolicyDims {
    PolicyDims {
        vocab,
        d_img: 6,
        proj: 5,
        enc_hidden: 4,
        dec_hidden: 6,
        embed: 4,
        max_sub_len: 7,
    }
}

pub fn small_reward_dims(vocab: usize, d_img: usize) -> RewardDims {
    RewardDims {
        embed: 3,
        filters: 2,
        seq_len: 6,
        ..RewardDims::desk(vocab, d_img)
    }
}

/// Scales every parameter so outputs are far from uniform.
pub fn scale_params(store: &mut ParamStore, s: f64) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.value_mut(id).data_mut() {
            *v *= s;
        }
    }
}

/// Gives every parameter, biases included, a uniform draw in `[-a, a]`.
pub fn randomize(store: &mut ParamStore, a: f64, rng: &mut Rng) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.value_mut(id).data_mut() {
            *v = rng.gen_range(-a..=a);
        }
    }
}

pub fn random_features(d: usize, rng: &mut Rng) -> [Vec<f64>; STORY_LEN] {
    std::array::from_fn(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// A random valid story over word ids `3..vocab` (UNK included).
pub fn random_story(vocab: usize, max_sub_len: usize, rng: &mut Rng) -> Story {
    let subs = (0..STORY_LEN)
        .map(|_| {
            let len = rng.gen_range(0..max_sub_len);
            let words: Vec<TokenId> = (0..len).map(|_| rng.gen_range(3..vocab as TokenId)).collect();
            SubStory::from_words(&words).unwrap()
        })
        .collect();
    Story::new(subs).unwrap()
}

pub fn seeded(seed: u64) -> Rng {
    rng_from_seed(seed)
}

// ---- metric oracles -------------------------------------------------------

fn grams(s: &[u32], n: usize) -> HashMap<Vec<u32>, usize> {
    let mut m = HashMap::new();
    if s.len() >= n {
        for i in 0..=s.len() - n {
            *m.entry(s[i..i + n].to_vec()).or_insert(0) += 1;
        }
    }
    m
}

pub fn bleu_oracle(hyp: &[u32], refs: &[Vec<u32>], n: usize) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let mut logp = 0.0;
    for k in 1..=n {
        let h = grams(hyp, k);
        let mut clipped = 0usize;
        for (g, c) in &h {
            let m = refs.iter().map(|r| grams(r, k).get(g).copied().unwrap_or(0)).max().unwrap_or(0);
            clipped += (*c).min(m);
        }
        let total = if hyp.len() >= k { hyp.len() - k + 1 } else { 1 };
        let num = if clipped == 0 { 1e-9 } else { clipped as f64 };
        logp += (num / total as f64).ln();
    }
    let c = hyp.len() as i64;
    let mut best: Option<i64> = None;
    for r in refs {
        let l = r.len() as i64;
        best = match best {
            None => Some(l),
            Some(b) if (l - c).abs() < (b - c).abs() || ((l - c).abs() == (b - c).abs() && l < b) => Some(l),
            keep => keep,
        };
    }
    let r = best.unwrap_or(0);
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    bp * (logp / n as f64).exp()
}

/// Longest common subsequence by trying every subsequence of `a`.
pub fn lcs_brute(a: &[u32], b: &[u32]) -> usize {
    let is_subseq = |s: &[u32]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let s: Vec<u32> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        if s.len() > best && is_subseq(&s) {
            best = s.len();
        }
    }
    best
}

pub fn rouge_oracle(hyp: &[u32], refs: &[Vec<u32>]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    let mut best = 0.0f64;
    for r in refs {
        let l = lcs_brute(hyp, r) as f64;
        if l > 0.0 {
            let p = l / hyp.len() as f64;
            let rc = l / r.len() as f64;
            best = best.max((1.0 + beta2) * p * rc / (rc + beta2 * p));
        }
    }
    best
}

pub fn cider_oracle(hyp: &[u32], refs: &[Vec<u32>], corpus: &[Vec<Vec<u32>>]) -> f64 {
    let n_docs = corpus.len() as f64;
    let idf = |g: &Vec<u32>| -> f64 {
        let df = corpus
            .iter()
            .filter(|album| album.iter().any(|r| grams(r, g.len()).contains_key(g)))
            .count()
            .max(1);
        (n_docs / df as f64).ln()
    };
    let vec_of = |s: &[u32], n: usize| -> HashMap<Vec<u32>, f64> {
        grams(s, n).into_iter().map(|(g, c)| {
            let w = c as f64 * idf(&g);
            (g, w)
        }).collect()
    };
    if hyp.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for n in 1..=4 {
        let h = vec_of(hyp, n);
        let mut acc = 0.0;
        for r in refs {
            let rv = vec_of(r, n);
            let keys: HashSet<&Vec<u32>> = h.keys().chain(rv.keys()).collect();
            let dot: f64 = keys.iter().map(|k| h.get(*k).unwrap_or(&0.0) * rv.get(*k).unwrap_or(&0.0)).sum();
            let nh: f64 = h.values().map(|v| v * v).sum::<f64>().sqrt();
            let nr: f64 = rv.values().map(|v| v * v).sum::<f64>().sqrt();
            if nh > 0.0 && nr > 0.0 {
                acc += dot / (nh * nr);
            }
        }
        total += acc / refs.len() as f64;
    }
    10.0 * total / 4.0
}

/// Greedy longest-run-first alignment by direct search: measure every
/// free run from scratch, take the longest (earliest hypothesis, then
/// reference position on ties), repeat.
pub fn meteor_oracle(hyp: &[u32], refs: &[Vec<u32>]) -> f64 {
    let mut best = 0.0f64;
    for r in refs {
        let mut uh = vec![false; hyp.len()];
        let mut ur = vec![false; r.len()];
        let mut pairs = Vec::new();
        loop {
            let mut pick = (0, 0, 0);
            for i in 0..hyp.len() {
                for j in 0..r.len() {
                    let mut len = 0;
                    while i + len < hyp.len()
                        && j + len < r.len()
                        && !uh[i + len]
                        && !ur[j + len]
                        && hyp[i + len] == r[j + len]
                    {
                        len += 1;
                    }
                    if len > pick.2 {
                        pick = (i, j, len);
                    }
                }
            }
            if pick.2 == 0 {
                break;
            }
            for k in 0..pick.2 {
                uh[pick.0 + k] = true;
                ur[pick.1 + k] = true;
                pairs.push((pick.0 + k, pick.1 + k));
            }
        }
        pairs.sort();
        let m = pairs.len();
        if m == 0 {
            continue;
        }
        let mut chunks = 1;
        for w in pairs.windows(2) {
            if !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1) {
                chunks += 1;
            }
        }
        let p = m as f64 / hyp.len() as f64;
        let rc = m as f64 / r.len() as f64;
        let f = 10.0 * p * rc / (rc + 9.0 * p);
        let frag = chunks as f64 / m as f64;
        best = best.max(f * (1.0 - 0.5 * frag.powi(3)));
    }
    best
}

pub fn random_tokens(len: usize, alphabet: u32, rng: &mut Rng) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(0..alphabet)).collect()
}
