use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::story::{Story, SubStory, STORY_LEN};
use super::vocab::{TokenId, BOS, EOS, PAD};
use crate::numerics::kernels::{masked_log_softmax, masked_softmax};
use crate::numerics::{GruLayer, Init, Linear, ParamId, ParamStore, Rng, Tape, Var};
use crate::{Error, Result};

/// Tokens the policy never emits.
pub(crate) const MASKED: [usize; 2] = [PAD as usize, BOS as usize];

/// Layer sizes of the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicyDims {
    pub vocab: usize,
    pub d_img: usize,
    /// Width of the learned projection feeding the encoder.
    pub proj: usize,
    /// Hidden size of each encoder direction; contexts are twice this.
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    pub embed: usize,
    /// Per-sentence cap; EOS is forced at this position.
    pub max_sub_len: usize,
}

impl PolicyDims {
    /// Full-size configuration: 256 per encoder direction, 512 decoder.
    pub fn full(vocab: usize, d_img: usize) -> Self {
        Self {
            vocab,
            d_img,
            proj: 256,
            enc_hidden: 256,
            dec_hidden: 512,
            embed: 256,
            max_sub_len: super::DEFAULT_MAX_SUB_LEN,
        }
    }

    /// Small configuration for single-core experiments.
    pub fn desk(vocab: usize, d_img: usize) -> Self {
        Self {
            vocab,
            d_img,
            proj: 32,
            enc_hidden: 32,
            dec_hidden: 64,
            embed: 32,
            max_sub_len: super::DEFAULT_MAX_SUB_LEN,
        }
    }

    pub fn context(&self) -> usize {
        2 * self.enc_hidden
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab <= MASKED.len() + 1 {
            return Err(Error::Config(format!("vocabulary of {} leaves nothing to emit", self.vocab)));
        }
        if [self.d_img, self.proj, self.enc_hidden, self.dec_hidden, self.embed].contains(&0) {
            return Err(Error::Config("policy dimensions must be positive".into()));
        }
        if self.max_sub_len < 2 {
            return Err(Error::Config("max_sub_len must be at least 2".into()));
        }
        Ok(())
    }
}

/// Log-probability node of one sub-story and the number of scored tokens
/// (a forced final EOS contributes nothing).
#[derive(Clone, Copy, Debug)]
pub struct SubStoryLogProb {
    pub log_prob: Var,
    pub tokens: usize,
}

/// The story generator and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    dims: PolicyDims,
    store: ParamStore,
    proj: Linear,
    enc_fwd: GruLayer,
    enc_bwd: GruLayer,
    embed: ParamId,
    dec: GruLayer,
    out: Linear,
}

impl Policy {
    pub fn new(dims: PolicyDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut store = ParamStore::new(seed);
        let proj = Linear::register(&mut store, "enc.proj", dims.d_img, dims.proj)?;
        let enc_fwd = GruLayer::register(&mut store, "enc.fwd", dims.proj, dims.enc_hidden)?;
        let enc_bwd = GruLayer::register(&mut store, "enc.bwd", dims.proj, dims.enc_hidden)?;
        let embed = store.add(
            "dec.embed",
            &[dims.vocab, dims.embed],
            Init::Glorot {
                fan_in: dims.vocab,
                fan_out: dims.embed,
            },
        )?;
        let dec = GruLayer::register(&mut store, "dec.gru", dims.embed + dims.context(), dims.dec_hidden)?;
        let out = Linear::register(&mut store, "dec.out", dims.dec_hidden, dims.vocab)?;
        Ok(Self {
            dims,
            store,
            proj,
            enc_fwd,
            enc_bwd,
            embed,
            dec,
            out,
        })
    }

    pub fn dims(&self) -> &PolicyDims {
        &self.dims
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Number of tokens the policy can emit.
    pub fn emittable(&self) -> usize {
        self.dims.vocab - MASKED.len()
    }

    fn check_features(&self, features: &[Vec<f64>; STORY_LEN]) -> Result<()> {
        for f in features {
            if f.len() != self.dims.d_img {
                return Err(Error::Shape(format!(
                    "feature of length {} but the policy expects {}",
                    f.len(),
                    self.dims.d_img
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("album features"));
            }
        }
        Ok(())
    }

    fn check_token(&self, t: TokenId) -> Result<()> {
        if (t as usize) < self.dims.vocab {
            Ok(())
        } else {
            Err(Error::TokenOutOfRange {
                id: t,
                size: self.dims.vocab,
            })
        }
    }

    /// Context vectors `[forward_i ; backward_i]` for the five positions.
    pub fn encode(&self, features: &[Vec<f64>; STORY_LEN]) -> Result<[Vec<f64>; STORY_LEN]> {
        self.check_features(features)?;
        let inputs = features
            .iter()
            .map(|f| self.proj.apply(&self.store, f))
            .collect::<Result<Vec<_>>>()?;
        let h = self.dims.enc_hidden;
        let mut fwd = vec![vec![0.0; h]; STORY_LEN];
        let mut state = vec![0.0; h];
        for i in 0..STORY_LEN {
            state = self.enc_fwd.step(&self.store, &state, &inputs[i])?;
            fwd[i] = state.clone();
        }
        let mut bwd = vec![vec![0.0; h]; STORY_LEN];
        let mut state = vec![0.0; h];
        for i in (0..STORY_LEN).rev() {
            state = self.enc_bwd.step(&self.store, &state, &inputs[i])?;
            bwd[i] = state.clone();
        }
        Ok(core::array::from_fn(|i| {
            let mut c = fwd[i].clone();
            c.extend_from_slice(&bwd[i]);
            c
        }))
    }

    /// One decoder step; returns the next state and pre-softmax logits.
    pub fn step(&self, state: &[f64], prev: TokenId, context: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_token(prev)?;
        if context.len() != self.dims.context() || state.len() != self.dims.dec_hidden {
            return Err(Error::Shape(format!(
                "decoder step with state {} / context {}",
                state.len(),
                context.len()
            )));
        }
        let e = self.dims.embed;
        let table = self.store.value(self.embed).data();
        let mut input = table[prev as usize * e..(prev as usize + 1) * e].to_vec();
        input.extend_from_slice(context);
        let next = self.dec.step(&self.store, state, &input)?;
        let logits = self.out.apply(&self.store, &next)?;
        Ok((next, logits))
    }

    /// Log-probabilities over the vocabulary (PAD and BOS at -inf).
    pub fn log_probs(&self, logits: &[f64]) -> Vec<f64> {
        masked_log_softmax(logits, &MASKED)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.dims.dec_hidden]
    }

    /// Draws one story token by token from `softmax(logits / temperature)`;
    /// the returned log-probability is under the temperature-1 policy.
    pub fn sample_story(&self, features: &[Vec<f64>; STORY_LEN], rng: &mut Rng, temperature: f64) -> Result<(Story, f64)> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
        }
        let contexts = self.encode(features)?;
        let mut total = 0.0;
        let mut subs = Vec::with_capacity(STORY_LEN);
        for ctx in &contexts {
            let (sub, lp) = self.sample_sub_story(ctx, rng, temperature)?;
            total += lp;
            subs.push(sub);
        }
        Ok((Story::new(subs)?, total))
    }

    fn sample_sub_story(&self, context: &[f64], rng: &mut Rng, temperature: f64) -> Result<(SubStory, f64)> {
        let mut state = self.initial_state();
        let mut prev = BOS;
        let mut tokens = Vec::new();
        let mut lp = 0.0;
        for t in 1..=self.dims.max_sub_len {
            if t == self.dims.max_sub_len {
                tokens.push(EOS);
                break;
            }
            let (next, logits) = self.step(&state, prev, context)?;
            state = next;
            let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
            let probs = masked_softmax(&scaled, &MASKED);
            let tok = draw(&probs, rng);
            lp += self.log_probs(&logits)[tok];
            tokens.push(tok as TokenId);
            if tok as TokenId == EOS {
                break;
            }
            prev = tok as TokenId;
        }
        if !lp.is_finite() {
            return Err(Error::NonFinite("sampled log-probability"));
        }
        Ok((SubStory::new(tokens)?, lp))
    }

    /// Teacher-forced log-probability of `sub` given its context.
    pub fn sub_story_log_prob(&self, context: &[f64], sub: &SubStory) -> Result<f64> {
        self.check_sub(sub)?;
        let mut state = self.initial_state();
        let mut prev = BOS;
        let mut lp = 0.0;
        for (i, &tok) in sub.tokens().iter().enumerate() {
            if i + 1 == self.dims.max_sub_len {
                break;
            }
            let (next, logits) = self.step(&state, prev, context)?;
            state = next;
            lp += self.log_probs(&logits)[tok as usize];
            prev = tok;
        }
        Ok(lp)
    }

    fn check_sub(&self, sub: &SubStory) -> Result<()> {
        for &t in sub.tokens() {
            self.check_token(t)?;
            if MASKED.contains(&(t as usize)) {
                return Err(Error::InvalidStory("PAD/BOS cannot be emitted".into()));
            }
        }
        if sub.len() > self.dims.max_sub_len {
            return Err(Error::InvalidStory(format!(
                "sub-story of {} tokens exceeds the cap of {}",
                sub.len(),
                self.dims.max_sub_len
            )));
        }
        Ok(())
    }

    /// `log π(W)`: sum of teacher-forced token log-probabilities.
    pub fn story_log_prob(&self, features: &[Vec<f64>; STORY_LEN], story: &Story) -> Result<f64> {
        let contexts = self.encode(features)?;
        let mut total = 0.0;
        for (ctx, sub) in contexts.iter().zip(story.subs()) {
            total += self.sub_story_log_prob(ctx, sub)?;
        }
        Ok(total)
    }

    /// Records the encoder on `tape`.
    pub fn record_encode(&self, tape: &mut Tape<'_>, features: &[Vec<f64>; STORY_LEN]) -> Result<[Var; STORY_LEN]> {
        self.check_features(features)?;
        let inputs: Vec<Var> = features
            .iter()
            .map(|f| {
                let x = tape.constant(f.clone());
                self.proj.apply_tape(tape, x)
            })
            .collect();
        let h = self.dims.enc_hidden;
        let zero = tape.constant(vec![0.0; h]);
        let mut fwd = Vec::with_capacity(STORY_LEN);
        let mut state = zero;
        for &x in &inputs {
            state = self.enc_fwd.step_tape(tape, state, x);
            fwd.push(state);
        }
        let mut bwd = vec![zero; STORY_LEN];
        let mut state = zero;
        for i in (0..STORY_LEN).rev() {
            state = self.enc_bwd.step_tape(tape, state, inputs[i]);
            bwd[i] = state;
        }
        Ok(core::array::from_fn(|i| tape.concat(&[fwd[i], bwd[i]])))
    }

    /// Records teacher-forced log-probabilities of every sub-story.
    ///
    /// With `scheduled = Some((rng, p))`, each decoder input after the first
    /// is, with probability `p`, a token drawn from the model's own previous
    /// output distribution instead of the reference token. Targets are
    /// always the reference tokens.
    pub fn record_log_probs(
        &self,
        tape: &mut Tape<'_>,
        features: &[Vec<f64>; STORY_LEN],
        story: &Story,
        mut scheduled: Option<(&mut Rng, f64)>,
    ) -> Result<[SubStoryLogProb; STORY_LEN]> {
        for sub in story.subs() {
            self.check_sub(sub)?;
        }
        let contexts = self.record_encode(tape, features)?;
        let table = tape.param(self.embed);
        let mut out = Vec::with_capacity(STORY_LEN);
        for (ctx, sub) in contexts.iter().zip(story.subs()) {
            let mut state = tape.constant(self.initial_state());
            let mut prev = BOS as usize;
            let mut terms = Vec::new();
            for (i, &tok) in sub.tokens().iter().enumerate() {
                if i + 1 == self.dims.max_sub_len {
                    break;
                }
                let emb = tape.rows(table, &[prev]);
                let input = tape.concat(&[emb, *ctx]);
                state = self.dec.step_tape(tape, state, input);
                let logits = self.out.apply_tape(tape, state);
                terms.push((tape.log_softmax_pick(logits, tok as usize, &MASKED), 1.0));
                prev = tok as usize;
                if let Some((rng, p)) = scheduled.as_mut() {
                    if *p > 0.0 && rng.gen::<f64>() < *p {
                        let probs = masked_softmax(tape.value(logits), &MASKED);
                        prev = draw(&probs, rng);
                    }
                }
            }
            let tokens = terms.len();
            let log_prob = if terms.is_empty() {
                tape.constant(vec![0.0])
            } else {
                tape.weighted_sum(&terms)
            };
            out.push(SubStoryLogProb { log_prob, tokens });
        }
        Ok(out.try_into().expect("five sub-stories"))
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn draw(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
