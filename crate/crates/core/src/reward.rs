//! Convolutional reward model scoring one sentence against its feature
//! vector: `φ(W_r (f_conv(W) + W_i I) + b_r)` with a bounded `φ`.

use alloc::format;
use alloc::vec::Vec;

use crate::numerics::kernels::{conv1d_bank, matvec, ConvBank};
use crate::numerics::{Activation, Init, Linear, ParamId, ParamStore, RealArray, Tape, Var};
use crate::policy::{Story, SubStory, PAD, STORY_LEN};
use crate::{Error, Result};

/// How the sentence and image representations meet before the output layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Combine {
    /// `f_conv(W) + W_i I`.
    #[default]
    Add,
    /// `[f_conv(W); W_i I]`.
    Concat,
}

impl Combine {
    pub fn name(self) -> &'static str {
        match self {
            Combine::Add => "add",
            Combine::Concat => "concat",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Combine::Add),
            "concat" => Ok(Combine::Concat),
            other => Err(Error::Config(format!("unknown combine mode `{other}`"))),
        }
    }
}

pub const KERNEL_SIZES: [usize; 3] = [2, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewardDims {
    pub vocab: usize,
    pub d_img: usize,
    pub embed: usize,
    /// Filters per kernel size.
    pub filters: usize,
    /// Sentences are right-padded with PAD (or truncated) to this length.
    pub seq_len: usize,
    pub activation: Activation,
    pub combine: Combine,
}

impl RewardDims {
    /// 128-dim embeddings and 128 filters per kernel size.
    pub fn full(vocab: usize, d_img: usize) -> Self {
        Self {
            vocab,
            d_img,
            embed: 128,
            filters: 128,
            seq_len: crate::policy::DEFAULT_MAX_SUB_LEN,
            activation: Activation::Softsign,
            combine: Combine::Add,
        }
    }

    pub fn desk(vocab: usize, d_img: usize) -> Self {
        Self {
            embed: 32,
            filters: 16,
            ..Self::full(vocab, d_img)
        }
    }

    /// Length of the flattened, pooled convolution output.
    pub fn sentence_dim(&self) -> usize {
        KERNEL_SIZES
            .iter()
            .map(|&k| self.filters * (self.seq_len - k + 1).div_ceil(2))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len < KERNEL_SIZES[2] {
            return Err(Error::Config(format!("reward seq_len must be >= 4, got {}", self.seq_len)));
        }
        if [self.vocab, self.d_img, self.embed, self.filters].contains(&0) {
            return Err(Error::Config("reward dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    dims: RewardDims,
    store: ParamStore,
    embed: ParamId,
    banks: Vec<(ParamId, ParamId)>,
    image: ParamId,
    out: Linear,
}

impl RewardModel {
    pub fn new(dims: RewardDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut store = ParamStore::new(seed);
        let embed = store.add(
            "rew.embed",
            &[dims.vocab, dims.embed],
            Init::Glorot {
                fan_in: dims.vocab,
                fan_out: dims.embed,
            },
        )?;
        let mut banks = Vec::new();
        for k in KERNEL_SIZES {
            let kernel = store.add(
                &format!("rew.conv{k}.w"),
                &[dims.filters, k * dims.embed],
                Init::Glorot {
                    fan_in: k * dims.embed,
                    fan_out: dims.filters,
                },
            )?;
            let bias = store.add(&format!("rew.conv{k}.b"), &[dims.filters], Init::Zeros)?;
            banks.push((kernel, bias));
        }
        let s = dims.sentence_dim();
        let image = store.add(
            "rew.image.w",
            &[s, dims.d_img],
            Init::Glorot {
                fan_in: dims.d_img,
                fan_out: s,
            },
        )?;
        let joint = match dims.combine {
            Combine::Add => s,
            Combine::Concat => 2 * s,
        };
        let out = Linear::register(&mut store, "rew.out", joint, 1)?;
        Ok(Self {
            dims,
            store,
            embed,
            banks,
            image,
            out,
        })
    }

    pub fn dims(&self) -> &RewardDims {
        &self.dims
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Sentence words right-padded with PAD (or truncated) to `seq_len`.
    pub fn input_ids(&self, sub: &SubStory) -> Result<Vec<usize>> {
        let mut ids = Vec::with_capacity(self.dims.seq_len);
        for &t in sub.words().iter().take(self.dims.seq_len) {
            if t as usize >= self.dims.vocab {
                return Err(Error::TokenOutOfRange {
                    id: t,
                    size: self.dims.vocab,
                });
            }
            ids.push(t as usize);
        }
        ids.resize(self.dims.seq_len, PAD as usize);
        Ok(ids)
    }

    fn check_feature(&self, feature: &[f64]) -> Result<()> {
        if feature.len() != self.dims.d_img {
            return Err(Error::Shape(format!(
                "image feature of length {} but the reward model expects {}",
                feature.len(),
                self.dims.d_img
            )));
        }
        if feature.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image feature"));
        }
        Ok(())
    }

    /// Pre-activation score `W_r(...) + b_r`.
    pub fn logit(&self, sub: &SubStory, feature: &[f64]) -> Result<f64> {
        self.check_feature(feature)?;
        let ids = self.input_ids(sub)?;
        let e = self.dims.embed;
        let table = self.store.value(self.embed).data();
        let mut rows = Vec::with_capacity(ids.len() * e);
        for &id in &ids {
            rows.extend_from_slice(&table[id * e..(id + 1) * e]);
        }
        let emb = RealArray::new(alloc::vec![ids.len(), e], rows)?;
        let banks: Vec<ConvBank<'_>> = self
            .banks
            .iter()
            .map(|&(k, b)| ConvBank {
                kernel: self.store.value(k),
                bias: self.store.value(b),
            })
            .collect();
        let sentence = conv1d_bank(&emb, &banks)?;
        let image = matvec(self.store.value(self.image), feature)?;
        let joint: Vec<f64> = match self.dims.combine {
            Combine::Add => sentence.iter().zip(&image).map(|(a, b)| a + b).collect(),
            Combine::Concat => sentence.into_iter().chain(image).collect(),
        };
        Ok(self.out.apply(&self.store, &joint)?[0])
    }

    /// Bounded reward of one sentence, in `(-1, 1)`.
    pub fn partial_reward(&self, sub: &SubStory, feature: &[f64]) -> Result<f64> {
        Ok(self.dims.activation.apply(self.logit(sub, feature)?))
    }

    /// Partial rewards for the five aligned (sentence, feature) pairs and
    /// their mean.
    pub fn story_reward(&self, story: &Story, features: &[Vec<f64>; STORY_LEN]) -> Result<(f64, [f64; STORY_LEN])> {
        let mut partials = [0.0; STORY_LEN];
        for (i, (sub, f)) in story.subs().iter().zip(features).enumerate() {
            partials[i] = self.partial_reward(sub, f)?;
        }
        Ok((partials.iter().sum::<f64>() / STORY_LEN as f64, partials))
    }

    /// Mean pre-activation score over the five sentences.
    pub fn story_logit(&self, story: &Story, features: &[Vec<f64>; STORY_LEN]) -> Result<f64> {
        let mut total = 0.0;
        for (sub, f) in story.subs().iter().zip(features) {
            total += self.logit(sub, f)?;
        }
        Ok(total / STORY_LEN as f64)
    }

    pub fn record_partial(&self, tape: &mut Tape<'_>, sub: &SubStory, feature: &[f64]) -> Result<Var> {
        let logit = self.record_logit(tape, sub, feature)?;
        Ok(match self.dims.activation {
            Activation::Softsign => tape.softsign(logit),
            Activation::Tanh => tape.tanh(logit),
        })
    }

    /// Records the pre-activation score of one sentence.
    pub fn record_logit(&self, tape: &mut Tape<'_>, sub: &SubStory, feature: &[f64]) -> Result<Var> {
        self.check_feature(feature)?;
        let ids = self.input_ids(sub)?;
        let table = tape.param(self.embed);
        let emb = tape.rows(table, &ids);
        let mut pooled = Vec::with_capacity(self.banks.len());
        for &(k, b) in &self.banks {
            let (kv, bv) = (tape.param(k), tape.param(b));
            let map = tape.conv1d(emb, kv, bv);
            pooled.push(tape.max_pool2(map));
        }
        let sentence = tape.concat(&pooled);
        let w_i = tape.param(self.image);
        let img = tape.constant(feature.to_vec());
        let image = tape.matvec(w_i, img);
        let joint = match self.dims.combine {
            Combine::Add => tape.add(sentence, image),
            Combine::Concat => tape.concat(&[sentence, image]),
        };
        Ok(self.out.apply_tape(tape, joint))
    }

    /// Records all five partials and their mean.
    pub fn record_story(
        &self,
        tape: &mut Tape<'_>,
        story: &Story,
        features: &[Vec<f64>; STORY_LEN],
    ) -> Result<(Var, [Var; STORY_LEN])> {
        let mut partials = Vec::with_capacity(STORY_LEN);
        for (sub, f) in story.subs().iter().zip(features) {
            partials.push(self.record_partial(tape, sub, f)?);
        }
        let terms: Vec<(Var, f64)> = partials.iter().map(|&p| (p, 1.0 / STORY_LEN as f64)).collect();
        let total = tape.weighted_sum(&terms);
        Ok((total, partials.try_into().expect("five partials")))
    }
}
