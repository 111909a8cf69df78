//! Checkpoint directory layout:
//!
//! ```text
//! config.txt        key=value model dimensions and init seeds
//! vocab.txt         see `vocab_file`
//! policy.manifest   name shape offset count, one parameter per line
//! policy.bin        little-endian f64 values in manifest order
//! reward.manifest
//! reward.bin
//! ```
//!
//! Values are stored bit-exactly, so save/load round trips are lossless.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use arel_core::numerics::{Activation, ParamStore, RealArray};
use arel_core::policy::{Policy, PolicyDims, Vocab};
use arel_core::reward::{Combine, RewardDims, RewardModel};

use crate::vocab_file::{format_vocab, parse_vocab};

const FORMAT: &str = "arel-checkpoint-1";

/// Both players plus the vocabulary they were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocab,
    pub policy: Policy,
    pub reward: RewardModel,
}

fn config_text(policy: &Policy, reward: &RewardModel) -> String {
    let p = policy.dims();
    let r = reward.dims();
    let pairs: Vec<(&str, String)> = vec![
        ("format", FORMAT.into()),
        ("policy.vocab", p.vocab.to_string()),
        ("policy.d_img", p.d_img.to_string()),
        ("policy.proj", p.proj.to_string()),
        ("policy.enc_hidden", p.enc_hidden.to_string()),
        ("policy.dec_hidden", p.dec_hidden.to_string()),
        ("policy.embed", p.embed.to_string()),
        ("policy.max_sub_len", p.max_sub_len.to_string()),
        ("policy.seed", policy.store().rng_seed().to_string()),
        ("reward.vocab", r.vocab.to_string()),
        ("reward.d_img", r.d_img.to_string()),
        ("reward.embed", r.embed.to_string()),
        ("reward.filters", r.filters.to_string()),
        ("reward.seq_len", r.seq_len.to_string()),
        ("reward.activation", r.activation.name().into()),
        ("reward.combine", r.combine.name().into()),
        ("reward.seed", reward.store().rng_seed().to_string()),
    ];
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

struct Config(BTreeMap<String, String>);

impl Config {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').with_context(|| format!("bad config line `{line}`"))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        ensure!(
            map.get("format").map(String::as_str) == Some(FORMAT),
            "not an {FORMAT} checkpoint"
        );
        Ok(Self(map))
    }

    fn str(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).with_context(|| format!("config is missing `{key}`"))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.str(key)?.parse().ok().with_context(|| format!("config `{key}` is not a number"))
    }
}

fn manifest_and_blob(store: &ParamStore) -> (String, Vec<u8>) {
    let mut manifest = format!("# name shape offset count ({} values)\n", store.num_values());
    let mut blob = Vec::with_capacity(store.num_values() * 8);
    let mut offset = 0;
    for id in store.ids() {
        let v = store.value(id);
        let shape: Vec<String> = v.shape().iter().map(usize::to_string).collect();
        manifest.push_str(&format!("{} {} {} {}\n", store.name(id), shape.join(","), offset, v.len()));
        for x in v.data() {
            blob.extend_from_slice(&x.to_le_bytes());
        }
        offset += v.len();
    }
    (manifest, blob)
}

fn load_values(store: &mut ParamStore, manifest: &str, blob: &[u8]) -> Result<()> {
    ensure!(blob.len() % 8 == 0, "blob length is not a multiple of 8");
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut seen = 0;
    for line in manifest.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        ensure!(parts.len() == 4, "bad manifest line `{line}`");
        let shape: Vec<usize> = parts[1].split(',').map(str::parse).collect::<Result<_, _>>()?;
        let (offset, count): (usize, usize) = (parts[2].parse()?, parts[3].parse()?);
        let id = store.id(parts[0]).with_context(|| format!("unknown parameter `{}`", parts[0]))?;
        ensure!(
            store.value(id).shape() == shape.as_slice(),
            "parameter `{}` has shape {:?}, checkpoint has {:?}",
            parts[0],
            store.value(id).shape(),
            shape
        );
        let data = values
            .get(offset..offset + count)
            .with_context(|| format!("parameter `{}` runs past the blob", parts[0]))?;
        store.set_value(id, RealArray::new(shape, data.to_vec())?)?;
        seen += 1;
    }
    if seen != store.len() {
        bail!("checkpoint holds {seen} of {} parameters", store.len());
    }
    Ok(())
}

impl Checkpoint {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
        };
        write("config.txt", config_text(&self.policy, &self.reward).as_bytes())?;
        write("vocab.txt", format_vocab(&self.vocab).as_bytes())?;
        for (name, store) in [("policy", self.policy.store()), ("reward", self.reward.store())] {
            let (manifest, blob) = manifest_and_blob(store);
            write(&format!("{name}.manifest"), manifest.as_bytes())?;
            write(&format!("{name}.bin"), &blob)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read(&path).with_context(|| format!("reading {}", path.display()))
        };
        let text = |name: &str| -> Result<String> { Ok(String::from_utf8(read(name)?)?) };
        let cfg = Config::parse(&text("config.txt")?)?;
        let vocab = parse_vocab(&text("vocab.txt")?)?;
        let pdims = PolicyDims {
            vocab: cfg.num("policy.vocab")?,
            d_img: cfg.num("policy.d_img")?,
            proj: cfg.num("policy.proj")?,
            enc_hidden: cfg.num("policy.enc_hidden")?,
            dec_hidden: cfg.num("policy.dec_hidden")?,
            embed: cfg.num("policy.embed")?,
            max_sub_len: cfg.num("policy.max_sub_len")?,
        };
        let rdims = RewardDims {
            vocab: cfg.num("reward.vocab")?,
            d_img: cfg.num("reward.d_img")?,
            embed: cfg.num("reward.embed")?,
            filters: cfg.num("reward.filters")?,
            seq_len: cfg.num("reward.seq_len")?,
            activation: Activation::parse(cfg.str("reward.activation")?)?,
            combine: Combine::parse(cfg.str("reward.combine")?)?,
        };
        ensure!(
            pdims.vocab == vocab.len() && rdims.vocab == vocab.len(),
            "model vocabulary sizes do not match vocab.txt"
        );
        let mut policy = Policy::new(pdims, cfg.num("policy.seed")?)?;
        load_values(policy.store_mut(), &text("policy.manifest")?, &read("policy.bin")?)?;
        let mut reward = RewardModel::new(rdims, cfg.num("reward.seed")?)?;
        load_values(reward.store_mut(), &text("reward.manifest")?, &read("reward.bin")?)?;
        Ok(Self { vocab, policy, reward })
    }
}
