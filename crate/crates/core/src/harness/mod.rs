//! Experiment plumbing that needs no I/O: synthetic corpora, vocabularies,
//! learned-reward reports and token-ratio statistics.

mod corpus;

pub use corpus::{generate_corpus, round_sig9, CorpusSpec, Topic, TOPICS};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::numerics::rng_from_seed;
use crate::policy::{Album, Policy, RawAlbum, Story, Vocab};
use crate::reward::RewardModel;
use crate::{Error, Result};

/// Vocabulary over every reference token, keeping tokens seen more than
/// `min_count` times.
pub fn build_vocab(corpus: &[RawAlbum], min_count: usize) -> Result<Vocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Vocab::build(corpus.iter().flat_map(RawAlbum::reference_tokens), min_count))
}

/// `count(A) / count(B)` over all reference tokens. Infinite when only `B`
/// is absent.
pub fn corpus_ratio<S: AsRef<str>>(corpus: &[RawAlbum], set_a: &[S], set_b: &[S]) -> Result<f64> {
    let a: BTreeSet<&str> = set_a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = set_b.iter().map(AsRef::as_ref).collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("token sets must be non-empty".into()));
    }
    if !a.is_disjoint(&b) {
        return Err(Error::Invalid("token sets must be disjoint".into()));
    }
    let (mut na, mut nb) = (0usize, 0usize);
    for t in corpus.iter().flat_map(RawAlbum::reference_tokens) {
        if a.contains(t) {
            na += 1;
        } else if b.contains(t) {
            nb += 1;
        }
    }
    match (na, nb) {
        (0, 0) => Err(Error::RatioUndefined),
        (_, 0) => Ok(f64::INFINITY),
        _ => Ok(na as f64 / nb as f64),
    }
}

/// How the generated side of a reward report is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Beam { beam: usize, min_len: usize, max_len: usize },
    /// One temperature-1 sample per album.
    Sample { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardRow {
    pub album_id: String,
    pub reference: f64,
    pub generated: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardReport {
    pub rows: Vec<RewardRow>,
    pub mean_reference: f64,
    pub mean_generated: f64,
}

impl RewardReport {
    /// `mean_reference - mean_generated`.
    pub fn gap(&self) -> f64 {
        self.mean_reference - self.mean_generated
    }
}

/// Learned story reward of each album's first reference and of a generated
/// story.
pub fn reward_report(policy: &Policy, reward: &RewardModel, albums: &[Album], generator: Generator) -> Result<RewardReport> {
    if albums.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = match generator {
        Generator::Sample { seed } => Some(rng_from_seed(seed)),
        Generator::Beam { .. } => None,
    };
    let mut rows = Vec::with_capacity(albums.len());
    for album in albums {
        let reference = album
            .references
            .first()
            .ok_or_else(|| Error::InvalidAlbum(alloc::format!("album {} has no references", album.id)))?;
        let story: Story = match (generator, rng.as_mut()) {
            (Generator::Beam { beam, min_len, max_len }, _) => policy.beam_search(&album.features, beam, min_len, max_len)?,
            (Generator::Sample { .. }, Some(rng)) => policy.sample_story(&album.features, rng, 1.0)?.0,
            _ => unreachable!("sampling always has an rng"),
        };
        rows.push(RewardRow {
            album_id: album.id.clone(),
            reference: reward.story_reward(reference, &album.features)?.0,
            generated: reward.story_reward(&story, &album.features)?.0,
        });
    }
    let n = rows.len() as f64;
    Ok(RewardReport {
        mean_reference: rows.iter().map(|r| r.reference).sum::<f64>() / n,
        mean_generated: rows.iter().map(|r| r.generated).sum::<f64>() / n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn album_with(sentences: &[&str]) -> RawAlbum {
        let words = |s: &str| s.split_whitespace().map(ToString::to_string).collect::<Vec<_>>();
        RawAlbum {
            id: "x".into(),
            features: core::array::from_fn(|_| vec![0.0]),
            references: vec![core::array::from_fn(|i| words(sentences[i % sentences.len()]))],
        }
    }

    #[test]
    fn ratio_hand_count() {
        let corpus = [album_with(&["he saw he", "she ran", "he and he she", "she sat he", "he"])];
        // he: 2 + 2 + 1 + 1 = 6, she: 1 + 1 + 1 = 3
        assert_eq!(corpus_ratio(&corpus, &["he"], &["she"]).unwrap(), 2.0);
        let corpus = [album_with(&["he she", "he she", "he she", "he she", "he she"])];
        assert_eq!(corpus_ratio(&corpus, &["he"], &["she"]).unwrap(), 1.0);
        assert_eq!(corpus_ratio(&corpus, &["he"], &["they"]).unwrap(), f64::INFINITY);
        assert!(matches!(corpus_ratio(&corpus, &["x"], &["y"]), Err(Error::RatioUndefined)));
        assert!(corpus_ratio(&corpus, &["he"], &["he"]).is_err());
    }
}
